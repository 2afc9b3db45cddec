"""Spectrum of the resonant qubit + TLS pair and its two-photon line.

Both two-level systems use traceless bare Hamiltonians with sz = +1 on the excited
state:

    H = (w_q/2) sz_q + (w_T/2) sz_T + g_x sx_q sx_T + g_z sz_q sz_T     [GHz]

Levels are labeled 1..4 by ascending energy. A longitudinal term g_z shifts the
1->4 two-photon transition away from w_12 + w_13 by A = 4 g_z at resonance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from couplinglab.coupling import PauliCoupling
from couplinglab.errors import InvalidParameterError

_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_I2 = np.eye(2)


class NoResonanceWarning(UserWarning):
    """The qubit frequency never crosses the TLS frequency in a scan."""


@dataclass(frozen=True)
class CompositeSpectrum:
    energies: np.ndarray
    omega_q: float
    omega_t: float
    g_x: float
    g_z: float


@dataclass(frozen=True)
class TransitionSet:
    w12: float
    w13: float
    w14: float
    asymmetry: float

    @property
    def two_photon_offset(self) -> float:
        """Shift of the two-photon line (w14/2) from the one-photon midpoint."""
        return self.asymmetry / 2


def composite_hamiltonian(omega_q: float, omega_t: float, g: PauliCoupling) -> np.ndarray:
    return (
        0.5 * omega_q * np.kron(_SZ, _I2)
        + 0.5 * omega_t * np.kron(_I2, _SZ)
        + g.g_x * np.kron(_SX, _SX)
        + g.g_z * np.kron(_SZ, _SZ)
    )


def composite_spectrum(omega_q: float, omega_t: float, g: PauliCoupling) -> CompositeSpectrum:
    """Ascending eigenvalues E_1..E_4 of the coupled qubit-TLS Hamiltonian."""
    if not (omega_q > 0 and omega_t > 0):
        raise InvalidParameterError("qubit and TLS frequencies must be positive")
    energies = np.linalg.eigvalsh(composite_hamiltonian(omega_q, omega_t, g))
    return CompositeSpectrum(energies, omega_q, omega_t, g.g_x, g.g_z)


def two_photon_asymmetry(s: CompositeSpectrum) -> TransitionSet:
    e1, e2, e3, e4 = s.energies
    w12, w13, w14 = e2 - e1, e3 - e1, e4 - e1
    return TransitionSet(w12, w13, w14, w14 - w12 - w13)


@dataclass(frozen=True)
class AnticrossingScan:
    """Transition frequencies along a bias sweep.

    ``transitions[:, j]`` holds E_{j+2} - E_1 for j = 0, 1, 2.
    """

    bias: np.ndarray
    transitions: np.ndarray
    asymmetry: np.ndarray
    crosses_resonance: bool

    @property
    def gap(self) -> np.ndarray:
        """Splitting of the two middle branches, E_3 - E_2."""
        return self.transitions[:, 1] - self.transitions[:, 0]

    @property
    def min_gap(self) -> float:
        return float(self.gap.min())

    @property
    def resonant_index(self) -> int:
        return int(np.argmin(self.gap))

    @property
    def two_photon(self) -> np.ndarray:
        """Two-photon line position w14 / 2."""
        return self.transitions[:, 2] / 2


def anticrossing_scan(points: Sequence[tuple[float, float, PauliCoupling]],
                      omega_t: float) -> AnticrossingScan:
    """Composite transitions for each (bias, omega_q, coupling) point.

    Emits :class:`NoResonanceWarning` when omega_q stays on one side of omega_t.
    """
    points = sorted(points, key=lambda item: item[0])
    if not points:
        raise InvalidParameterError("anticrossing scan needs at least one point")
    bias, rows, asym = [], [], []
    for b, omega_q, g in points:
        lines = two_photon_asymmetry(composite_spectrum(omega_q, omega_t, g))
        bias.append(b)
        rows.append((lines.w12, lines.w13, lines.w14))
        asym.append(lines.asymmetry)
    detuning = np.array([omega_q - omega_t for _, omega_q, _ in points])
    crosses = bool(detuning.min() <= 0 <= detuning.max())
    if not crosses:
        warnings.warn(
            f"qubit frequency never crosses the TLS frequency {omega_t} GHz",
            NoResonanceWarning,
            stacklevel=2,
        )
    return AnticrossingScan(np.array(bias), np.array(rows), np.array(asym), crosses)
