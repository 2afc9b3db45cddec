r"""Hamiltonians and coupling operators for the two circuits.

Phase qubit
    :math:`H = 4E_c\hat n^2 + \tfrac{E_L}{2}(\hat\phi - 2\pi\phi_e)^2 - E_J\cos\hat\phi`
    on a uniform phase grid, energies in GHz (energy / h).

Three-junction flux qubit
    :math:`H = E_p\hat n_p^2 + E_m\hat n_m^2 - 2E_J\cos\hat\phi_p\cos\hat\phi_m
    - \alpha E_J\cos(2\pi f + 2\hat\phi_m) + E_J(2+\alpha)`
    on the integer charge lattice :math:`(n_p, n_m)`, energies in units of E_J.

Charge-basis convention: :math:`\langle\phi|n\rangle = e^{in\phi}/\sqrt{2\pi}`, so
:math:`e^{i\phi}` raises :math:`n` by one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np
import scipy.linalg
from scipy.optimize import brentq

from couplinglab.errors import DomainError, IncompatibleBasisError, InvalidParameterError

HERMITIAN_RTOL = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    """Exact SI values (2019 redefinition, identical to CODATA 2018)."""

    e_charge: float = 1.602176634e-19
    h_planck: float = 6.62607015e-34

    @property
    def flux_quantum(self) -> float:
        return self.h_planck / (2.0 * self.e_charge)


CONSTANTS = PhysicalConstants()
PHI0 = CONSTANTS.flux_quantum


def joules_to_ghz(energy: float) -> float:
    return energy / CONSTANTS.h_planck / 1e9


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


class PhaseEnergies(NamedTuple):
    """Characteristic energies of a phase qubit, in GHz."""

    ec: float
    ej: float
    el: float

    @property
    def beta(self) -> float:
        """Screening parameter 2*pi*L*I0/phi0, equal to E_J / E_L."""
        return self.ej / self.el


@dataclass(frozen=True)
class PhaseQubitParams:
    """Flux-biased phase qubit.

    Parameters
    ----------
    capacitance, inductance, critical_current:
        Junction capacitance (F), loop inductance (H), critical current (A).
    phi_e:
        External flux in units of phi0.
    """

    capacitance: float = 850e-15
    inductance: float = 720e-12
    critical_current: float = 984e-9
    phi_e: float = 0.58

    def __post_init__(self):
        for name in ("capacitance", "inductance", "critical_current"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be positive, got {value!r}")
        if not math.isfinite(self.phi_e):
            raise InvalidParameterError(f"phi_e must be finite, got {self.phi_e!r}")
        beta = 2 * math.pi * self.inductance * self.critical_current / PHI0
        if beta <= 1:
            raise InvalidParameterError(
                f"screening parameter beta = {beta:.4g} <= 1: no metastable well"
            )

    @property
    def energies(self) -> PhaseEnergies:
        return derive_energies(self)


def derive_energies(p: PhaseQubitParams) -> PhaseEnergies:
    """Return (E_c, E_J, E_L) / h in GHz for a phase qubit."""
    e, phi0 = CONSTANTS.e_charge, PHI0
    ec = e**2 / (2 * p.capacitance)
    ej = p.critical_current * phi0 / (2 * math.pi)
    el = (phi0 / (2 * math.pi)) ** 2 / p.inductance
    return PhaseEnergies(joules_to_ghz(ec), joules_to_ghz(ej), joules_to_ghz(el))


@dataclass(frozen=True)
class FluxQubitParams:
    """Three-junction flux qubit; all energies are measured in E_J.

    ``ej_ghz`` is the absolute E_J / h used only where a physical coupling in GHz is
    requested. The default of 100 GHz is an assumption, not a measured value.
    """

    ej_over_ec: float = 40.0
    alpha: float = 0.68
    f: float = 0.5
    ej_ghz: float = 100.0

    def __post_init__(self):
        if not self.ej_over_ec > 0:
            raise InvalidParameterError(f"ej_over_ec must be positive, got {self.ej_over_ec!r}")
        if not 0.5 < self.alpha < 1:
            raise InvalidParameterError(f"alpha must lie in (0.5, 1), got {self.alpha!r}")
        if not math.isfinite(self.f):
            raise InvalidParameterError(f"f must be finite, got {self.f!r}")
        if not self.ej_ghz > 0:
            raise InvalidParameterError(f"ej_ghz must be positive, got {self.ej_ghz!r}")

    @property
    def ec(self) -> float:
        return 1.0 / self.ej_over_ec

    @property
    def ep(self) -> float:
        return 2.0 * self.ec

    @property
    def em(self) -> float:
        return self.ep / (1 + 2 * self.alpha)


# ---------------------------------------------------------------------------
# bases
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid on [phi_min, phi_max] (both endpoints included).

    ``scheme`` selects the kinetic discretization: ``"fourier"`` (spectral, default)
    or ``"fd2"`` (second-order central differences).
    """

    phi_min: float
    phi_max: float
    n_points: int = 4096
    scheme: str = "fourier"

    def __post_init__(self):
        if not self.phi_max > self.phi_min:
            raise InvalidParameterError("phi_max must exceed phi_min")
        if self.n_points < 2:
            raise InvalidParameterError("a phase grid needs at least two points")
        if self.scheme not in ("fourier", "fd2"):
            raise InvalidParameterError(f"unknown scheme {self.scheme!r}")

    @classmethod
    def centered(cls, phi_e: float, n_points: int = 4096, scheme: str = "fourier") -> PhaseGrid:
        """Default window [2*pi*phi_e - 2*pi, 2*pi*phi_e + 2*pi]."""
        center = 2 * math.pi * phi_e
        return cls(center - 2 * math.pi, center + 2 * math.pi, n_points, scheme)

    @property
    def dim(self) -> int:
        return self.n_points

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.phi_min, self.phi_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.phi_max - self.phi_min) / (self.n_points - 1)

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers of the periodic extension, in FFT order."""
        return 2 * math.pi * np.fft.fftfreq(self.n_points, d=self.spacing)


@dataclass(frozen=True)
class ChargeLattice:
    """Integer charge lattice for (n_p, n_m), |n_p| <= n_p_cutoff, |n_m| <= n_m_cutoff.

    With ``even_sector=True`` (default) only states with n_p + n_m even are kept.
    That is the sector of wavefunctions that are 2*pi-periodic in each junction phase
    phi_1 = phi_p + phi_m and phi_2 = phi_p - phi_m. The odd sector is an unphysical
    copy that nearly duplicates every level.
    """

    n_p_cutoff: int = 16
    n_m_cutoff: int = 16
    even_sector: bool = True

    def __post_init__(self):
        if self.n_p_cutoff < 4 or self.n_m_cutoff < 4:
            raise InvalidParameterError("charge cutoffs must be at least 4")

    @cached_property
    def charges(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays (n_p, n_m) listing the basis states in matrix order."""
        n_p, n_m = np.meshgrid(
            np.arange(-self.n_p_cutoff, self.n_p_cutoff + 1),
            np.arange(-self.n_m_cutoff, self.n_m_cutoff + 1),
            indexing="ij",
        )
        n_p, n_m = n_p.ravel(), n_m.ravel()
        if self.even_sector:
            keep = (n_p + n_m) % 2 == 0
            n_p, n_m = n_p[keep], n_m[keep]
        return n_p, n_m

    @property
    def dim(self) -> int:
        return len(self.charges[0])

    @cached_property
    def _index(self) -> np.ndarray:
        table = -np.ones((2 * self.n_p_cutoff + 1, 2 * self.n_m_cutoff + 1), dtype=int)
        n_p, n_m = self.charges
        table[n_p + self.n_p_cutoff, n_m + self.n_m_cutoff] = np.arange(self.dim)
        return table

    def shift_pairs(self, dp: int, dm: int) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs (target, source) for the map (n_p, n_m) -> (n_p+dp, n_m+dm)."""
        n_p, n_m = self.charges
        tp, tm = n_p + dp, n_m + dm
        inside = (np.abs(tp) <= self.n_p_cutoff) & (np.abs(tm) <= self.n_m_cutoff)
        target = self._index[tp[inside] + self.n_p_cutoff, tm[inside] + self.n_m_cutoff]
        source = np.flatnonzero(inside)
        valid = target >= 0
        return target[valid], source[valid]

    def shift_matrix(self, dp: int, dm: int) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        target, source = self.shift_pairs(dp, dm)
        out[target, source] = 1.0
        return out


BasisSpec = Union[PhaseGrid, ChargeLattice]


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    """max|M - M^dagger| <= rtol * max|M|."""
    scale = np.abs(m).max() if m.size else 0.0
    return scale == 0 or np.abs(m - m.conj().T).max() <= rtol * scale


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """Hermitian matrix tied to a basis. Also used for coupling operators.

    ``check=False`` skips the O(n^2) Hermiticity test; builders use it when the
    construction is symmetric by design.
    """

    entries: np.ndarray
    basis: BasisSpec
    label: str = ""
    units: str = ""
    meta: dict = field(default_factory=dict)
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = np.asarray(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidParameterError(f"matrix must be square, got shape {m.shape}")
        if m.shape[0] != self.basis.dim:
            raise IncompatibleBasisError(
                f"matrix dimension {m.shape[0]} does not match basis dimension {self.basis.dim}"
            )
        if self.check and not is_hermitian(m):
            raise InvalidParameterError(f"matrix {self.label!r} is not Hermitian")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)


def phase_potential(phi, energies: PhaseEnergies, phi_e: float):
    """U(phi) = (E_L/2)(phi - 2*pi*phi_e)^2 - E_J cos(phi), in GHz."""
    phi = np.asarray(phi, dtype=float)
    return 0.5 * energies.el * (phi - 2 * np.pi * phi_e) ** 2 - energies.ej * np.cos(phi)


class PotentialExtrema(NamedTuple):
    minima: np.ndarray
    maxima: np.ndarray


def potential_extrema(energies: PhaseEnergies, phi_e: float, lo: float, hi: float,
                      n_scan: int = 4096) -> PotentialExtrema:
    """Stationary points of the phase-qubit potential inside (lo, hi).

    Roots of U'(phi) are bracketed on a scan grid and refined with Brent's method.
    """
    x0 = 2 * math.pi * phi_e

    def slope(phi):
        return energies.el * (phi - x0) + energies.ej * np.sin(phi)

    scan = np.linspace(lo, hi, n_scan)
    ds = slope(scan)
    minima, maxima = [], []
    for i in np.flatnonzero(np.sign(ds[:-1]) != np.sign(ds[1:])):
        if ds[i] == 0:
            root = scan[i]
        else:
            root = brentq(slope, scan[i], scan[i + 1], xtol=1e-14, rtol=1e-15)
        curvature = energies.el + energies.ej * math.cos(root)
        (minima if curvature > 0 else maxima).append(root)
    return PotentialExtrema(np.array(minima), np.array(maxima))


def _fourier_kinetic(grid: PhaseGrid) -> np.ndarray:
    """Matrix of n^2 = -d^2/dphi^2 by spectral differentiation."""
    k = grid.wavenumbers()
    return scipy.linalg.circulant(np.fft.ifft(k**2).real)


@lru_cache(maxsize=4)
def _fourier_charge_cached(n_points: int, spacing: float) -> np.ndarray:
    k = 2 * math.pi * np.fft.fftfreq(n_points, d=spacing)
    if n_points % 2 == 0:
        k[n_points // 2] = 0.0
    out = scipy.linalg.circulant(np.fft.ifft(k))
    out.flags.writeable = False
    return out


def _fourier_charge(grid: PhaseGrid) -> np.ndarray:
    """Matrix of n = -i d/dphi by spectral differentiation (Nyquist mode dropped).

    The matrix depends only on (n_points, spacing), so it is shared between grids.
    """
    return _fourier_charge_cached(grid.n_points, grid.spacing)


def _fd2_kinetic(grid: PhaseGrid) -> np.ndarray:
    n, dx = grid.n_points, grid.spacing
    out = np.zeros((n, n))
    idx = np.arange(n)
    out[idx, idx] = 2.0 / dx**2
    out[idx[:-1], idx[1:]] = -1.0 / dx**2
    out[idx[1:], idx[:-1]] = -1.0 / dx**2
    return out


def _fd2_charge(grid: PhaseGrid) -> np.ndarray:
    n, dx = grid.n_points, grid.spacing
    out = np.zeros((n, n), dtype=complex)
    idx = np.arange(n - 1)
    out[idx, idx + 1] = -0.5j / dx
    out[idx + 1, idx] = 0.5j / dx
    return out


def phase_hamiltonian_matrix(energies: PhaseEnergies, phi_e: float, grid: PhaseGrid,
                             label: str = "phase qubit") -> HamiltonianMatrix:
    """Discretize the phase-qubit Hamiltonian for arbitrary (E_c, E_J, E_L).

    No well-structure checks are made, so this also serves the E_J = 0 oscillator.
    """
    if grid.scheme == "fourier":
        kinetic = _fourier_kinetic(grid)
    else:
        kinetic = _fd2_kinetic(grid)
    h = 4.0 * energies.ec * kinetic
    h[np.diag_indices_from(h)] += phase_potential(grid.points, energies, phi_e)
    return HamiltonianMatrix(h, grid, label=label, units="GHz",
                             meta={"phi_e": phi_e, "energies": energies}, check=False)


def build_phase_qubit_hamiltonian(p: PhaseQubitParams, grid: PhaseGrid | None = None
                                  ) -> HamiltonianMatrix:
    """Phase-qubit Hamiltonian in GHz on ``grid`` (default: centered 4096-point grid).

    Raises
    ------
    DomainError
        If the grid misses a local minimum of the potential inside the default
        window, or holds fewer than two minima.
    """
    if grid is None:
        grid = PhaseGrid.centered(p.phi_e)
    if not isinstance(grid, PhaseGrid):
        raise IncompatibleBasisError("phase qubit requires a PhaseGrid basis")
    if grid.n_points < 64:
        raise InvalidParameterError("phase grid needs at least 64 points")
    energies = derive_energies(p)
    x0 = 2 * math.pi * p.phi_e
    window = potential_extrema(energies, p.phi_e, x0 - 2 * math.pi, x0 + 2 * math.pi)
    inside = potential_extrema(energies, p.phi_e, grid.phi_min, grid.phi_max)
    if len(inside.minima) < 2:
        raise DomainError(
            f"grid [{grid.phi_min:.4g}, {grid.phi_max:.4g}] holds {len(inside.minima)} "
            f"potential minima at phi_e={p.phi_e}; two are required"
        )
    missing = [m for m in window.minima if not grid.phi_min < m < grid.phi_max]
    if missing:
        raise DomainError(f"grid misses potential minima at phi = {missing}")
    return phase_hamiltonian_matrix(energies, p.phi_e, grid)


def _junction3_shift(lattice: ChargeLattice, f: float) -> np.ndarray:
    """Matrix of exp(i(2*pi*f + 2*phi_m)): n_m -> n_m + 2 with phase exp(i*2*pi*f)."""
    return np.exp(2j * np.pi * f) * lattice.shift_matrix(0, 2)


def build_flux_qubit_hamiltonian(p: FluxQubitParams, lattice: ChargeLattice | None = None
                                 ) -> HamiltonianMatrix:
    """Reduced flux-qubit Hamiltonian on the charge lattice, in units of E_J."""
    if lattice is None:
        lattice = ChargeLattice()
    if not isinstance(lattice, ChargeLattice):
        raise IncompatibleBasisError("flux qubit requires a ChargeLattice basis")
    n_p, n_m = lattice.charges
    h = np.zeros((lattice.dim, lattice.dim), dtype=complex)
    h[np.diag_indices_from(h)] = p.ep * n_p**2 + p.em * n_m**2 + (2 + p.alpha)
    # -2 cos(phi_p) cos(phi_m): four diagonal hops of amplitude -1/2
    for dp in (1, -1):
        for dm in (1, -1):
            target, source = lattice.shift_pairs(dp, dm)
            h[target, source] += -0.5
    up = _junction3_shift(lattice, p.f)
    h += -0.5 * p.alpha * (up + up.conj().T)
    return HamiltonianMatrix(h, lattice, label="flux qubit", units="E_J",
                             meta={"f": p.f, "alpha": p.alpha, "ej_over_ec": p.ej_over_ec})


def parity_operator(lattice: ChargeLattice) -> np.ndarray:
    """Permutation matrix of n_m -> -n_m (phi_m -> -phi_m)."""
    n_p, n_m = lattice.charges
    target = lattice._index[n_p + lattice.n_p_cutoff, -n_m + lattice.n_m_cutoff]
    out = np.zeros((lattice.dim, lattice.dim))
    out[target, np.arange(lattice.dim)] = 1.0
    return out


class OperatorKind(enum.Enum):
    """Operators through which a TLS can couple to the circuit."""

    COS_PHASE = "cos_phase"   # cos(phi), phase qubit
    PHASE = "phase"           # phi, phase qubit
    CHARGE = "charge"         # -i d/dphi, phase qubit
    COS_J3 = "cos_j3"         # cos(2 pi f + 2 phi_m), flux qubit
    SIN_J3 = "sin_j3"         # sin(2 pi f + 2 phi_m), flux qubit
    CHARGE_M = "charge_m"     # n_m, flux qubit
    COS_J1 = "cos_j1"         # cos(phi_p + phi_m), flux qubit

    @property
    def basis_type(self) -> type:
        if self in (OperatorKind.COS_PHASE, OperatorKind.PHASE, OperatorKind.CHARGE):
            return PhaseGrid
        return ChargeLattice


def build_operator(kind: OperatorKind, basis: BasisSpec, f: float = 0.5) -> HamiltonianMatrix:
    """Matrix of ``kind`` in ``basis``; ``f`` only matters for the junction-3 operators."""
    kind = OperatorKind(kind)
    if not isinstance(basis, kind.basis_type):
        raise IncompatibleBasisError(
            f"{kind.name} needs a {kind.basis_type.__name__}, got {type(basis).__name__}"
        )
    if kind is OperatorKind.COS_PHASE:
        m = np.diag(np.cos(basis.points))
    elif kind is OperatorKind.PHASE:
        m = np.diag(basis.points)
    elif kind is OperatorKind.CHARGE:
        m = _fourier_charge(basis) if basis.scheme == "fourier" else _fd2_charge(basis)
    elif kind is OperatorKind.CHARGE_M:
        m = np.diag(basis.charges[1].astype(float))
    elif kind is OperatorKind.COS_J1:
        up = basis.shift_matrix(1, 1)
        m = 0.5 * (up + up.T)
    else:
        up = _junction3_shift(basis, f)
        if kind is OperatorKind.COS_J3:
            m = 0.5 * (up + up.conj().T)
        else:
            m = (up - up.conj().T) / 2j
    units = "" if kind is not OperatorKind.PHASE else "rad"
    return HamiltonianMatrix(m, basis, label=kind.value, units=units, meta={"f": f}, check=False)


def charge_state_on_grid(state: np.ndarray, lattice: ChargeLattice, n_grid: int = 256):
    """Evaluate a charge-lattice state on a real-space grid.

    For the even sector the grid covers the (phi_1, phi_2) torus [-pi, pi)^2 and
    phi_m = (phi_1 - phi_2)/2 lies in (-pi, pi). For the full lattice the grid covers
    the (phi_p, phi_m) torus directly. Returns ``(phi_m, psi)`` with ``psi`` normalized
    so that sum(|psi|^2) == 1.
    """
    n_p, n_m = lattice.charges
    coeffs = np.zeros((n_grid, n_grid), dtype=complex)
    if lattice.even_sector:
        k1, k2 = (n_p + n_m) // 2, (n_p - n_m) // 2
    else:
        k1, k2 = n_p, n_m
    if np.abs(k1).max() >= n_grid // 2 or np.abs(k2).max() >= n_grid // 2:
        raise InvalidParameterError("n_grid too small for the lattice cutoffs")
    coeffs[k1 % n_grid, k2 % n_grid] = state
    psi = np.fft.ifft2(coeffs)
    psi /= np.linalg.norm(psi)
    axis = 2 * np.pi * np.fft.fftfreq(n_grid)  # angles in [-pi, pi), FFT order
    a, b = np.meshgrid(axis, axis, indexing="ij")
    phi_m = (a - b) / 2 if lattice.even_sector else b
    return phi_m, psi


# ---------------------------------------------------------------------------
# debugging dump
# ---------------------------------------------------------------------------


def dump_matrix(matrix: HamiltonianMatrix | np.ndarray, path) -> None:
    """Write a matrix as text: one row per line, entries as ``re+imj``."""
    m = matrix.entries if isinstance(matrix, HamiltonianMatrix) else np.asarray(matrix)
    with open(path, "w") as fh:
        for row in m:
            fh.write(" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row.astype(complex)))
            fh.write("\n")


def load_matrix(path) -> np.ndarray:
    rows = Path(path).read_text().splitlines()
    return np.array([[complex(tok) for tok in line.split()] for line in rows if line.strip()])
