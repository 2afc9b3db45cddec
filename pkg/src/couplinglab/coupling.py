"""Qubit-TLS coupling factors and physical coupling strengths.

The interaction of a TLS with the circuit operator O is reduced to the qubit
subspace as

    H_I = v_k (o_x cos(theta) sx_q sx_T + o_z sin(theta) sz_q sz_T),

with o_x the transverse and o_z the longitudinal factor of O.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from couplinglab.circuits import (
    CONSTANTS,
    PHI0,
    ChargeLattice,
    FluxQubitParams,
    HamiltonianMatrix,
    OperatorKind,
    PhaseQubitParams,
    build_operator,
    charge_state_on_grid,
    joules_to_ghz,
)
from couplinglab.errors import IncompatibleBasisError, InvalidParameterError
from couplinglab.spectral import EigenSolution


@dataclass(frozen=True)
class TLSParams:
    """Two-level defect with asymmetry ``epsilon`` and tunneling ``delta`` (GHz)."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.delta >= 0:
            raise InvalidParameterError(f"delta must be >= 0, got {self.delta!r}")
        if self.omega_t <= 0:
            raise InvalidParameterError("TLS splitting must be positive")

    @property
    def theta(self) -> float:
        """Mixing angle with tan(theta) = epsilon / delta; cos(theta) >= 0."""
        return math.atan2(self.epsilon, self.delta)

    @property
    def omega_t(self) -> float:
        return math.hypot(self.epsilon, self.delta)


@dataclass(frozen=True)
class CriticalCurrent:
    """Critical-current fluctuator; ``delta_i0`` in amperes."""

    delta_i0: float


@dataclass(frozen=True)
class Dipole:
    """Charged dipole of length ``d`` in a junction barrier of thickness ``x`` (meters)."""

    d: float
    x: float
    eta: float = 0.0

    def __post_init__(self):
        if not self.x > 0:
            raise InvalidParameterError("barrier thickness x must be positive")
        if not self.d >= 0:
            raise InvalidParameterError("dipole length d must be non-negative")


@dataclass(frozen=True)
class FluxFluctuator:
    """Loop-flux fluctuator with step ``delta_phi_e`` in units of phi0."""

    delta_phi_e: float


CouplingModel = Union[CriticalCurrent, Dipole, FluxFluctuator]

MODEL_OPERATORS = {
    CriticalCurrent: {OperatorKind.COS_PHASE, OperatorKind.COS_J3, OperatorKind.COS_J1},
    FluxFluctuator: {OperatorKind.PHASE, OperatorKind.SIN_J3},
    Dipole: {OperatorKind.CHARGE, OperatorKind.CHARGE_M},
}


@dataclass(frozen=True)
class CouplingFactors:
    o_x: float
    o_z: float
    operator_kind: OperatorKind | None = None


@dataclass(frozen=True)
class PauliCoupling:
    """Coefficients (GHz) of sx_q sx_T and sz_q sz_T."""

    g_x: float
    g_z: float


def matrix_elements(sol: EigenSolution, op: HamiltonianMatrix) -> np.ndarray:
    """2x2 block <i|O|j> of ``op`` on the designated qubit states."""
    if sol.basis != op.basis:
        raise IncompatibleBasisError(
            f"operator basis {op.basis!r} differs from solution basis {sol.basis!r}"
        )
    psi = np.column_stack(sol.qubit_states)
    return psi.conj().T @ (op.entries @ psi)


def coupling_factors(sol: EigenSolution, op: HamiltonianMatrix) -> CouplingFactors:
    """Transverse and longitudinal factors of ``op`` between the qubit states.

    o_z = |O_11 - O_00| / 2 and o_x = |O_10|. For real wavefunctions and a real
    operator O_10 = O_01 is real and o_x equals |O_10 + O_01| / 2; the modulus form
    keeps that value for any eigenvector phase convention.
    """
    block = matrix_elements(sol, op)
    o_x = float(abs(block[1, 0]))
    o_z = float(abs(block[1, 1].real - block[0, 0].real) / 2)
    try:
        kind = OperatorKind(op.label)
    except ValueError:
        kind = None
    return CouplingFactors(o_x, o_z, kind)


def model_prefactor(model: CouplingModel, circuit: PhaseQubitParams | FluxQubitParams) -> float:
    """Coupling prefactor v_k / h in GHz, sign included.

    Phase qubit:
        critical current  -dI0 phi0 / 2pi
        dipole            2 e^2 d / (C x) * cos(eta)
        flux fluctuator   -(dPhi / L) (phi0 / 2pi)^2, with dPhi = delta_phi_e * phi0
    Flux qubit:
        critical current  -alpha phi0 dI0 / 2pi
        flux fluctuator   2 pi alpha E_J delta_phi_e
    The flux-qubit dipole coupling depends on the eigenstates; see
    :func:`dipole_coupling_flux`.
    """
    if isinstance(circuit, PhaseQubitParams):
        if isinstance(model, CriticalCurrent):
            return joules_to_ghz(-model.delta_i0 * PHI0 / (2 * math.pi))
        if isinstance(model, Dipole):
            e = CONSTANTS.e_charge
            value = 2 * e**2 * model.d / (circuit.capacitance * model.x)
            return joules_to_ghz(value) * math.cos(model.eta)
        if isinstance(model, FluxFluctuator):
            flux = model.delta_phi_e * PHI0
            return joules_to_ghz(-(flux / circuit.inductance) * (PHI0 / (2 * math.pi)) ** 2)
    elif isinstance(circuit, FluxQubitParams):
        if isinstance(model, CriticalCurrent):
            return joules_to_ghz(-circuit.alpha * PHI0 * model.delta_i0 / (2 * math.pi))
        if isinstance(model, FluxFluctuator):
            return 2 * math.pi * circuit.alpha * circuit.ej_ghz * model.delta_phi_e
        if isinstance(model, Dipole):
            raise InvalidParameterError(
                "flux-qubit dipole coupling is state dependent; use dipole_coupling_flux"
            )
    raise InvalidParameterError(
        f"unsupported model/circuit combination: {type(model).__name__} / "
        f"{type(circuit).__name__}"
    )


def pauli_coupling(model: CouplingModel, factors: CouplingFactors, tls: TLSParams,
                   prefactor: float) -> PauliCoupling:
    """g_x = v o_x cos(theta), g_z = v o_z sin(theta); a dipole has g_z = 0."""
    allowed = MODEL_OPERATORS[type(model)]
    if factors.operator_kind is not None and factors.operator_kind not in allowed:
        raise InvalidParameterError(
            f"{factors.operator_kind.name} is not the operator of a {type(model).__name__} model"
        )
    g_x = prefactor * factors.o_x * math.cos(tls.theta)
    if isinstance(model, Dipole):
        return PauliCoupling(g_x, 0.0)
    return PauliCoupling(g_x, prefactor * factors.o_z * math.sin(tls.theta))


def dipole_coupling_flux(sol: EigenSolution, p: FluxQubitParams, model: Dipole,
                         tls: TLSParams) -> PauliCoupling:
    """Dipole coupling of a TLS in the small junction of a flux qubit.

    Uses hbar*omega_q |<0|phi_m|1>| = 2 E_m |<0|n_m|1>|, which follows from
    d(phi_m)/dt = 2 E_m n_m / hbar. The result is purely transverse.
    """
    if not isinstance(sol.basis, ChargeLattice):
        raise IncompatibleBasisError("flux-qubit dipole coupling needs a charge-lattice solution")
    n_m = build_operator(OperatorKind.CHARGE_M, sol.basis)
    element = abs(matrix_elements(sol, n_m)[0, 1])
    energy_ghz = 2 * p.em * element * p.ej_ghz
    g_x = (model.d / model.x) * math.cos(model.eta) * math.cos(tls.theta) * energy_ghz
    return PauliCoupling(g_x, 0.0)


def phase_m_element(sol: EigenSolution, n_grid: int = 256) -> complex:
    """<0|phi_m|1> evaluated on a real-space grid, phi_m taken in (-pi, pi).

    Independent of the charge-basis identity used by :func:`dipole_coupling_flux`;
    the two agree when the qubit states vanish at the branch cut.
    """
    if not isinstance(sol.basis, ChargeLattice):
        raise IncompatibleBasisError("phi_m element needs a charge-lattice solution")
    psi0, psi1 = sol.qubit_states
    phi_m, g0 = charge_state_on_grid(psi0, sol.basis, n_grid)
    _, g1 = charge_state_on_grid(psi1, sol.basis, n_grid)
    return complex(np.sum(g0.conj() * phi_m * g1))
