"""Lowest eigenpairs, gauge fixing and metastable-state selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from couplinglab.circuits import (
    BasisSpec,
    ChargeLattice,
    FluxQubitParams,
    HamiltonianMatrix,
    PhaseGrid,
    PhaseQubitParams,
    build_flux_qubit_hamiltonian,
    build_phase_qubit_hamiltonian,
    derive_energies,
    phase_potential,
    potential_extrema,
)
from couplinglab.errors import (
    AmbiguousWellError,
    IncompatibleBasisError,
    InvalidParameterError,
    NoMetastableQubitError,
    NumericError,
)

DENSE_LIMIT = 4096
SOLVER_TOL = 1e-10
RESIDUAL_RTOL = 1e-8
ORTHO_TOL = 1e-10
DEGENERACY_RTOL = 1e-10
LOCALIZATION_THRESHOLD = 0.5
# grid points whose potential exceeds the shift by this much carry < 1e-12 of any
# wanted state, so the phase solves drop them (GHz)
FORBIDDEN_MARGIN_GHZ = 1000.0


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """Eigenpairs of a circuit Hamiltonian.

    ``states[:, i]`` is the eigenvector belonging to ``energies[i]``; energies ascend.
    ``qubit_indices`` names the columns playing |0> and |1>.
    """

    energies: np.ndarray
    states: np.ndarray
    basis: BasisSpec
    qubit_indices: tuple[int, int] = (0, 1)
    units: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.energies)

    @property
    def omega_q(self) -> float:
        i0, i1 = self.qubit_indices
        return float(self.energies[i1] - self.energies[i0])

    @property
    def qubit_states(self) -> tuple[np.ndarray, np.ndarray]:
        i0, i1 = self.qubit_indices
        return self.states[:, i0], self.states[:, i1]


def fix_gauge(states: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest-magnitude entry is real and positive."""
    states = np.array(states, copy=True)
    pivots = np.argmax(np.abs(states), axis=0)
    cols = np.arange(states.shape[1])
    ref = states[pivots, cols]
    # via the angle, since conj(z)/|z| overflows for subnormal entries
    phase = np.exp(-1j * np.angle(ref)) if np.iscomplexobj(ref) else np.sign(ref)
    states *= phase[None, :]
    if np.iscomplexobj(states):
        states[pivots, cols] = states[pivots, cols].real
    return states


def _order_degenerate(energies: np.ndarray, states: np.ndarray):
    """Within near-degenerate groups, order states by the index of their largest entry."""
    span = energies.max() - energies.min() if len(energies) > 1 else 0.0
    tol = DEGENERACY_RTOL * (span if span > 0 else max(abs(energies.max()), 1.0))
    order = np.arange(len(energies))
    start = 0
    while start < len(energies):
        stop = start + 1
        while stop < len(energies) and energies[stop] - energies[stop - 1] < tol:
            stop += 1
        if stop - start > 1:
            pivots = np.argmax(np.abs(states[:, start:stop]), axis=0)
            order[start:stop] = start + np.argsort(pivots, kind="stable")
        start = stop
    return energies[order], states[:, order]


def _as_real_if_possible(m: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(m):
        scale = np.abs(m).max()
        if np.abs(m.imag).max() <= 1e-14 * scale:
            return np.ascontiguousarray(m.real)
    return m


def _shift_invert(m: np.ndarray, k: int, sigma: float):
    """k eigenpairs closest to ``sigma`` via Lanczos on a dense LDL^T of (m - sigma)."""
    kind = "he" if np.iscomplexobj(m) else "sy"
    trf, trs, lwork = scipy.linalg.lapack.get_lapack_funcs(
        (kind + "trf", kind + "trs", kind + "trf_lwork"), (m,))
    # m is (conjugate-)symmetric, so its transpose is a free Fortran-ordered view
    shifted = (m.conj() if kind == "he" else m).T.copy(order="F")
    shifted[np.diag_indices_from(shifted)] -= sigma
    work, _ = lwork(m.shape[0], lower=1)
    ldu, ipiv, info = trf(shifted, lwork=int(work.real), lower=1, overwrite_a=1)
    if info != 0:
        raise np.linalg.LinAlgError(f"{kind}trf failed with info={info}")

    def solve(v):
        x, info = trs(ldu, ipiv, v, lower=1)
        if info != 0:
            raise np.linalg.LinAlgError(f"{kind}trs failed with info={info}")
        return x

    op = spla.LinearOperator(m.shape, matvec=solve, dtype=m.dtype)
    return spla.eigsh(m, k=k, sigma=sigma, which="LM", OPinv=op, tol=SOLVER_TOL * 1e-2)


def eigensolve(h: HamiltonianMatrix, k: int, sigma: float | None = None,
               support: np.ndarray | None = None) -> EigenSolution:
    """Lowest ``k`` eigenpairs of ``h``, or the ``k`` closest to ``sigma`` if given.

    Dense LAPACK is used up to ``DENSE_LIMIT``; larger problems, and any request with
    ``sigma``, go through ARPACK (Lanczos) in shift-invert mode.

    ``support`` optionally restricts the solve to a subset of basis states (boolean
    mask). The returned vectors are zero outside it and the residual is still
    checked against the full matrix, so an unjustified restriction is reported as
    a :class:`NumericError` rather than silently returning wrong pairs.

    Raises
    ------
    InvalidParameterError
        If ``k`` is not in [1, dim].
    NumericError
        If the solver fails or a returned pair violates the residual or
        orthonormality bounds.
    """
    m = _as_real_if_possible(h.entries)
    sub = m
    if support is not None:
        support = np.asarray(support, dtype=bool)
        if support.shape != (h.dim,):
            raise InvalidParameterError("support mask must match the matrix dimension")
        sub = m[np.ix_(support, support)]
    dim = sub.shape[0]
    if not 1 <= k <= dim:
        raise InvalidParameterError(f"k must lie in [1, {dim}], got {k}")
    try:
        if sigma is None and dim <= DENSE_LIMIT:
            w, v = scipy.linalg.eigh(sub, subset_by_index=[0, k - 1], check_finite=False)
        elif sigma is not None and (dim <= 256 or k >= dim - 1):
            w, v = scipy.linalg.eigh(sub, check_finite=False)
            pick = np.sort(np.argsort(np.abs(w - sigma), kind="stable")[:k])
            w, v = w[pick], v[:, pick]
        elif sigma is None:
            w, v = spla.eigsh(sub, k=k, which="SA", tol=SOLVER_TOL * 1e-2)
        else:
            w, v = _shift_invert(sub, k, sigma)
    except (spla.ArpackNoConvergence, spla.ArpackError, np.linalg.LinAlgError) as exc:
        raise NumericError(f"eigensolver failed for {h.label!r}: {exc}") from exc
    if support is not None:
        full = np.zeros((h.dim, k), dtype=v.dtype)
        full[support] = v
        v = full

    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    w, v = _order_degenerate(w, v)
    v = fix_gauge(v)

    norm = np.abs(m).sum(axis=1).max()
    residual = np.linalg.norm(m @ v - v * w[None, :], axis=0)
    if residual.max() > RESIDUAL_RTOL * max(norm, 1e-300):
        raise NumericError(
            f"residual {residual.max():.3e} exceeds {RESIDUAL_RTOL:g} * ||H|| = "
            f"{RESIDUAL_RTOL * norm:.3e}"
        )
    gram = v.conj().T @ v
    if np.abs(gram - np.eye(k)).max() > ORTHO_TOL:
        raise NumericError("returned eigenvectors are not orthonormal")
    return EigenSolution(w, v, h.basis, units=h.units, meta={"label": h.label, "sigma": sigma})


# ---------------------------------------------------------------------------
# phase qubit: metastable well
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WellRegion:
    """Interval bracketing the shallow minimum of the phase-qubit potential."""

    phi_lo: float
    phi_hi: float
    phi_min: float
    u_min: float
    barrier: float

    def contains(self, phi):
        return (phi > self.phi_lo) & (phi < self.phi_hi)


def find_shallow_well(p: PhaseQubitParams, grid: PhaseGrid) -> WellRegion:
    """Locate the local minimum with the higher potential and its bracketing maxima."""
    energies = derive_energies(p)
    ext = potential_extrema(energies, p.phi_e, grid.phi_min, grid.phi_max)
    if len(ext.minima) < 2:
        raise NoMetastableQubitError(
            f"only {len(ext.minima)} potential minimum at phi_e={p.phi_e}: no shallow well"
        )
    u = phase_potential(ext.minima, energies, p.phi_e)
    order = np.argsort(u)[::-1]
    shallow, runner_up = order[0], order[1]
    if u[shallow] - u[runner_up] <= 1e-9 * energies.ej:
        raise AmbiguousWellError(
            f"wells at phi={ext.minima[shallow]:.6f} and {ext.minima[runner_up]:.6f} are "
            f"degenerate at phi_e={p.phi_e}"
        )
    phi_star = ext.minima[shallow]
    below = ext.maxima[ext.maxima < phi_star]
    above = ext.maxima[ext.maxima > phi_star]
    lo = below.max() if len(below) else grid.phi_min
    hi = above.min() if len(above) else grid.phi_max
    walls = np.concatenate([below[-1:] if len(below) else [], above[:1] if len(above) else []])
    barrier = float(phase_potential(walls, energies, p.phi_e).min()) if len(walls) else math.inf
    return WellRegion(float(lo), float(hi), float(phi_star), float(u[shallow]), barrier)


def _kinetic_apply(grid: PhaseGrid, psi: np.ndarray) -> np.ndarray:
    """Apply n^2 = -d^2/dphi^2 to the columns of ``psi``."""
    if grid.scheme == "fourier":
        k = grid.wavenumbers()
        return np.fft.ifft(k[:, None] ** 2 * np.fft.fft(psi, axis=0), axis=0)
    padded = np.pad(psi, ((1, 1), (0, 0)))
    return (2 * psi - padded[:-2] - padded[2:]) / grid.spacing**2


def physical_energies(sol: EigenSolution, p: PhaseQubitParams) -> np.ndarray:
    """<T> + <U> per state, computed from the states alone (offset-free)."""
    grid = sol.basis
    energies = derive_energies(p)
    psi = sol.states
    norm = np.sum(np.abs(psi) ** 2, axis=0)
    kin = 4 * energies.ec * np.real(np.sum(psi.conj() * _kinetic_apply(grid, psi), axis=0))
    pot = phase_potential(grid.points, energies, p.phi_e)
    return (kin + pot @ np.abs(psi) ** 2) / norm


def localization_masses(sol: EigenSolution, region: WellRegion) -> np.ndarray:
    inside = region.contains(sol.basis.points)
    probs = np.abs(sol.states) ** 2
    return probs[inside].sum(axis=0) / probs.sum(axis=0)


def select_metastable_qubit(sol: EigenSolution, p: PhaseQubitParams,
                            threshold: float = LOCALIZATION_THRESHOLD) -> EigenSolution:
    """Designate the two lowest states trapped in the shallow well as the qubit.

    A state qualifies when at least ``threshold`` of its probability lies inside the
    well region and its energy lies below the lower of the two bracketing barriers.

    Raises
    ------
    AmbiguousWellError
        At exact well symmetry.
    NoMetastableQubitError
        If fewer than two states qualify.
    """
    if not isinstance(sol.basis, PhaseGrid):
        raise IncompatibleBasisError("metastable selection needs a phase-grid solution")
    if sol.k < 6:
        raise InvalidParameterError(f"need at least 6 eigenpairs, got {sol.k}")
    region = find_shallow_well(p, sol.basis)
    masses = localization_masses(sol, region)
    e_phys = physical_energies(sol, p)
    trapped = [i for i in range(sol.k) if masses[i] >= threshold and e_phys[i] < region.barrier]
    if len(trapped) < 2:
        raise NoMetastableQubitError(
            f"{len(trapped)} state(s) trapped in the shallow well at phi_e={p.phi_e}; "
            f"masses={np.round(masses, 3).tolist()}"
        )
    i0, i1 = sorted(trapped, key=lambda i: e_phys[i])[:2]
    meta = dict(sol.meta, well=region, masses=masses, physical_energies=e_phys)
    return replace(sol, qubit_indices=(int(i0), int(i1)), meta=meta)


def _allowed(p: PhaseQubitParams, grid: PhaseGrid, sigma: float) -> np.ndarray:
    pot = phase_potential(grid.points, derive_energies(p), p.phi_e)
    return pot < sigma + FORBIDDEN_MARGIN_GHZ


def solve_phase_qubit(p: PhaseQubitParams, grid: PhaseGrid | None = None,
                      k: int = 8) -> EigenSolution:
    """Build, solve near the shallow-well bottom, and select the metastable qubit."""
    h = build_phase_qubit_hamiltonian(p, grid)
    region = find_shallow_well(p, h.basis)
    sigma = region.u_min - 0.5
    sol = eigensolve(h, k, sigma=sigma, support=_allowed(p, h.basis, sigma))
    return select_metastable_qubit(sol, p)


def lowest_phase_energies(p: PhaseQubitParams, grid: PhaseGrid | None = None,
                          k: int = 3) -> np.ndarray:
    """Lowest ``k`` levels of the whole phase-qubit spectrum (deep well included)."""
    h = build_phase_qubit_hamiltonian(p, grid)
    floor = float(phase_potential(h.basis.points, derive_energies(p), p.phi_e).min())
    sigma = floor - 1.0
    return eigensolve(h, k, sigma=sigma, support=_allowed(p, h.basis, sigma)).energies


def solve_flux_qubit(p: FluxQubitParams, lattice: ChargeLattice | None = None,
                     k: int = 3) -> EigenSolution:
    return eigensolve(build_flux_qubit_hamiltonian(p, lattice), k)
