"""Bias sweeps, convergence studies and CSV/SVG output."""

from __future__ import annotations

import io
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

import couplinglab
from couplinglab.circuits import (
    ChargeLattice,
    FluxQubitParams,
    OperatorKind,
    PhaseGrid,
    PhaseQubitParams,
    build_operator,
)
from couplinglab.coupling import (
    CouplingModel,
    CriticalCurrent,
    Dipole,
    FluxFluctuator,
    PauliCoupling,
    TLSParams,
    coupling_factors,
    dipole_coupling_flux,
    matrix_elements,
    model_prefactor,
    pauli_coupling,
)
from couplinglab.errors import (
    DomainError,
    EmptyResultError,
    InvalidParameterError,
    NoMetastableQubitError,
)
from couplinglab.spectral import (
    EigenSolution,
    lowest_phase_energies,
    solve_flux_qubit,
    solve_phase_qubit,
)

MODELS = ("critical_current", "dipole", "flux_fluctuator")

PHASE_OPERATORS = {
    "critical_current": OperatorKind.COS_PHASE,
    "dipole": OperatorKind.CHARGE,
    "flux_fluctuator": OperatorKind.PHASE,
}
FLUX_OPERATORS = {
    "critical_current": OperatorKind.COS_J3,
    "dipole": OperatorKind.CHARGE_M,
    "flux_fluctuator": OperatorKind.SIN_J3,
}
PHASE_WINDOW = (0.4, 0.7)
FLUX_WINDOW = (0.45, 0.55)


class SweepWindowWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass


def _worker_count() -> int:
    cap = os.environ.get("COUPLINGLAB_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def _parallel_map(fn: Callable, items: Sequence) -> list:
    workers = min(_worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# configuration and tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """What to sweep. ``circuit`` fixes every parameter except the bias."""

    circuit: PhaseQubitParams | FluxQubitParams
    start: float
    stop: float
    n_points: int = 51
    models: tuple[str, ...] = MODELS
    phase_points: int = 4096
    phase_scheme: str = "fourier"
    lattice: ChargeLattice = field(default_factory=ChargeLattice)

    def __post_init__(self):
        if self.n_points < 2:
            raise InvalidParameterError("a sweep needs at least two points")
        if not self.start < self.stop:
            raise InvalidParameterError("sweep start must be below stop")
        unknown = set(self.models) - set(MODELS)
        if unknown or not self.models:
            raise InvalidParameterError(f"unknown or empty model list: {sorted(unknown)}")
        lo, hi = PHASE_WINDOW if isinstance(self.circuit, PhaseQubitParams) else FLUX_WINDOW
        if self.start < lo or self.stop > hi:
            warnings.warn(
                f"sweep [{self.start}, {self.stop}] leaves the validity window [{lo}, {hi}]",
                SweepWindowWarning,
                stacklevel=3,
            )

    @property
    def bias(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n_points)

    @property
    def ordered_models(self) -> tuple[str, ...]:
        return tuple(m for m in MODELS if m in self.models)


@dataclass(eq=False)
class SweepTable:
    """Rectangular float table; first column is the (strictly increasing) bias."""

    columns: tuple[str, ...]
    data: np.ndarray
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(self.columns))
        if len(self.data) > 1 and not np.all(np.diff(self.data[:, 0]) > 0):
            raise InvalidParameterError("bias column must be strictly increasing")
        for i, name in enumerate(self.columns):
            if name.startswith(("ox_", "oz_")) and np.any(self.data[:, i] < 0):
                raise InvalidParameterError(f"factor column {name} has negative entries")

    def __eq__(self, other):
        if not isinstance(other, SweepTable):
            return NotImplemented
        return (
            self.columns == other.columns
            and self.metadata == other.metadata
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data, equal_nan=True))
        )

    def __len__(self):
        return len(self.data)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def successful(self) -> SweepTable:
        """Rows whose ``ok`` flag is set (all rows if there is no flag)."""
        if "ok" not in self.columns:
            return self
        return SweepTable(self.columns, self.data[self.column("ok") == 1], dict(self.metadata))

    def body(self) -> str:
        """Header and data rows: the deterministic part of the CSV."""
        out = io.StringIO()
        out.write(",".join(self.columns) + "\n")
        for row in self.data:
            out.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        return out.getvalue()

    def to_csv(self, path=None) -> str:
        head = "".join(f"# {k}={v}\n" for k, v in self.metadata.items())
        text = head + self.body()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, source) -> SweepTable:
        """Parse CSV text, or the file at ``source`` if it is a path."""
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            source = Path(source).read_text()
        metadata, lines = {}, []
        for line in source.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key] = value
            elif line.strip():
                lines.append(line)
        if not lines:
            raise InvalidParameterError("CSV has no header row")
        columns = tuple(lines[0].split(","))
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        return cls(columns, data.reshape(-1, len(columns)), metadata)


def _metadata(cfg: SweepConfig, units: str) -> dict[str, str]:
    meta = {"couplinglab_version": couplinglab.__version__}
    circuit = cfg.circuit
    if isinstance(circuit, PhaseQubitParams):
        meta.update(
            circuit="phase",
            capacitance_F=repr(circuit.capacitance),
            inductance_H=repr(circuit.inductance),
            critical_current_A=repr(circuit.critical_current),
            basis=f"PhaseGrid(n_points={cfg.phase_points}, scheme={cfg.phase_scheme}, centered)",
        )
    else:
        meta.update(
            circuit="flux",
            ej_over_ec=repr(circuit.ej_over_ec),
            alpha=repr(circuit.alpha),
            ej_GHz=repr(circuit.ej_ghz),
            basis=(
                f"ChargeLattice(n_p_cutoff={cfg.lattice.n_p_cutoff}, "
                f"n_m_cutoff={cfg.lattice.n_m_cutoff}, even_sector={cfg.lattice.even_sector})"
            ),
        )
    meta["units"] = units
    meta["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


# ---------------------------------------------------------------------------
# per-point evaluation
# ---------------------------------------------------------------------------


def phase_point(p: PhaseQubitParams, models: Sequence[str] = MODELS, n_points: int = 4096,
                scheme: str = "fourier") -> tuple[EigenSolution, dict[str, tuple[float, float]]]:
    """Solve one phase-qubit bias point and return its factors per model."""
    grid = PhaseGrid.centered(p.phi_e, n_points, scheme)
    sol = solve_phase_qubit(p, grid)
    factors = {}
    for model in models:
        cf = coupling_factors(sol, build_operator(PHASE_OPERATORS[model], sol.basis))
        factors[model] = (cf.o_x, cf.o_z)
    return sol, factors


def flux_point(p: FluxQubitParams, models: Sequence[str] = MODELS,
               lattice: ChargeLattice | None = None
               ) -> tuple[EigenSolution, dict[str, tuple[float, float]]]:
    """Solve one flux-qubit bias point and return its factors per model."""
    sol = solve_flux_qubit(p, lattice, k=3)
    factors = {}
    for model in models:
        cf = coupling_factors(sol, build_operator(FLUX_OPERATORS[model], sol.basis, p.f))
        factors[model] = (cf.o_x, cf.o_z)
    return sol, factors


def phase_columns(models: Sequence[str]) -> tuple[str, ...]:
    cols = ["phi_e", "ok", "omega_q_GHz", "mass_0", "mass_1"]
    for model in models:
        cols += [f"ox_{model}", f"oz_{model}"]
    return tuple(cols)


def flux_columns(models: Sequence[str]) -> tuple[str, ...]:
    cols = ["f", "E0", "E1", "E2", "omega_q", "omega_q_GHz"]
    for model in models:
        cols += [f"ox_{model}", f"oz_{model}"]
    cols.append("nm01")
    return tuple(cols)


def _phase_row(cfg: SweepConfig, phi_e: float) -> list[float]:
    models = cfg.ordered_models
    p = replace(cfg.circuit, phi_e=float(phi_e))
    try:
        sol, factors = phase_point(p, models, cfg.phase_points, cfg.phase_scheme)
    except (NoMetastableQubitError, DomainError):
        return [phi_e, 0.0] + [math.nan] * (3 + 2 * len(models))
    masses = sol.meta["masses"][list(sol.qubit_indices)]
    row = [phi_e, 1.0, sol.omega_q, *masses]
    for model in models:
        row += factors[model]
    return row


def _flux_row(cfg: SweepConfig, f: float) -> list[float]:
    models = cfg.ordered_models
    p = replace(cfg.circuit, f=float(f))
    sol, factors = flux_point(p, models, cfg.lattice)
    nm = build_operator(OperatorKind.CHARGE_M, sol.basis)
    row = [f, *sol.energies[:3], sol.omega_q, sol.omega_q * p.ej_ghz]
    for model in models:
        row += factors[model]
    row.append(abs(matrix_elements(sol, nm)[0, 1]))
    return row


def sweep_phase_qubit(cfg: SweepConfig) -> SweepTable:
    """Coupling factors of the phase qubit across ``cfg.bias``.

    Points where no metastable qubit exists are kept with ``ok = 0`` and NaN factors.
    """
    if not isinstance(cfg.circuit, PhaseQubitParams):
        raise InvalidParameterError("sweep_phase_qubit needs PhaseQubitParams")
    rows = _parallel_map(lambda x: _phase_row(cfg, x), list(cfg.bias))
    rows.sort(key=lambda r: r[0])
    table = SweepTable(phase_columns(cfg.ordered_models), np.array(rows),
                       _metadata(cfg, "omega_q in GHz; factors dimensionless"))
    if not np.any(table.column("ok") == 1):
        raise EmptyResultError("no bias point yielded a metastable qubit")
    return table


def sweep_flux_qubit(cfg: SweepConfig) -> SweepTable:
    """Energies and coupling factors of the flux qubit across ``cfg.bias``."""
    if not isinstance(cfg.circuit, FluxQubitParams):
        raise InvalidParameterError("sweep_flux_qubit needs FluxQubitParams")
    rows = _parallel_map(lambda x: _flux_row(cfg, x), list(cfg.bias))
    rows.sort(key=lambda r: r[0])
    return SweepTable(flux_columns(cfg.ordered_models), np.array(rows),
                      _metadata(cfg, "E0-E2 and omega_q in E_J; omega_q_GHz via ej_GHz"))


def model_operator(circuit, model_name: str) -> OperatorKind:
    table = PHASE_OPERATORS if isinstance(circuit, PhaseQubitParams) else FLUX_OPERATORS
    return table[model_name]


def model_name(model: CouplingModel) -> str:
    return {CriticalCurrent: "critical_current", Dipole: "dipole",
            FluxFluctuator: "flux_fluctuator"}[type(model)]


def physical_coupling(circuit, sol: EigenSolution, model: CouplingModel,
                      tls: TLSParams) -> tuple[float, PauliCoupling]:
    """(omega_q in GHz, PauliCoupling in GHz) for a solved bias point."""
    if isinstance(circuit, FluxQubitParams):
        omega_q = sol.omega_q * circuit.ej_ghz
        if isinstance(model, Dipole):
            return omega_q, dipole_coupling_flux(sol, circuit, model, tls)
        op = build_operator(model_operator(circuit, model_name(model)), sol.basis, circuit.f)
    else:
        omega_q = sol.omega_q
        op = build_operator(model_operator(circuit, model_name(model)), sol.basis)
    factors = coupling_factors(sol, op)
    return omega_q, pauli_coupling(model, factors, tls, model_prefactor(model, circuit))


def sweep_couplings(cfg: SweepConfig, model: CouplingModel, tls: TLSParams
                    ) -> list[tuple[float, float, PauliCoupling]]:
    """(bias, omega_q GHz, coupling) triples for points with a usable qubit."""
    def one(x):
        if isinstance(cfg.circuit, PhaseQubitParams):
            p = replace(cfg.circuit, phi_e=float(x))
            try:
                sol = solve_phase_qubit(p, PhaseGrid.centered(x, cfg.phase_points, cfg.phase_scheme))
            except (NoMetastableQubitError, DomainError):
                return None
        else:
            p = replace(cfg.circuit, f=float(x))
            sol = solve_flux_qubit(p, cfg.lattice)
        omega_q, g = physical_coupling(p, sol, model, tls)
        return float(x), omega_q, g

    points = [pt for pt in _parallel_map(one, list(cfg.bias)) if pt is not None]
    if not points:
        raise EmptyResultError("no bias point yielded a usable qubit")
    return points


# ---------------------------------------------------------------------------
# convergence
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceReport:
    """Successive-refinement drifts; ``rows`` columns match ``columns``."""

    columns: tuple[str, ...]
    rows: np.ndarray
    passed: bool
    messages: list[str]

    @property
    def final_energy_drift(self) -> float:
        return float(self.rows[-1, self.columns.index("energy_drift")])

    @property
    def final_factor_drift(self) -> float:
        return float(self.rows[-1, self.columns.index("factor_drift")])

    def as_table(self) -> SweepTable:
        return SweepTable(self.columns, self.rows, {"passed": str(self.passed)})


def _rung(circuit, size: int) -> tuple[int, np.ndarray, np.ndarray]:
    if isinstance(circuit, FluxQubitParams):
        lattice = ChargeLattice(size, size)
        sol, factors = flux_point(circuit, ("critical_current", "flux_fluctuator"), lattice)
        energies = sol.energies[:3]
        dim = lattice.dim
    else:
        sol, factors = phase_point(circuit, MODELS, size)
        energies = lowest_phase_energies(circuit, PhaseGrid.centered(circuit.phi_e, size), 3)
        dim = size
    flat = np.array([v for pair in factors.values() for v in pair])
    return dim, energies, flat


def convergence_study(circuit, ladder: Sequence[int], energy_tol: float = 1e-8,
                      factor_tol: float = 1e-6) -> ConvergenceReport:
    """Refine the basis along ``ladder`` (charge cutoffs or grid sizes).

    Drifts compare each rung with the previous one: the maximal relative change of
    the lowest three energies and the maximal absolute change of the coupling
    factors. The study passes when the final rung is below both tolerances; a
    :class:`ConvergenceWarning` flags failures and non-monotone drifts.
    """
    if len(ladder) < 3:
        raise InvalidParameterError("convergence ladder needs at least three rungs")
    results = [_rung(circuit, int(size)) for size in ladder]
    rows, messages = [], []
    for i, (size, (dim, energies, factors)) in enumerate(zip(ladder, results)):
        if i == 0:
            e_drift = f_drift = math.nan
        else:
            _, e_prev, f_prev = results[i - 1]
            e_drift = float(np.max(np.abs(energies - e_prev) / np.abs(energies)))
            f_drift = float(np.max(np.abs(factors - f_prev)))
        rows.append([size, dim, *energies, e_drift, f_drift])
    rows = np.array(rows)
    e_drifts, f_drifts = rows[1:, -2], rows[1:, -1]
    passed = bool(e_drifts[-1] < energy_tol and f_drifts[-1] < factor_tol)
    if not passed:
        messages.append(
            f"unconverged: final energy drift {e_drifts[-1]:.3e} (tol {energy_tol:g}), "
            f"factor drift {f_drifts[-1]:.3e} (tol {factor_tol:g})"
        )
    # drifts at round-off level are not expected to keep shrinking
    floor_e, floor_f = energy_tol * 1e-3, factor_tol * 1e-3
    if np.any(np.diff(np.maximum(e_drifts, floor_e)) > 0) or np.any(
        np.diff(np.maximum(f_drifts, floor_f)) > 0
    ):
        messages.append("non-monotone convergence along the ladder")
    for msg in messages:
        warnings.warn(msg, ConvergenceWarning, stacklevel=2)
    columns = ("size", "dim", "E0", "E1", "E2", "energy_drift", "factor_drift")
    return ConvergenceReport(columns, rows, passed, messages)


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

_LABELS = {"critical_current": "critical current", "flux_fluctuator": "flux fluctuator",
           "dipole": "electric dipole"}


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_phase_factors(table: SweepTable, path) -> bool:
    """Factors of all models against phi_e in one SVG. Returns False on failure."""
    try:
        plt = _figure()
        ok = table.successful()
        fig, ax = plt.subplots(figsize=(5, 4))
        styles = {"critical_current": ("tab:green", "tab:cyan"),
                  "flux_fluctuator": ("tab:red", "tab:purple")}
        for model, (cx, cz) in styles.items():
            if f"ox_{model}" not in table.columns:
                continue
            ax.plot(ok.column("phi_e"), ok.column(f"ox_{model}"), color=cx, ls="-.",
                    label=f"$o_x$ {_LABELS[model]}")
            ax.plot(ok.column("phi_e"), ok.column(f"oz_{model}"), color=cz, ls="--",
                    label=f"$o_z$ {_LABELS[model]}")
        ax.set_xlabel(r"$\phi_e$ ($\phi_0$)")
        ax.set_ylabel("coupling factor")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)
        return True
    except Exception as exc:  # plots are optional
        warnings.warn(f"plotting failed, CSV only: {exc}", stacklevel=2)
        return False


def plot_flux_factors(table: SweepTable, stem) -> list[Path]:
    """One SVG per model (transverse solid, longitudinal dashed) against f."""
    written = []
    try:
        plt = _figure()
        for model in ("critical_current", "flux_fluctuator"):
            if f"ox_{model}" not in table.columns:
                continue
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.plot(table.column("f"), table.column(f"ox_{model}"), "-", label="$o_x$")
            ax.plot(table.column("f"), table.column(f"oz_{model}"), "--", label="$o_z$")
            ax.set_xlabel("$f$")
            ax.set_ylabel("coupling factor")
            ax.set_title(_LABELS[model])
            ax.legend()
            fig.tight_layout()
            path = Path(f"{stem}_{model}.svg")
            fig.savefig(path, format="svg")
            plt.close(fig)
            written.append(path)
    except Exception as exc:  # plots are optional
        warnings.warn(f"plotting failed, CSV only: {exc}", stacklevel=2)
    return written
