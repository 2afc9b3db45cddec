"""Command-line front end: ``couplinglab <subcommand> --config run.json``.

Exit codes: 0 success, 1 invalid input or usage, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence

from couplinglab import config as cfgmod
from couplinglab.circuits import FluxQubitParams, PhaseQubitParams
from couplinglab.coupling import PauliCoupling
from couplinglab.errors import EmptyResultError, NoMetastableQubitError, NumericError
from couplinglab.spectroscopy import anticrossing_scan, composite_spectrum, two_photon_asymmetry
from couplinglab.sweeps import (
    SweepTable,
    convergence_study,
    flux_point,
    phase_point,
    physical_coupling,
    plot_flux_factors,
    plot_phase_factors,
    sweep_couplings,
    sweep_flux_qubit,
    sweep_phase_qubit,
)

log = logging.getLogger("couplinglab")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
DEFAULT_LADDERS = {"phase": [1024, 2048, 4096], "flux": [8, 12, 16, 24]}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for numeric failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="couplinglab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "factors": "coupling factors at the configured bias",
        "sweep-phase": "phase-qubit factor sweep",
        "sweep-flux": "flux-qubit energy and factor sweep",
        "spectrum": "qubit + TLS levels and two-photon asymmetry",
        "anticross": "composite transitions along a bias sweep",
        "converge": "basis convergence study",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="CSV output path (stdout if omitted)")
        p.add_argument("--plot", action="store_true", help="also write SVG plots")
        p.add_argument("--format", choices=["csv"], default="csv")
        p.add_argument("--quiet", action="store_true", help="suppress informational output")
    return parser


def _emit(table: SweepTable, args) -> None:
    if args.out is None:
        sys.stdout.write(table.to_csv())
    else:
        table.to_csv(args.out)
        log.info("wrote %s", args.out)


def _plot_stem(args) -> Path:
    return args.out.with_suffix("") if args.out is not None else Path("couplinglab_sweep")


def _require(circuit, kind, command):
    if not isinstance(circuit, kind):
        raise ValueError(f"{command} needs a {'phase' if kind is PhaseQubitParams else 'flux'} "
                         "circuit config")


def cmd_factors(cfg: dict, args) -> None:
    sweep = cfgmod.sweep_config_from_config({k: v for k, v in cfg.items() if k != "sweep"})
    circuit, models = sweep.circuit, sweep.ordered_models
    if isinstance(circuit, PhaseQubitParams):
        sol, factors = phase_point(circuit, models, sweep.phase_points, sweep.phase_scheme)
        columns = ("phi_e", "omega_q_GHz")
        row = [circuit.phi_e, sol.omega_q]
    else:
        sol, factors = flux_point(circuit, models, sweep.lattice)
        columns = ("f", "omega_q", "omega_q_GHz")
        row = [circuit.f, sol.omega_q, sol.omega_q * circuit.ej_ghz]
    for model in models:
        columns += (f"ox_{model}", f"oz_{model}")
        row += factors[model]
    if "coupling" in cfg:
        model, tls = cfgmod.model_from_config(cfg), cfgmod.tls_from_config(cfg)
        _, g = physical_coupling(circuit, sol, model, tls)
        columns += ("g_x_GHz", "g_z_GHz")
        row += [g.g_x, g.g_z]
    _emit(SweepTable(columns, np.array([row]), {"command": "factors"}), args)


def cmd_sweep(cfg: dict, args, phase: bool) -> None:
    sweep = cfgmod.sweep_config_from_config(cfg)
    _require(sweep.circuit, PhaseQubitParams if phase else FluxQubitParams, args.command)
    table = sweep_phase_qubit(sweep) if phase else sweep_flux_qubit(sweep)
    if phase:
        failed = table.column("phi_e")[table.column("ok") == 0]
        if len(failed):
            log.info("metastable selection failed at %d points: phi_e = %s",
                     len(failed), ", ".join(f"{x:.4g}" for x in failed))
    _emit(table, args)
    if args.plot:
        stem = _plot_stem(args)
        if phase:
            if plot_phase_factors(table, stem.with_suffix(".svg")):
                log.info("wrote %s", stem.with_suffix(".svg"))
        else:
            for path in plot_flux_factors(table, stem):
                log.info("wrote %s", path)


def cmd_spectrum(cfg: dict, args) -> None:
    allowed = {"omega_q_GHz", "omega_t_GHz", "g_x_GHz", "g_z_GHz", "tls"}
    cfgmod.check_keys(cfg, allowed, "spectrum config")
    omega_q = cfgmod.require_number(cfg, "omega_q_GHz")
    if "tls" in cfg:
        omega_t = cfgmod.tls_from_config(cfg).omega_t
    else:
        omega_t = cfgmod.require_number(cfg, "omega_t_GHz")
    g = PauliCoupling(cfgmod.require_number(cfg, "g_x_GHz", 0.0), cfgmod.require_number(cfg, "g_z_GHz", 0.0))
    composite = composite_spectrum(omega_q, omega_t, g)
    lines = two_photon_asymmetry(composite)
    values = [*composite.energies, lines.w12, lines.w13, lines.w14, lines.asymmetry]
    names = ["E_1", "E_2", "E_3", "E_4", "w_12", "w_13", "w_14", "A"]
    if not args.quiet or args.out is None:
        for name, value in zip(names, values):
            print(f"{name:5s} = {value: .12f} GHz")
    if args.out is not None:
        columns = ("omega_q_GHz", "omega_t_GHz", "g_x_GHz", "g_z_GHz", *names)
        SweepTable(columns, np.array([[omega_q, omega_t, g.g_x, g.g_z, *values]]),
                   {"command": "spectrum", "units": "GHz"}).to_csv(args.out)


def cmd_anticross(cfg: dict, args) -> None:
    sweep = cfgmod.sweep_config_from_config(cfg)
    model, tls = cfgmod.model_from_config(cfg), cfgmod.tls_from_config(cfg)
    points = sweep_couplings(sweep, model, tls)
    scan = anticrossing_scan(points, tls.omega_t)
    data = np.column_stack([
        scan.bias,
        [p[1] for p in points],
        [p[2].g_x for p in points],
        [p[2].g_z for p in points],
        scan.transitions,
        scan.asymmetry,
    ])
    columns = ("bias_phi0", "omega_q_GHz", "g_x_GHz", "g_z_GHz", "w_12", "w_13", "w_14", "A")
    table = SweepTable(columns, data, {"command": "anticross", "omega_t_GHz": repr(tls.omega_t),
                                       "units": "GHz"})
    log.info("minimum splitting %.6g GHz at bias %.6g", scan.min_gap,
             scan.bias[scan.resonant_index])
    _emit(table, args)


def cmd_converge(cfg: dict, args) -> None:
    kind = cfgmod.circuit_kind(cfg)
    circuit = cfgmod.circuit_from_config(cfg)
    ladder = cfg.get("ladder", DEFAULT_LADDERS[kind])
    if not isinstance(ladder, list) or not all(isinstance(x, int) for x in ladder):
        raise ValueError("ladder must be a list of integers")
    report = convergence_study(circuit, ladder)
    log.info("convergence %s", "PASS" if report.passed else "FAIL")
    _emit(report.as_table(), args)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT

    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        cfg = cfgmod.load_config(args.config)
        if args.command == "factors":
            cmd_factors(cfg, args)
        elif args.command in ("sweep-phase", "sweep-flux"):
            cmd_sweep(cfg, args, phase=args.command == "sweep-phase")
        elif args.command == "spectrum":
            cmd_spectrum(cfg, args)
        elif args.command == "anticross":
            cmd_anticross(cfg, args)
        else:
            cmd_converge(cfg, args)
    except (FileNotFoundError, ValueError, NoMetastableQubitError, EmptyResultError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, np.linalg.LinAlgError, ArpackNoConvergence) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
