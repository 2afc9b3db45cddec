"""JSON run configuration.

Every physical quantity carries its unit in the key name. Unknown keys are
rejected so that a typo never silently falls back to a default.

Phase qubit::

    {"circuit": "phase", "capacitance_fF": 850, "inductance_pH": 720,
     "critical_current_nA": 984, "bias_phi0": 0.58,
     "basis": {"n_points": 4096, "scheme": "fourier"},
     "sweep": {"start_phi0": 0.55, "stop_phi0": 0.60, "n_points": 51},
     "models": ["critical_current", "dipole", "flux_fluctuator"]}

Flux qubit::

    {"circuit": "flux", "ej_over_ec": 40, "alpha": 0.68, "frustration_phi0": 0.5,
     "ej_GHz": 100, "basis": {"n_p_cutoff": 16, "n_m_cutoff": 16}}

Optional blocks: ``"tls": {"epsilon_GHz", "delta_GHz"}`` and ``"coupling"`` with
``"model"`` plus ``delta_i0_nA`` / ``d_nm, x_nm, eta_rad`` / ``delta_phi_e_phi0``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from couplinglab.circuits import ChargeLattice, FluxQubitParams, PhaseQubitParams
from couplinglab.coupling import CriticalCurrent, Dipole, FluxFluctuator, TLSParams
from couplinglab.errors import InvalidParameterError
from couplinglab.sweeps import MODELS, SweepConfig

PHASE_KEYS = {"circuit", "capacitance_fF", "inductance_pH", "critical_current_nA",
              "bias_phi0", "basis", "sweep", "models", "tls", "coupling", "ladder"}
FLUX_KEYS = {"circuit", "ej_over_ec", "alpha", "frustration_phi0", "ej_GHz", "basis",
             "sweep", "models", "tls", "coupling", "ladder"}

DEFAULT_SWEEPS = {"phase": (0.55, 0.60, 51), "flux": (0.50, 0.51, 51)}


def load_config(path) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise InvalidParameterError(f"{path}: top level must be an object")
    return cfg


def check_keys(block: dict, allowed: set, where: str):
    if not isinstance(block, dict):
        raise InvalidParameterError(f"{where} must be an object")
    unknown = set(block) - allowed
    if unknown:
        raise InvalidParameterError(f"unknown keys in {where}: {sorted(unknown)}")


def require_number(block: dict, key: str, default=None) -> float:
    value = block.get(key, default)
    if value is None:
        raise InvalidParameterError(f"missing required key {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParameterError(f"{key} must be a number, got {value!r}")
    return float(value)


def circuit_kind(cfg: dict) -> str:
    kind = cfg.get("circuit")
    if kind not in ("phase", "flux"):
        raise InvalidParameterError('"circuit" must be "phase" or "flux"')
    return kind


def circuit_from_config(cfg: dict) -> PhaseQubitParams | FluxQubitParams:
    kind = circuit_kind(cfg)
    if kind == "phase":
        check_keys(cfg, PHASE_KEYS, "phase config")
        d = PhaseQubitParams()
        return PhaseQubitParams(
            capacitance=require_number(cfg, "capacitance_fF", d.capacitance * 1e15) * 1e-15,
            inductance=require_number(cfg, "inductance_pH", d.inductance * 1e12) * 1e-12,
            critical_current=require_number(cfg, "critical_current_nA", d.critical_current * 1e9) * 1e-9,
            phi_e=require_number(cfg, "bias_phi0", d.phi_e),
        )
    check_keys(cfg, FLUX_KEYS, "flux config")
    d = FluxQubitParams()
    return FluxQubitParams(
        ej_over_ec=require_number(cfg, "ej_over_ec", d.ej_over_ec),
        alpha=require_number(cfg, "alpha", d.alpha),
        f=require_number(cfg, "frustration_phi0", d.f),
        ej_ghz=require_number(cfg, "ej_GHz", d.ej_ghz),
    )


def _int(block: dict, key: str, default: int) -> int:
    value = block.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidParameterError(f"{key} must be an integer, got {value!r}")
    return value


def sweep_config_from_config(cfg: dict) -> SweepConfig:
    circuit = circuit_from_config(cfg)
    kind = circuit_kind(cfg)
    start, stop, n = DEFAULT_SWEEPS[kind]
    sweep = cfg.get("sweep", {})
    check_keys(sweep, {"start_phi0", "stop_phi0", "n_points"}, "sweep")
    models = cfg.get("models", list(MODELS))
    if not isinstance(models, list) or not all(isinstance(m, str) for m in models):
        raise InvalidParameterError("models must be a list of model names")
    basis = cfg.get("basis", {})
    extra = {}
    if kind == "phase":
        check_keys(basis, {"n_points", "scheme"}, "basis")
        extra["phase_points"] = _int(basis, "n_points", 4096)
        extra["phase_scheme"] = basis.get("scheme", "fourier")
    else:
        check_keys(basis, {"n_p_cutoff", "n_m_cutoff"}, "basis")
        extra["lattice"] = ChargeLattice(_int(basis, "n_p_cutoff", 16), _int(basis, "n_m_cutoff", 16))
    return SweepConfig(
        circuit,
        require_number(sweep, "start_phi0", start),
        require_number(sweep, "stop_phi0", stop),
        _int(sweep, "n_points", n),
        tuple(models),
        **extra,
    )


def tls_from_config(cfg: dict) -> TLSParams:
    block = cfg.get("tls")
    if block is None:
        raise InvalidParameterError('missing "tls" block')
    check_keys(block, {"epsilon_GHz", "delta_GHz"}, "tls")
    return TLSParams(require_number(block, "epsilon_GHz"), require_number(block, "delta_GHz"))


def model_from_config(cfg: dict):
    block = cfg.get("coupling")
    if block is None:
        raise InvalidParameterError('missing "coupling" block')
    name = block.get("model") if isinstance(block, dict) else None
    if name == "critical_current":
        check_keys(block, {"model", "delta_i0_nA"}, "coupling")
        return CriticalCurrent(require_number(block, "delta_i0_nA") * 1e-9)
    if name == "dipole":
        check_keys(block, {"model", "d_nm", "x_nm", "eta_rad"}, "coupling")
        return Dipole(require_number(block, "d_nm") * 1e-9, require_number(block, "x_nm") * 1e-9,
                      require_number(block, "eta_rad", 0.0))
    if name == "flux_fluctuator":
        check_keys(block, {"model", "delta_phi_e_phi0"}, "coupling")
        return FluxFluctuator(require_number(block, "delta_phi_e_phi0"))
    raise InvalidParameterError(f"coupling.model must be one of {list(MODELS)}, got {name!r}")
