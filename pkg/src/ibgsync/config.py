"""JSON configuration: schema validation and construction of the typed
objects the analysis layers consume.

All angles are degrees at this boundary and converted to radians here;
impedances may be given per-unit or in ohms with explicit bases. Unknown
keys fail validation rather than being ignored.
"""

import json
import math
from dataclasses import dataclass

import jsonschema

from .equilibrium import CurrentReference
from .network import BranchImpedance, CircuitParameters, FaultSpec, FaultType
from .phasor import parse_phasor, polar
from .synchro import SyncConfig, SyncMode

__all__ = [
    "ConfigError",
    "SolverOptions",
    "ScenarioOptions",
    "ConfigDocument",
    "load_config",
    "parse_config",
    "DEFAULT_BASES",
]

# 110 kV / 9 MVA reference bases (used to convert ohmic entries)
DEFAULT_BASES = {"v_base_kv": 110.0, "s_base_mva": 9.0}

_BRANCH_SCHEMA = {
    "type": "object",
    "properties": {
        "r": {"type": "number", "minimum": 0},
        "x": {"type": "number", "minimum": 0},
    },
    "required": ["r", "x"],
    "additionalProperties": False,
}

_PHASOR_STR = {"type": "string", "pattern": r"^\s*[0-9.eE+-]+\s*(@\s*[0-9.eE+-]+\s*)?$"}

_REF_SCHEMA = {
    "type": "object",
    "properties": {"i_pos": _PHASOR_STR, "i_neg": _PHASOR_STR},
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "circuit": {
            "type": "object",
            "properties": {
                "unit": {"enum": ["pu", "ohm"]},
                "v_base_kv": {"type": "number", "exclusiveMinimum": 0},
                "s_base_mva": {"type": "number", "exclusiveMinimum": 0},
                "f_hz": {"type": "number", "exclusiveMinimum": 0},
                "ug_pos": {"type": "number", "exclusiveMinimum": 0},
                "ug_kv": {"type": "number", "exclusiveMinimum": 0},
                "theta_g_deg": {"type": "number"},
                "choke": _BRANCH_SCHEMA,
                "t1": _BRANCH_SCHEMA,
                "t2": _BRANCH_SCHEMA,
                "l1": _BRANCH_SCHEMA,
                "l2": _BRANCH_SCHEMA,
                "grid": _BRANCH_SCHEMA,
            },
            "additionalProperties": False,
        },
        "fault": {
            "type": "object",
            "properties": {
                "type": {"enum": ["none", "slg", "dlg", "ll", "tlg"]},
                "zf_pu": {"type": "number", "minimum": 0},
                "zf_ohm": {"type": "number", "minimum": 0},
                "t_on": {"type": "number", "minimum": 0},
                "t_clear": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "current": {
            "type": "object",
            "properties": {"prefault": _REF_SCHEMA, "fault": _REF_SCHEMA},
            "additionalProperties": False,
        },
        "sync": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["dsogi_pll", "dsogi_fll"]},
                "k": {"type": "number", "exclusiveMinimum": 0},
                "kp_fll": {"type": "number", "minimum": 0},
                "ki_fll": {"type": "number", "minimum": 0},
                "kp_pll": {"type": "number", "minimum": 0},
                "ki_pll": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "scenario": {
            "type": "object",
            "properties": {
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "freq_adaptive_z": {"type": "boolean"},
                "init": {"enum": ["equilibrium", "prefault"]},
                "record_dt": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "grid_deg": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "ud_min": {"type": "number"},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "ceiling": {"type": "number", "exclusiveMinimum": 0},
                "refine": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

# Table III reference entries, per-unit on the default bases
_DEFAULT_BRANCHES = {
    "choke": (0.003, 0.15),
    "t1": (0.002, 0.06),
    "t2": (0.16 / 30.0, 0.16),
    "l1": (0.02, 0.05),
    "l2": (0.06, 0.30),
    "grid": (0.04, 0.20),
}


class ConfigError(ValueError):
    """Configuration content failed validation or is inconsistent."""


@dataclass(frozen=True)
class SolverOptions:
    """Equilibrium-scan and traversal tuning knobs."""

    grid_deg: float = 2.0
    tol: float = 1e-10
    ud_min: float = 1e-9
    step: float = 0.01
    ceiling: float = 3.0
    refine: bool = False


@dataclass(frozen=True)
class ScenarioOptions:
    """Simulation horizon and integrator settings (fault times live on
    FaultSpec)."""

    t_end: float = 3.0
    dt: float = 1e-4
    freq_adaptive_z: bool = True
    init: str = "equilibrium"
    record_dt: float = 1e-3


@dataclass(frozen=True)
class ConfigDocument:
    """Validated configuration resolved to internal units."""

    circuit: CircuitParameters
    fault_type: FaultType | None
    z_f: complex
    t_on: float
    t_clear: float
    ref_prefault: CurrentReference
    ref_fault: CurrentReference
    sync: SyncConfig
    scenario: ScenarioOptions
    solver: SolverOptions
    z_base_ohm: float


def _parse_ref(section: dict | None) -> CurrentReference:
    section = section or {}
    amp_p, ang_p = polar(parse_phasor(section.get("i_pos", "0")))
    amp_n, ang_n = polar(parse_phasor(section.get("i_neg", "0")))
    return CurrentReference(amp_p, ang_p, amp_n, ang_n)


def _build_circuit(section: dict) -> tuple[CircuitParameters, float]:
    v_base = section.get("v_base_kv", DEFAULT_BASES["v_base_kv"])
    s_base = section.get("s_base_mva", DEFAULT_BASES["s_base_mva"])
    z_base = v_base * v_base / s_base
    unit = section.get("unit", "pu")
    scale = 1.0 / z_base if unit == "ohm" else 1.0

    branches = {}
    for name, (r_def, x_def) in _DEFAULT_BRANCHES.items():
        entry = section.get(name)
        if entry is None:
            # defaults are the per-unit reference values regardless of unit
            branches[name] = BranchImpedance(r_def, x_def)
        else:
            branches[name] = BranchImpedance(entry["r"] * scale, entry["x"] * scale)

    if "ug_pos" in section and "ug_kv" in section:
        raise ConfigError("give ug_pos (p.u.) or ug_kv, not both")
    if "ug_kv" in section:
        ug = section["ug_kv"] / v_base
    else:
        ug = section.get("ug_pos", 120.0 / 110.0)

    omega0 = 2.0 * math.pi * section.get("f_hz", 50.0)
    circuit = CircuitParameters(
        z_choke=branches["choke"], z_t1=branches["t1"], z_t2=branches["t2"],
        z_l1=branches["l1"], z_l2=branches["l2"], z_g=branches["grid"],
        ug_pos=ug, theta_g=math.radians(section.get("theta_g_deg", 0.0)),
        omega0=omega0,
    )
    return circuit, z_base


def parse_config(raw: dict) -> ConfigDocument:
    """Validate a parsed JSON object and resolve it to internal units."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config schema: {exc.message}") from None

    circuit, z_base = _build_circuit(raw.get("circuit", {}))

    fault = raw.get("fault", {})
    if "zf_pu" in fault and "zf_ohm" in fault:
        raise ConfigError("give zf_pu or zf_ohm, not both")
    if "zf_pu" in fault:
        z_f = complex(fault["zf_pu"])
    else:
        z_f = complex(fault.get("zf_ohm", 0.01) / z_base)
    fault_type = FaultType(fault["type"]) if "type" in fault else None
    t_on = fault.get("t_on", 0.0)
    t_clear = fault.get("t_clear", math.inf)
    if t_on >= t_clear:
        raise ConfigError("fault t_on must precede t_clear")

    current = raw.get("current", {})
    sync_raw = raw.get("sync", {})
    sync = SyncConfig(
        mode=SyncMode(sync_raw.get("mode", "dsogi_pll")),
        k=sync_raw.get("k", 1.414),
        kp_fll=sync_raw.get("kp_fll", 50.0),
        ki_fll=sync_raw.get("ki_fll", 8000.0),
        kp_pll=sync_raw.get("kp_pll", 100.0),
        ki_pll=sync_raw.get("ki_pll", 2000.0),
        omega0=circuit.omega0,
    )
    scen = raw.get("scenario", {})
    solver = raw.get("solver", {})
    return ConfigDocument(
        circuit=circuit,
        fault_type=fault_type,
        z_f=z_f,
        t_on=t_on,
        t_clear=t_clear,
        ref_prefault=_parse_ref(current.get("prefault")),
        ref_fault=_parse_ref(current.get("fault")),
        sync=sync,
        scenario=ScenarioOptions(
            t_end=scen.get("t_end", 3.0),
            dt=scen.get("dt", 1e-4),
            freq_adaptive_z=scen.get("freq_adaptive_z", True),
            init=scen.get("init", "equilibrium"),
            record_dt=scen.get("record_dt", 1e-3),
        ),
        solver=SolverOptions(
            grid_deg=solver.get("grid_deg", 2.0),
            tol=solver.get("tol", 1e-10),
            ud_min=solver.get("ud_min", 1e-9),
            step=solver.get("step", 0.01),
            ceiling=solver.get("ceiling", 3.0),
            refine=solver.get("refine", False),
        ),
        z_base_ohm=z_base,
    )


def load_config(path: str | None) -> ConfigDocument:
    """Parse a config file; None yields the all-defaults document."""
    if path is None:
        return parse_config({})
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return parse_config(raw)


def make_fault(
    doc: ConfigDocument,
    fault_type: str | None = None,
    zf_ohm: float | None = None,
) -> FaultSpec:
    """FaultSpec from the document with optional flag overrides."""
    if fault_type is not None:
        kind = FaultType(fault_type)
    elif doc.fault_type is not None:
        kind = doc.fault_type
    else:
        raise ConfigError("fault type missing (config fault.type or --fault)")
    z_f = doc.z_f if zf_ohm is None else complex(zf_ohm / doc.z_base_ohm)
    return FaultSpec(fault_type=kind, z_f=z_f, t_on=doc.t_on, t_clear=doc.t_clear)
