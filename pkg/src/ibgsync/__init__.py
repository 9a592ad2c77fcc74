"""Dual-sequence grid-synchronization stability analysis for inverter-based
generation under asymmetrical grid faults.

Layers: sequence-network coefficients (network, phasenet), equilibrium
angles and injection limits (equilibrium, limits), the synchronizer model
and closed-loop simulation (synchro, dynsim), and a JSON-config CLI (cli).
"""

from .dynsim import (
    LosVerdict,
    NumericalOverflow,
    Scenario,
    Signature,
    Trace,
    detect_los,
    run_scenario,
    step,
    terminal_voltage,
    trace_to_csv,
)
from .equilibrium import (
    CurrentReference,
    EquilibriumResult,
    InstabilityType,
    NoConvergence,
    classify,
    dq_voltages,
    solve_equilibrium,
)
from .kernels import USING_NUMBA
from .limits import (
    Binding,
    LimitResult,
    RegionBoundary,
    decoupled_limit,
    region_boundary,
    traversal_limit,
)
from .network import (
    BranchImpedance,
    CircuitParameters,
    DegenerateNetwork,
    FaultSpec,
    FaultType,
    PathImpedances,
    SequenceCoefficients,
    compose_paths,
    compute_coefficients,
    table_circuit,
)
from .phasenet import PhaseNetworkSolution, SingularSystem, solve_phase_network
from .phasor import (
    format_phasor,
    parse_phasor,
    phasor,
    phasor_deg,
    polar,
    polar_deg,
    wrap_angle,
)
from .synchro import (
    SyncConfig,
    SyncMode,
    SyncState,
    ZeroAmplitude,
    angle_by_atan,
    ccf_derivative,
    extract_dq,
    fll_adaptation,
    initial_state,
    pll_derivatives,
)

__version__ = "0.1.0"

__all__ = [
    "USING_NUMBA",
    "__version__",
    # phasor
    "phasor", "phasor_deg", "polar", "polar_deg", "wrap_angle",
    "parse_phasor", "format_phasor",
    # network
    "BranchImpedance", "CircuitParameters", "FaultSpec", "FaultType",
    "PathImpedances", "SequenceCoefficients", "DegenerateNetwork",
    "compose_paths", "compute_coefficients", "table_circuit",
    # phase-network oracle
    "PhaseNetworkSolution", "SingularSystem", "solve_phase_network",
    # equilibrium
    "CurrentReference", "EquilibriumResult", "InstabilityType",
    "NoConvergence", "solve_equilibrium", "dq_voltages", "classify",
    # limits
    "Binding", "LimitResult", "RegionBoundary",
    "decoupled_limit", "traversal_limit", "region_boundary",
    # synchronizer
    "SyncConfig", "SyncMode", "SyncState", "ZeroAmplitude",
    "initial_state", "ccf_derivative", "fll_adaptation",
    "pll_derivatives", "extract_dq", "angle_by_atan",
    # simulation
    "Scenario", "Trace", "LosVerdict", "Signature", "NumericalOverflow",
    "terminal_voltage", "step", "run_scenario", "detect_los",
    "trace_to_csv",
]
