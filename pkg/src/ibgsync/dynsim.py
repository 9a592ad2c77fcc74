"""Closed-loop time simulation: quasi-static terminal voltage driven by the
synchronizer's own angle estimates, integrated through a fault on/clear
schedule, plus loss-of-synchronism detection on the resulting trace.

The loop is self-referential: the injected currents are phase-locked to the
estimated angles, the terminal voltage those currents produce is what the
synchronizer measures. Loss of synchronism shows up either as a sustained
frequency drift (type-1, no equilibrium angle exists) or as frequency
chattering while the d-axis voltage collapses below zero (type-2).
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .equilibrium import (
    CurrentReference,
    EquilibriumResult,
    InstabilityType,
    classify,
    solve_equilibrium,
)
from .network import (
    CircuitParameters,
    FaultSpec,
    FaultType,
    SequenceCoefficients,
    _path_floats,
    compose_paths,
    compute_coefficients,
)
from .phasor import phasor, wrap_angle
from .synchro import SyncConfig, SyncMode, SyncState

__all__ = [
    "Scenario",
    "Trace",
    "Signature",
    "LosVerdict",
    "NumericalOverflow",
    "terminal_voltage",
    "orientation_angles",
    "initial_sync_state",
    "step",
    "run_scenario",
    "detect_los",
    "trace_to_csv",
    "TRACE_HEADER",
]

TRACE_HEADER = (
    "t,f_pos_hz,f_neg_hz,theta_pos,theta_neg,"
    "ud_pos,uq_pos,ud_neg,uq_neg,umag_pos,umag_neg"
)


class NumericalOverflow(FloatingPointError):
    """A state magnitude exceeded 1e6; the run is truncated and flagged."""


class Signature(enum.Enum):
    """Observable flavor of a loss of synchronism."""

    DRIFT = "drift"
    CHATTER = "chatter"


@dataclass(frozen=True)
class Scenario:
    """One fault ride-through simulation case.

    `init` selects the synchronizer start: "equilibrium" warm-starts at the
    on-fault operating point when one exists (falling back to the settled
    pre-fault state), "prefault" always starts from the settled pre-fault
    state.
    """

    circuit: CircuitParameters
    fault: FaultSpec
    ref_fault: CurrentReference
    ref_prefault: CurrentReference = CurrentReference()
    sync: SyncConfig = SyncConfig()
    t_end: float = 3.0
    dt: float = 1e-4
    freq_adaptive_z: bool = True
    init: str = "equilibrium"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end <= 0:
            raise ValueError("t_end must be > 0")
        if self.fault.t_on < 0:
            raise ValueError("t_on must be >= 0")
        if self.fault.t_on >= self.t_end:
            raise ValueError("t_on must precede t_end")
        if self.init not in ("equilibrium", "prefault"):
            raise ValueError('init must be "equilibrium" or "prefault"')
        if abs(self.sync.omega0 - self.circuit.omega0) > 1e-9:
            raise ValueError("sync.omega0 must match circuit.omega0")


@dataclass(frozen=True)
class Trace:
    """Stride-decimated time series of one run (arrays share one length)."""

    t: np.ndarray
    f_pos_hz: np.ndarray
    f_neg_hz: np.ndarray
    theta_pos: np.ndarray
    theta_neg: np.ndarray
    ud_pos: np.ndarray
    uq_pos: np.ndarray
    ud_neg: np.ndarray
    uq_neg: np.ndarray
    umag_pos: np.ndarray
    umag_neg: np.ndarray
    i_pos: np.ndarray = field(default_factory=lambda: np.empty(0, complex))
    i_neg: np.ndarray = field(default_factory=lambda: np.empty(0, complex))
    diverged: bool = False


@dataclass(frozen=True)
class LosVerdict:
    """Detection outcome over the on-fault window."""

    lost: bool
    t_los: float | None
    dominant: InstabilityType
    signature: Signature | None


def terminal_voltage(
    coeffs: SequenceCoefficients,
    ref: CurrentReference,
    ug_pos: float,
    theta_g: float,
    theta_hat_pos: float,
    theta_hat_neg: float,
) -> tuple[complex, complex, complex]:
    """Sequence terminal voltages and their single-complex combination.

    The grid contributions carry the -pi/3 (+pi/3) transformer phase
    displacements, the cross-sequence current terms the corresponding
    -2pi/3 (+2pi/3) offsets. The combined signal is u_pos + conj(u_neg),
    the counterclockwise representation the sequence filter consumes.
    """
    u_pos = (
        coeffs.k1 * ug_pos * phasor(1.0, theta_g - math.pi / 3.0)
        + coeffs.z2 * ref.i_pos * phasor(1.0, theta_hat_pos + ref.theta_i_pos)
        + coeffs.z3 * ref.i_neg
        * phasor(1.0, theta_hat_neg + ref.theta_i_neg - 2.0 * math.pi / 3.0)
    )
    u_neg = (
        coeffs.k4 * ug_pos * phasor(1.0, theta_g + math.pi / 3.0)
        + coeffs.z5 * ref.i_neg * phasor(1.0, theta_hat_neg + ref.theta_i_neg)
        + coeffs.z6 * ref.i_pos
        * phasor(1.0, theta_hat_pos + ref.theta_i_pos + 2.0 * math.pi / 3.0)
    )
    return u_pos, u_neg, u_pos + u_neg.conjugate()


def orientation_angles(
    theta_hat_pos: float, theta_hat_neg: float, theta_g: float
) -> tuple[float, float]:
    """Loop angles relative to the grid frames: delta+ = theta+ - theta_g
    + pi/3 and delta- = theta- - theta_g - pi/3, both wrapped."""
    return (
        wrap_angle(theta_hat_pos - theta_g + math.pi / 3.0),
        wrap_angle(theta_hat_neg - theta_g - math.pi / 3.0),
    )


def _pack_state(state: SyncState) -> np.ndarray:
    return np.array(
        [
            state.u_hat_pos.real, state.u_hat_pos.imag,
            state.u_hat_neg.real, state.u_hat_neg.imag,
            state.theta_pos, state.xi_pos,
            state.theta_neg, state.xi_neg,
            state.eps_fll,
        ]
    )


def _kernel_args(scenario: Scenario, on_fault_code: bool = True):
    """Shared positional tail for the kernel calls."""
    paths = compose_paths(scenario.circuit)
    gains = np.array(
        [
            scenario.sync.k,
            scenario.sync.kp_pll, scenario.sync.ki_pll,
            scenario.sync.kp_fll, scenario.sync.ki_fll,
        ]
    )
    ref_pre = np.array(
        [
            scenario.ref_prefault.i_pos, scenario.ref_prefault.theta_i_pos,
            scenario.ref_prefault.i_neg, scenario.ref_prefault.theta_i_neg,
        ]
    )
    ref_on = np.array(
        [
            scenario.ref_fault.i_pos, scenario.ref_fault.theta_i_pos,
            scenario.ref_fault.i_neg, scenario.ref_fault.theta_i_neg,
        ]
    )
    return (
        scenario.fault.fault_type.code,
        complex(scenario.fault.z_f),
        np.array(_path_floats(paths)),
        scenario.circuit.ug_pos,
        scenario.circuit.theta_g,
        scenario.circuit.omega0,
        ref_pre,
        ref_on,
        gains,
        scenario.sync.mode is SyncMode.DSOGI_FLL,
        scenario.freq_adaptive_z,
    )


def _unpack_state(y: np.ndarray, scenario: Scenario, t: float) -> SyncState:
    """Rebuild a SyncState, recomputing the algebraic frequency outputs."""
    (code, zf, paths, ug, theta_g0, w0, ref_pre, ref_on, gains,
     mode_fll, adaptive) = _kernel_args(scenario)
    on = scenario.fault.t_on <= t < scenario.fault.t_clear
    dy = kernels.deriv_eval(
        y, t, code if on else kernels.FAULT_NONE, zf, paths, ug, theta_g0,
        w0, ref_on if on else ref_pre, gains, mode_fll, adaptive,
    )
    if mode_fll:
        omega_hat = w0 + gains[3] * dy[8] + gains[4] * y[8]
    else:
        omega_hat = dy[4]
    return SyncState(
        u_hat_pos=complex(y[0], y[1]),
        u_hat_neg=complex(y[2], y[3]),
        omega_hat=float(omega_hat),
        eps_fll=float(y[8]),
        theta_pos=float(y[4]),
        theta_neg=float(y[6]),
        omega_pos=float(dy[4]),
        omega_neg=float(dy[6]),
        xi_pos=float(y[5]),
        xi_neg=float(y[7]),
    )


def step(state: SyncState, scenario: Scenario, t: float, dt: float) -> SyncState:
    """Advance one RK4 step from time t; each stage re-evaluates the fault
    schedule and the grid angle at its own stage time."""
    (code, zf, paths, ug, theta_g0, w0, ref_pre, ref_on, gains,
     mode_fll, adaptive) = _kernel_args(scenario)
    y = _pack_state(state)
    # the kernel records at both ends of the single step
    rec = np.empty((2, 11))
    # shift the time origin so the kernel's internal t = 0 lands on t
    _, overflow, y = kernels.simulate(
        y, 1, dt, 1, code, zf, paths, ug,
        theta_g0 + w0 * t, w0,
        scenario.fault.t_on - t, scenario.fault.t_clear - t,
        ref_pre, ref_on, gains, mode_fll, adaptive, rec,
    )
    if overflow >= 0:
        raise NumericalOverflow(f"state magnitude exceeded 1e6 at t = {t + dt:g}")
    return _unpack_state(y, scenario, t + dt)


def _settled_state(
    scenario: Scenario, coeffs: SequenceCoefficients, ref: CurrentReference,
    eq: EquilibriumResult,
) -> SyncState:
    """Synchronizer state sitting exactly on an equilibrium at t = 0."""
    theta_g = scenario.circuit.theta_g
    th_p = eq.delta_pos + theta_g - math.pi / 3.0
    th_n = eq.delta_neg + theta_g + math.pi / 3.0
    u_pos, u_neg, _ = terminal_voltage(
        coeffs, ref, scenario.circuit.ug_pos, theta_g, th_p, th_n
    )
    w0 = scenario.sync.omega0
    return SyncState(
        u_hat_pos=u_pos, u_hat_neg=u_neg.conjugate(),
        omega_hat=w0, eps_fll=0.0,
        theta_pos=th_p, theta_neg=th_n,
        omega_pos=w0, omega_neg=w0,
        xi_pos=0.0, xi_neg=0.0,
    )


def initial_sync_state(scenario: Scenario) -> SyncState:
    """Initial state per scenario.init.

    "equilibrium": the on-fault operating point when it exists; otherwise
    (and for "prefault") the settled pre-fault state; a bare cold start
    (empty filter, grid-aligned angles) if even that has no equilibrium.
    """
    paths = compose_paths(scenario.circuit)
    ug = scenario.circuit.ug_pos
    if scenario.init == "equilibrium":
        coeffs = compute_coefficients(paths, scenario.fault)
        eq = solve_equilibrium(coeffs, scenario.ref_fault, ug)
        if eq.found:
            return _settled_state(scenario, coeffs, scenario.ref_fault, eq)
    healthy = compute_coefficients(paths, FaultSpec(FaultType.NONE))
    eq = solve_equilibrium(healthy, scenario.ref_prefault, ug)
    if eq.found:
        return _settled_state(scenario, healthy, scenario.ref_prefault, eq)
    theta_g = scenario.circuit.theta_g
    w0 = scenario.sync.omega0
    return SyncState(
        theta_pos=theta_g - math.pi / 3.0, theta_neg=theta_g + math.pi / 3.0,
        omega_hat=w0, omega_pos=w0, omega_neg=w0,
    )


def run_scenario(
    scenario: Scenario, record_dt: float = 1e-3
) -> tuple[Trace, LosVerdict]:
    """Integrate [0, t_end] and detect loss of synchronism on the on-fault
    window. Overflow truncates the trace and forces a lost verdict."""
    args = _kernel_args(scenario)
    (code, zf, paths, ug, theta_g0, w0, ref_pre, ref_on, gains,
     mode_fll, adaptive) = args
    dt = scenario.dt
    n_steps = int(round(scenario.t_end / dt))
    stride = max(1, int(round(record_dt / dt)))
    rec = np.empty((n_steps // stride + 1, 11))

    y0 = _pack_state(initial_sync_state(scenario))
    n_rec, overflow_step, _ = kernels.simulate(
        y0, n_steps, dt, stride, code, zf, paths, ug, theta_g0, w0,
        scenario.fault.t_on, scenario.fault.t_clear,
        ref_pre, ref_on, gains, mode_fll, adaptive, rec,
    )
    rec = rec[:n_rec]
    t = rec[:, 0]
    on = (t >= scenario.fault.t_on) & (t < scenario.fault.t_clear)
    i_on = scenario.ref_fault.i_pos * phasor(1.0, scenario.ref_fault.theta_i_pos)
    i_off = scenario.ref_prefault.i_pos * phasor(1.0, scenario.ref_prefault.theta_i_pos)
    j_on = scenario.ref_fault.i_neg * phasor(1.0, scenario.ref_fault.theta_i_neg)
    j_off = scenario.ref_prefault.i_neg * phasor(1.0, scenario.ref_prefault.theta_i_neg)
    trace = Trace(
        t=t,
        f_pos_hz=rec[:, 1], f_neg_hz=rec[:, 2],
        theta_pos=rec[:, 3], theta_neg=rec[:, 4],
        ud_pos=rec[:, 5], uq_pos=rec[:, 6],
        ud_neg=rec[:, 7], uq_neg=rec[:, 8],
        umag_pos=rec[:, 9], umag_neg=rec[:, 10],
        i_pos=np.where(on, i_on, i_off),
        i_neg=np.where(on, j_on, j_off),
        diverged=overflow_step >= 0,
    )

    t_clear = min(scenario.fault.t_clear, scenario.t_end)
    verdict = detect_los(trace, scenario.fault.t_on, t_clear)
    if overflow_step >= 0 and not verdict.lost:
        t_of = min(max(overflow_step * dt, scenario.fault.t_on), scenario.t_end)
        dominant = classify(
            compute_coefficients(compose_paths(scenario.circuit), scenario.fault),
            scenario.ref_fault, ug,
        )
        if dominant is InstabilityType.STABLE:
            dominant = InstabilityType.POS_TYPE1
        sig = (
            Signature.CHATTER
            if dominant in (InstabilityType.POS_TYPE2, InstabilityType.NEG_TYPE2)
            else Signature.DRIFT
        )
        verdict = LosVerdict(True, t_of, dominant, sig)
    return trace, verdict


def _first_sustained(mask: np.ndarray, n: int) -> int:
    """Index of the first run of n consecutive True values, or -1."""
    if mask.size < n or n <= 0:
        return -1
    csum = np.convolve(mask.astype(int), np.ones(n, dtype=int), "valid")
    hits = np.nonzero(csum == n)[0]
    return int(hits[0]) if hits.size else -1


def detect_los(
    trace: Trace,
    t_on: float,
    t_clear: float,
    grace: float = 0.5,
    f_dev_hz: float = 5.0,
    sustain: float = 0.05,
    f_nominal_hz: float = 50.0,
) -> LosVerdict:
    """Classify the on-fault window of a trace.

    DRIFT fires when |f - nominal| stays beyond f_dev_hz for `sustain`
    seconds; CHATTER when the d-axis voltage stays below zero that long
    (the orientation condition fails while the frequency rattles around
    the root). The first `grace` seconds after t_on are ignored so
    acquisition transients cannot trip the thresholds. Dominant sequence
    and mechanism come from the earliest event.
    """
    sel = (trace.t >= t_on + grace) & (trace.t < t_clear)
    idx = np.nonzero(sel)[0]
    if idx.size < 2:
        return LosVerdict(False, None, InstabilityType.STABLE, None)
    ts = trace.t[idx]
    n_sus = max(1, int(round(sustain / (ts[1] - ts[0]))))

    events: list[tuple[float, int, InstabilityType, Signature]] = []
    channels = (
        (trace.f_pos_hz[idx], trace.ud_pos[idx],
         InstabilityType.POS_TYPE1, InstabilityType.POS_TYPE2, 0),
        (trace.f_neg_hz[idx], trace.ud_neg[idx],
         InstabilityType.NEG_TYPE1, InstabilityType.NEG_TYPE2, 1),
    )
    for f, ud, drift_kind, chat_kind, seq_rank in channels:
        k = _first_sustained(np.abs(f - f_nominal_hz) > f_dev_hz, n_sus)
        if k >= 0:
            events.append((float(ts[k]), 1 + seq_rank, drift_kind, Signature.DRIFT))
        k = _first_sustained(ud < 0.0, n_sus)
        if k >= 0:
            events.append((float(ts[k]), 0 + seq_rank, chat_kind, Signature.CHATTER))
    if not events:
        return LosVerdict(False, None, InstabilityType.STABLE, None)
    t_los, _, dominant, signature = min(events, key=lambda e: (e[0], e[1]))
    return LosVerdict(True, t_los, dominant, signature)


def trace_to_csv(trace: Trace, fh) -> None:
    """Write the trace in the canonical 11-column CSV layout."""
    fh.write(TRACE_HEADER + "\n")
    cols = (
        trace.t, trace.f_pos_hz, trace.f_neg_hz, trace.theta_pos,
        trace.theta_neg, trace.ud_pos, trace.uq_pos, trace.ud_neg,
        trace.uq_neg, trace.umag_pos, trace.umag_neg,
    )
    for row in zip(*cols):
        fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
