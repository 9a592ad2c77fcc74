"""Steady-state orientation angles (delta+, delta-) of the dual
synchronization loops and their existence/stability classification.

The two q-axis voltages must vanish with positive d-axis voltages
(orientation) and negative per-loop feedback slopes (stability). The solver
seeds damped Newton iterations from a coarse torus grid.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .network import SequenceCoefficients
from .phasor import polar, wrap_angle

__all__ = [
    "CurrentReference",
    "EquilibriumResult",
    "InstabilityType",
    "NoConvergence",
    "pack_params",
    "dq_voltages",
    "solve_equilibrium",
    "classify",
]

_DEGENERATE_TOL = 1e-12


class InstabilityType(enum.Enum):
    """Which sequence loses orientation and through which mechanism."""

    STABLE = "stable"
    POS_TYPE1 = "pos_type1"
    POS_TYPE2 = "pos_type2"
    NEG_TYPE1 = "neg_type1"
    NEG_TYPE2 = "neg_type2"


class NoConvergence(RuntimeError):
    """Newton stalled from every seed while residual minima stayed near zero."""


@dataclass(frozen=True)
class CurrentReference:
    """Sequence current commands: amplitudes and angles in the own frames."""

    i_pos: float = 0.0
    theta_i_pos: float = 0.0
    i_neg: float = 0.0
    theta_i_neg: float = 0.0

    def __post_init__(self):
        if self.i_pos < 0 or self.i_neg < 0:
            raise ValueError("current amplitudes must be >= 0")
        object.__setattr__(self, "theta_i_pos", wrap_angle(self.theta_i_pos))
        object.__setattr__(self, "theta_i_neg", wrap_angle(self.theta_i_neg))


@dataclass(frozen=True)
class EquilibriumResult:
    """Solved angle pair with the voltages and condition verdicts."""

    found: bool
    delta_pos: float
    delta_neg: float
    ud_pos: float
    uq_pos: float
    ud_neg: float
    uq_neg: float
    cond_orientation: bool
    cond_feedback: bool
    residual_norm: float


def pack_params(
    coeffs: SequenceCoefficients, ref: CurrentReference, ug_pos: float
) -> np.ndarray:
    """Pack the twelve scalars driving the orientation equations.

    Layout: amplitude/angle pairs of grid, own-current, and cross-current
    contributions, positive sequence first (see kernels.P_* indices).
    """
    k1m, k1a = polar(coeffs.k1)
    z2m, z2a = polar(coeffs.z2)
    z3m, z3a = polar(coeffs.z3)
    k4m, k4a = polar(coeffs.k4)
    z5m, z5a = polar(coeffs.z5)
    z6m, z6a = polar(coeffs.z6)
    return np.array(
        [
            k1m * ug_pos, k1a,
            z2m * ref.i_pos, z2a + ref.theta_i_pos,
            z3m * ref.i_neg, z3a + ref.theta_i_neg,
            k4m * ug_pos, k4a,
            z5m * ref.i_neg, z5a + ref.theta_i_neg,
            z6m * ref.i_pos, z6a + ref.theta_i_pos,
        ]
    )


def dq_voltages(
    coeffs: SequenceCoefficients,
    ref: CurrentReference,
    ug_pos: float,
    delta_pos: float,
    delta_neg: float,
) -> tuple[float, float, float, float]:
    """Frame-rotated voltages (ud+, uq+, ud-, uq-) at an angle pair.

    The negative sequence uses the clockwise-frame convention
    ud- - j uq-, so uq- is minus the imaginary part of the rotated sum.
    """
    prm = pack_params(coeffs, ref, ug_pos)
    ud_p, uq_p, ud_n, uq_n = kernels.dq_eval(prm, delta_pos, delta_neg)
    return float(ud_p), float(uq_p), float(ud_n), float(uq_n)


def _negative_degenerate(prm: np.ndarray) -> bool:
    """True when the negative orientation equation is identically zero."""
    return (
        prm[kernels.P_A4] < _DEGENERATE_TOL
        and prm[kernels.P_B5] < _DEGENERATE_TOL
        and prm[kernels.P_C6] < _DEGENERATE_TOL
        and prm[kernels.P_C3] < _DEGENERATE_TOL
    )


def _solve_degenerate(prm: np.ndarray, ud_min: float) -> EquilibriumResult:
    """Closed-form positive-only solve when the negative equation vanishes."""
    a1 = prm[kernels.P_A1]
    f1 = prm[kernels.P_F1]
    b2 = prm[kernels.P_B2]
    p2 = prm[kernels.P_P2]
    not_found = EquilibriumResult(
        found=False, delta_pos=math.nan, delta_neg=math.nan,
        ud_pos=math.nan, uq_pos=math.nan, ud_neg=math.nan, uq_neg=math.nan,
        cond_orientation=False, cond_feedback=False, residual_norm=math.inf,
    )
    if a1 < _DEGENERATE_TOL:
        return not_found
    x = -b2 * math.sin(p2) / a1
    if abs(x) > 1.0:
        return not_found
    psi = math.asin(x)
    if math.cos(psi) < 1e-12:
        return not_found
    ud_p = a1 * math.cos(psi) + b2 * math.cos(p2)
    if ud_p <= ud_min:
        return not_found
    dp = (f1 - psi) % (2.0 * math.pi)
    return EquilibriumResult(
        found=True, delta_pos=dp, delta_neg=0.0,
        ud_pos=ud_p, uq_pos=0.0, ud_neg=0.0, uq_neg=0.0,
        cond_orientation=True, cond_feedback=True, residual_norm=0.0,
    )


def solve_equilibrium(
    coeffs: SequenceCoefficients,
    ref: CurrentReference,
    ug_pos: float,
    grid_deg: float = 2.0,
    tol: float = 1e-10,
    ud_min: float = 1e-9,
) -> EquilibriumResult:
    """Find the qualifying angle pair, scanning the full torus.

    A root qualifies when both q-axis residuals vanish, both d-axis voltages
    are positive, and both per-loop feedback slopes are negative. When the
    negative-sequence equation is identically zero (no grid contribution, no
    injected negative current) the positive problem is solved alone with
    delta- reported as 0 and the negative conditions treated as vacuous.
    """
    prm = pack_params(coeffs, ref, ug_pos)
    if _negative_degenerate(prm):
        return _solve_degenerate(prm, ud_min)

    grid_n = max(8, int(round(360.0 / grid_deg)))
    found, dp, dn, res, any_conv = kernels.scan_roots(prm, grid_n, tol, 80, ud_min)
    if found:
        ud_p, uq_p, ud_n, uq_n = kernels.dq_eval(prm, dp, dn)
        return EquilibriumResult(
            found=True, delta_pos=float(dp), delta_neg=float(dn),
            ud_pos=float(ud_p), uq_pos=float(uq_p),
            ud_neg=float(ud_n), uq_neg=float(uq_n),
            cond_orientation=True, cond_feedback=True,
            residual_norm=float(res),
        )
    if not any_conv and res < 1e-6:
        raise NoConvergence(
            f"Newton stalled from every seed (best residual {res:.3e})"
        )
    return EquilibriumResult(
        found=False, delta_pos=math.nan, delta_neg=math.nan,
        ud_pos=math.nan, uq_pos=math.nan, ud_neg=math.nan, uq_neg=math.nan,
        cond_orientation=False, cond_feedback=False,
        residual_norm=float(res),
    )


def refine_root(
    coeffs: SequenceCoefficients,
    ref: CurrentReference,
    ug_pos: float,
    delta_pos: float,
    delta_neg: float,
    tol: float = 1e-10,
    ud_min: float = 1e-9,
) -> EquilibriumResult | None:
    """Polish a known nearby root (warm start); None when it stops qualifying."""
    prm = pack_params(coeffs, ref, ug_pos)
    if _negative_degenerate(prm):
        out = _solve_degenerate(prm, ud_min)
        return out if out.found else None
    ok, dp, dn, res = kernels.newton_pair(prm, delta_pos, delta_neg, tol, 80)
    if not ok:
        return None
    ud_p, uq_p, ud_n, uq_n = kernels.dq_eval(prm, dp, dn)
    j11, _, _, j22 = kernels.jacobian_eval(prm, dp, dn)
    if not (ud_p > ud_min and ud_n > ud_min and j11 < 0.0 and j22 < 0.0):
        return None
    return EquilibriumResult(
        found=True, delta_pos=float(dp), delta_neg=float(dn),
        ud_pos=float(ud_p), uq_pos=float(uq_p),
        ud_neg=float(ud_n), uq_neg=float(uq_n),
        cond_orientation=True, cond_feedback=True, residual_norm=float(res),
    )


def _excess(amp: float, limit: float) -> float:
    """Fractional violation of a per-angle limit; 0 when nothing injected."""
    if limit > 0.0:
        return amp / limit
    return math.inf if amp > 0.0 else 0.0


def classify(
    coeffs: SequenceCoefficients, ref: CurrentReference, ug_pos: float
) -> InstabilityType:
    """STABLE when a qualifying root exists; otherwise the most-violated
    per-angle single-sequence limit decides the dominant sequence and
    mechanism, ties going to the positive sequence."""
    result = solve_equilibrium(coeffs, ref, ug_pos)
    if result.found:
        return InstabilityType.STABLE

    from .limits import Binding, decoupled_limit

    lim_p = decoupled_limit(coeffs, ug_pos, "pos", ref.theta_i_pos)
    lim_n = decoupled_limit(coeffs, ug_pos, "neg", ref.theta_i_neg)
    excess_p = _excess(ref.i_pos, lim_p.i_limit)
    excess_n = _excess(ref.i_neg, lim_n.i_limit)
    if excess_p >= excess_n:
        mech = lim_p.binding
        return (
            InstabilityType.POS_TYPE2
            if mech is Binding.TYPE2
            else InstabilityType.POS_TYPE1
        )
    mech = lim_n.binding
    return (
        InstabilityType.NEG_TYPE2
        if mech is Binding.TYPE2
        else InstabilityType.NEG_TYPE1
    )
