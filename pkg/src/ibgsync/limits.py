"""Current-injection limits: decoupled closed forms, coupled amplitude
traversal, and polar region boundaries.

Two mechanisms bound the injectable amplitude of either sequence. Type 1 is
the fold of the orientation equation (the sine equation loses its real
root). Type 2 is the d-axis voltage crossing zero while the root persists.
Which one binds depends on the side of the impedance angle the injection
sits on: with cos(phi + theta_i) < 0 the voltage magnitude shrinks with
amplitude and the type-2 circle is reached first; otherwise the voltage
grows and only the fold can bind.
"""

import enum
import math
from dataclasses import dataclass

from . import kernels
from .equilibrium import CurrentReference, pack_params, refine_root, solve_equilibrium
from .network import SequenceCoefficients
from .phasor import polar, wrap_angle

__all__ = [
    "Binding",
    "LimitResult",
    "RegionBoundary",
    "decoupled_limit",
    "traversal_limit",
    "region_boundary",
]

_SEQUENCES = ("pos", "neg")


class Binding(enum.Enum):
    """Constraint that sets a limit: fold, voltage circle, or scan ceiling."""

    TYPE1 = "type1"
    TYPE2 = "type2"
    CEILING = "ceiling"


@dataclass(frozen=True)
class LimitResult:
    """Injection limit for one sequence at one angle."""

    sequence: str
    theta_i: float
    i_limit: float
    binding: Binding

    def __post_init__(self):
        if self.sequence not in _SEQUENCES:
            raise ValueError(f"sequence must be one of {_SEQUENCES}")
        if self.i_limit < 0:
            raise ValueError("i_limit must be >= 0")


@dataclass(frozen=True)
class RegionBoundary:
    """Ordered limit samples over a full angle sweep of one sequence."""

    sequence: str
    fixed_other: tuple[float, float] | None
    samples: tuple[LimitResult, ...]


def _own_pair(coeffs: SequenceCoefficients, sequence: str) -> tuple[complex, complex]:
    if sequence == "pos":
        return coeffs.k1, coeffs.z2
    if sequence == "neg":
        return coeffs.k4, coeffs.z5
    raise ValueError(f"sequence must be one of {_SEQUENCES}")


def decoupled_limit(
    coeffs: SequenceCoefficients, ug_pos: float, sequence: str, theta_i: float
) -> LimitResult:
    """Closed-form single-sequence limit ignoring cross coupling.

    On the shrinking side (cos(phi) < 0) the limit is the type-2 circle
    |K| Ug / |Z|; on the growing side only the type-1 fold
    |K| Ug / (|Z| |sin(phi)|) applies and tends to infinity as the
    injection aligns with the impedance angle.
    """
    k, z = _own_pair(coeffs, sequence)
    zm, za = polar(z)
    km = abs(k)
    if zm < 1e-15:
        return LimitResult(sequence, theta_i, math.inf, Binding.CEILING)
    phi = wrap_angle(za + theta_i)
    circle = km * ug_pos / zm
    if math.cos(phi) < 0.0:
        return LimitResult(sequence, theta_i, circle, Binding.TYPE2)
    s = abs(math.sin(phi))
    if s > 1e-9:
        return LimitResult(sequence, theta_i, circle / s, Binding.TYPE1)
    return LimitResult(sequence, theta_i, math.inf, Binding.TYPE1)


def _make_ref(
    sequence: str, amp: float, theta_i: float, other: tuple[float, float]
) -> CurrentReference:
    if sequence == "pos":
        return CurrentReference(amp, theta_i, other[0], other[1])
    return CurrentReference(other[0], other[1], amp, theta_i)


def _failure_binding(
    coeffs: SequenceCoefficients,
    ref: CurrentReference,
    ug_pos: float,
    grid_deg: float,
    tol: float,
) -> Binding:
    """Mechanism at a failing amplitude: rerun the scan with the d-axis
    requirement dropped; a surviving slope-stable root means the voltage
    condition is what failed (type 2), none at all means the fold (type 1)."""
    prm = pack_params(coeffs, ref, ug_pos)
    neg_dead = (
        prm[kernels.P_A4] < 1e-12
        and prm[kernels.P_B5] < 1e-12
        and prm[kernels.P_C6] < 1e-12
        and prm[kernels.P_C3] < 1e-12
    )
    if neg_dead:
        a1, f1 = prm[kernels.P_A1], prm[kernels.P_F1]
        b2, p2 = prm[kernels.P_B2], prm[kernels.P_P2]
        if a1 < 1e-12 or abs(b2 * math.sin(p2) / a1) > 1.0:
            return Binding.TYPE1
        psi = math.asin(-b2 * math.sin(p2) / a1)
        if math.cos(psi) < 1e-12:
            return Binding.TYPE1
        return Binding.TYPE2
    grid_n = max(8, int(round(360.0 / grid_deg)))
    found, _, _, _, _ = kernels.scan_roots(prm, grid_n, tol, 80, -1e30)
    return Binding.TYPE2 if found else Binding.TYPE1


def traversal_limit(
    coeffs: SequenceCoefficients,
    ug_pos: float,
    sequence: str,
    theta_i: float,
    fixed_other: tuple[float, float] | None = None,
    step: float = 0.01,
    ceiling: float = 3.0,
    refine: bool = False,
    grid_deg: float = 2.0,
    tol: float = 1e-10,
    ud_min: float = 1e-9,
) -> LimitResult:
    """Largest amplitude of one sequence for which a qualifying equilibrium
    exists, holding the other sequence fixed.

    Amplitudes are swept upward from `step` in `step` increments. Each step
    warm-starts Newton from the previous root; a warm-start miss is
    confirmed by a full torus scan before the amplitude is declared
    failing. With `refine` three bisection iterations tighten the reported
    limit between the last passing and first failing amplitudes; by default
    the step-grid value is reported.
    """
    if sequence not in _SEQUENCES:
        raise ValueError(f"sequence must be one of {_SEQUENCES}")
    if step <= 0:
        raise ValueError("step must be > 0")
    if ceiling <= step:
        raise ValueError("ceiling must exceed step")
    other = fixed_other if fixed_other is not None else (0.0, 0.0)

    last_ok = 0.0
    prev: tuple[float, float] | None = None
    fail_amp: float | None = None
    n_steps = int(math.floor(ceiling / step + 1e-9))
    for k in range(1, n_steps + 1):
        amp = k * step
        ref = _make_ref(sequence, amp, theta_i, other)
        res = None
        if prev is not None:
            res = refine_root(coeffs, ref, ug_pos, prev[0], prev[1], tol, ud_min)
        if res is None:
            full = solve_equilibrium(coeffs, ref, ug_pos, grid_deg, tol, ud_min)
            res = full if full.found else None
        if res is None:
            fail_amp = amp
            break
        last_ok = amp
        prev = (res.delta_pos, res.delta_neg)

    if fail_amp is None:
        return LimitResult(sequence, theta_i, n_steps * step, Binding.CEILING)

    binding = _failure_binding(
        coeffs, _make_ref(sequence, fail_amp, theta_i, other), ug_pos, grid_deg, tol
    )
    i_limit = last_ok
    if refine:
        lo, hi = last_ok, fail_amp
        for _ in range(3):
            mid = 0.5 * (lo + hi)
            ok = solve_equilibrium(
                coeffs, _make_ref(sequence, mid, theta_i, other), ug_pos,
                grid_deg, tol, ud_min,
            ).found
            if ok:
                lo = mid
            else:
                hi = mid
        i_limit = lo
    return LimitResult(sequence, theta_i, i_limit, binding)


def region_boundary(
    coeffs: SequenceCoefficients,
    ug_pos: float,
    sequence: str,
    fixed_other: tuple[float, float] | None = None,
    angle_step: float = math.pi / 36,
    step: float = 0.01,
    ceiling: float = 3.0,
    refine: bool = False,
    grid_deg: float = 2.0,
) -> RegionBoundary:
    """Sweep theta_i over [-pi, pi) and collect the traversal limit at each
    angle. Ceiling-capped samples keep the CEILING binding flag."""
    if angle_step <= 0:
        raise ValueError("angle_step must be > 0")
    n = int(math.ceil((2.0 * math.pi - 1e-12) / angle_step))
    samples = []
    for k in range(n):
        theta = -math.pi + k * angle_step
        samples.append(
            traversal_limit(
                coeffs, ug_pos, sequence, float(theta),
                fixed_other=fixed_other, step=step, ceiling=ceiling,
                refine=refine, grid_deg=grid_deg,
            )
        )
    return RegionBoundary(sequence, fixed_other, tuple(samples))
