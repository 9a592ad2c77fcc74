"""Tests for the dual-angle equilibrium solver.

Root anchors were frozen from an independent dense-grid bisection over the
orientation equations before the solver was written (reference circuit,
0.01-ohm fault branch).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibgsync import (
    CurrentReference,
    EquilibriumResult,
    FaultSpec,
    FaultType,
    InstabilityType,
    classify,
    compose_paths,
    compute_coefficients,
    dq_voltages,
    solve_equilibrium,
    table_circuit,
)
from ibgsync.equilibrium import pack_params, refine_root
from ibgsync import kernels

ZF = 7.43801652892562e-06
UG = 120.0 / 110.0

# (fault, i_pos, th_pos_deg, i_neg, th_neg_deg) -> (delta_pos, delta_neg, ud_pos, ud_neg)
ROOT_ANCHORS = [
    (FaultType.DLG, 0.76, -30.0, 0.5, 90.0, 1.426711, 0.251083, 0.369409, 0.067318),
    (FaultType.LL, 0.5, -90.0, 0.5, 90.0, 6.188051, 0.065683, 0.827035, 0.257031),
    (FaultType.SLG, 0.6, -90.0, 0.3, 90.0, 6.198881, 3.222908, 1.224837, 0.091310),
]

# zero injection: delta+ = angle(K1), delta- = angle(K4) (mod 2 pi)
ZERO_INJECTION = [
    (FaultType.SLG, 0.001469, 3.137314),
    (FaultType.DLG, 0.001814, 0.001814),
    (FaultType.LL, -1.78797e-05, 1.78798e-05),
]


def coeffs_for(fault_type, zf=ZF):
    return compute_coefficients(
        compose_paths(table_circuit()), FaultSpec(fault_type, z_f=zf)
    )


def ref_deg(i_pos, th_pos, i_neg, th_neg):
    return CurrentReference(
        i_pos, math.radians(th_pos), i_neg, math.radians(th_neg)
    )


@pytest.mark.parametrize(
    "fault_type,ip,tp,inn,tn,dp,dn,udp,udn", ROOT_ANCHORS
)
def test_root_anchors(fault_type, ip, tp, inn, tn, dp, dn, udp, udn):
    res = solve_equilibrium(coeffs_for(fault_type), ref_deg(ip, tp, inn, tn), UG)
    assert res.found
    assert res.delta_pos == pytest.approx(dp, abs=2e-5)
    assert res.delta_neg == pytest.approx(dn, abs=2e-5)
    assert res.ud_pos == pytest.approx(udp, abs=2e-5)
    assert res.ud_neg == pytest.approx(udn, abs=2e-5)
    assert abs(res.uq_pos) < 1e-8
    assert abs(res.uq_neg) < 1e-8
    assert res.residual_norm < 1e-8
    assert res.cond_orientation and res.cond_feedback


@pytest.mark.parametrize("fault_type,dp,dn", ZERO_INJECTION)
def test_zero_injection_aligns_with_grid_terms(fault_type, dp, dn):
    res = solve_equilibrium(coeffs_for(fault_type), CurrentReference(), UG)
    assert res.found
    assert math.sin(res.delta_pos - dp) == pytest.approx(0.0, abs=1e-5)
    assert math.sin(res.delta_neg - dn) == pytest.approx(0.0, abs=1e-5)


def test_just_past_limit_has_no_root():
    c = coeffs_for(FaultType.DLG)
    at_limit = solve_equilibrium(c, ref_deg(0.76, -30.0, 0.5, 90.0), UG)
    past = solve_equilibrium(c, ref_deg(0.77, -30.0, 0.5, 90.0), UG)
    assert at_limit.found
    assert not past.found
    assert math.isnan(past.delta_pos)
    assert not past.cond_orientation


def test_dq_voltages_match_solution_fields():
    c = coeffs_for(FaultType.DLG)
    ref = ref_deg(0.76, -30.0, 0.5, 90.0)
    res = solve_equilibrium(c, ref, UG)
    ud_p, uq_p, ud_n, uq_n = dq_voltages(c, ref, UG, res.delta_pos, res.delta_neg)
    assert ud_p == pytest.approx(res.ud_pos, rel=1e-12)
    assert uq_p == pytest.approx(res.uq_pos, abs=1e-12)
    assert ud_n == pytest.approx(res.ud_neg, rel=1e-12)
    assert uq_n == pytest.approx(res.uq_neg, abs=1e-12)


def test_residuals_vanish_at_root():
    c = coeffs_for(FaultType.SLG)
    ref = ref_deg(0.6, -90.0, 0.3, 90.0)
    res = solve_equilibrium(c, ref, UG)
    prm = pack_params(c, ref, UG)
    r1, r2 = kernels.residual_eval(prm, res.delta_pos, res.delta_neg)
    assert abs(r1) < 1e-9
    assert abs(r2) < 1e-9


def test_feedback_slopes_negative_at_root():
    c = coeffs_for(FaultType.LL)
    ref = ref_deg(0.5, -90.0, 0.5, 90.0)
    res = solve_equilibrium(c, ref, UG)
    prm = pack_params(c, ref, UG)
    j11, _, _, j22 = kernels.jacobian_eval(prm, res.delta_pos, res.delta_neg)
    assert j11 < 0
    assert j22 < 0


def test_degenerate_negative_solved_in_closed_form():
    """TLG with no negative injection: the negative equation is identically
    zero and the positive angle comes from a one-dimensional solve. The
    near-bolted fault leaves almost no grid voltage, so the current must sit
    along the impedance angle to be holdable at all."""
    c = coeffs_for(FaultType.TLG)
    ref = CurrentReference(i_pos=0.3, theta_i_pos=-math.radians(81.2883599742))
    res = solve_equilibrium(c, ref, UG)
    assert res.found
    assert res.delta_neg == 0.0
    assert res.ud_neg == 0.0
    assert res.residual_norm == 0.0
    assert res.ud_pos == pytest.approx(0.3 * 0.576652764351, rel=1e-3)
    # positive residual really is zero at the reported angle
    prm = pack_params(c, ref, UG)
    r1, _ = kernels.residual_eval(prm, res.delta_pos, 0.0)
    assert abs(r1) < 1e-12


def test_tlg_bolted_cannot_hold_any_current():
    paths = compose_paths(table_circuit())
    c = compute_coefficients(paths, FaultSpec(FaultType.TLG, z_f=0j))
    res = solve_equilibrium(c, CurrentReference(i_pos=0.05, theta_i_pos=-0.5), UG)
    assert not res.found


def test_refine_root_polishes_perturbed_anchor():
    c = coeffs_for(FaultType.DLG)
    ref = ref_deg(0.76, -30.0, 0.5, 90.0)
    out = refine_root(c, ref, UG, 1.426711 + 0.05, 0.251083 - 0.05)
    assert out is not None
    assert out.delta_pos == pytest.approx(1.426711, abs=2e-5)
    assert out.delta_neg == pytest.approx(0.251083, abs=2e-5)


def test_refine_root_rejects_disqualified_point():
    c = coeffs_for(FaultType.DLG)
    ref = ref_deg(0.77, -30.0, 0.5, 90.0)
    assert refine_root(c, ref, UG, 1.426711, 0.251083) is None


def test_root_moves_continuously_with_injection():
    c = coeffs_for(FaultType.DLG)
    base = solve_equilibrium(c, ref_deg(0.5, -30.0, 0.2, 90.0), UG)
    near = solve_equilibrium(c, ref_deg(0.5 + 1e-4, -30.0, 0.2, 90.0), UG)
    assert abs(near.delta_pos - base.delta_pos) < 1e-2
    assert abs(near.delta_neg - base.delta_neg) < 1e-2


def test_classify_stable_and_unstable():
    c = coeffs_for(FaultType.DLG)
    assert classify(c, ref_deg(0.76, -30.0, 0.5, 90.0), UG) is InstabilityType.STABLE
    assert classify(c, CurrentReference(), UG) is InstabilityType.STABLE
    # amplitude well above the overexcited positive limit
    assert classify(c, ref_deg(0.85, -30.0, 0.5, 90.0), UG) is InstabilityType.POS_TYPE1
    assert classify(c, ref_deg(0.90, 90.0, 0.2, -90.0), UG) is InstabilityType.POS_TYPE2


def test_classify_negative_sequence_mechanisms():
    c = coeffs_for(FaultType.SLG)
    assert classify(c, ref_deg(0.3, -90.0, 0.80, -30.0), UG) is InstabilityType.NEG_TYPE1
    assert classify(c, ref_deg(0.5, -90.0, 0.5, 90.0), UG) is InstabilityType.NEG_TYPE2


def test_current_reference_validation():
    with pytest.raises(ValueError):
        CurrentReference(i_pos=-0.1)
    ref = CurrentReference(0.5, 3 * math.pi, 0.2, -3 * math.pi)
    assert -math.pi < ref.theta_i_pos <= math.pi
    assert -math.pi < ref.theta_i_neg <= math.pi


@settings(max_examples=40, deadline=None)
@given(
    ip=st.floats(min_value=0.0, max_value=0.5),
    tp=st.floats(min_value=-math.pi, max_value=math.pi),
    inn=st.floats(min_value=0.0, max_value=0.3),
    tn=st.floats(min_value=-math.pi, max_value=math.pi),
)
def test_found_roots_always_qualify(ip, tp, inn, tn):
    """Whatever the injection, a reported root satisfies all three
    qualification conditions (residual, orientation, feedback)."""
    c = coeffs_for(FaultType.SLG)
    res = solve_equilibrium(c, CurrentReference(ip, tp, inn, tn), UG)
    if not res.found:
        return
    assert res.ud_pos > 0
    assert res.ud_neg >= 0
    assert abs(res.uq_pos) < 1e-7
    assert abs(res.uq_neg) < 1e-7
    prm = pack_params(c, CurrentReference(ip, tp, inn, tn), UG)
    j11, _, _, j22 = kernels.jacobian_eval(prm, res.delta_pos, res.delta_neg)
    assert j11 < 1e-12
    assert j22 < 1e-12
