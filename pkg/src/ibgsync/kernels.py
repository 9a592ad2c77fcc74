"""Hot numerical kernels: sequence-coefficient evaluation, torus-grid Newton
root finding, and the closed-loop RK4 integrator.

Every kernel exists in two flavors: a numba ``@njit`` build (default when
numba imports) and a pure-numpy fallback. Set ``IBGSYNC_PURE_NUMPY=1`` to
force the fallback; ``USING_NUMBA`` reports which flavor is active.
"""

import math
import os

import numpy as np

_FORCE_NUMPY = os.environ.get("IBGSYNC_PURE_NUMPY", "") == "1"

if not _FORCE_NUMPY:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - environments without numba
        HAS_NUMBA = False
else:
    HAS_NUMBA = False

USING_NUMBA = HAS_NUMBA

# fault codes shared with the object layer
FAULT_NONE = 0
FAULT_SLG = 1
FAULT_DLG = 2
FAULT_LL = 3
FAULT_TLG = 4

# packed equilibrium parameter indices: amplitude/angle pairs of the six
# rotated voltage contributions (grid, own-current, cross-current per sequence)
P_A1, P_F1, P_B2, P_P2, P_C3, P_P3 = 0, 1, 2, 3, 4, 5
P_A4, P_F4, P_B5, P_P5, P_C6, P_P6 = 6, 7, 8, 9, 10, 11


def _seq_coeffs(code, s, rl, xl, rl0, xl0, rg, xg, rg0, xg0, zf):
    """Evaluate one coefficient column at frequency scale s.

    Returns (k1, z2, z3, k4, z5, z6, denom); reactive parts scale with s,
    the fault impedance does not.
    """
    p = rg + 1j * (s * xg)
    p0 = rg0 + 1j * (s * xg0)
    el = rl + 1j * (s * xl)
    el0 = rl0 + 1j * (s * xl0)
    q = p0 * el0 / (p0 + el0)
    f = zf
    if code == FAULT_SLG:
        d = 2.0 * p + q + 3.0 * f
        k1 = (p + q + 3.0 * f) / d
        z2 = p * (p + q + 3.0 * f) / d + el
        z3 = -p * p / d
        k4 = -p / d
        z5 = z2
        z6 = z3
    elif code == FAULT_DLG:
        d = p + 2.0 * q + 6.0 * f
        k1 = (q + 3.0 * f) / d
        z2 = p * (q + 3.0 * f) / d + el
        z3 = p * (q + 3.0 * f) / d
        k4 = k1
        z5 = z2
        z6 = z3
    elif code == FAULT_LL:
        d = 2.0 * p + f
        k1 = (p + f) / d
        z2 = p * (p + f) / d + el
        z3 = p * p / d
        k4 = p / d
        z5 = z2
        z6 = z3
    elif code == FAULT_TLG:
        d = p + f
        k1 = f / d
        z2 = p * f / d + el
        z3 = 0.0 + 0.0j
        k4 = 0.0 + 0.0j
        z5 = 0.0 + 0.0j
        z6 = 0.0 + 0.0j
    else:
        d = 1.0 + 0.0j
        k1 = 1.0 + 0.0j
        z2 = p + el
        z3 = 0.0 + 0.0j
        k4 = 0.0 + 0.0j
        z5 = p + el
        z6 = 0.0 + 0.0j
    return k1, z2, z3, k4, z5, z6, d


def _seq_coeffs_mixed(code, sp, sn, rl, xl, rl0, xl0, rg, xg, rg0, xg0, zf):
    """Coefficients with the mixed frequency convention: K1/K4 at the grid
    frequency, Z2/Z6 at the positive estimate, Z3/Z5 at the negative one."""
    k1, z2, z3, k4, z5, z6, _ = _seq_coeffs(
        code, 1.0, rl, xl, rl0, xl0, rg, xg, rg0, xg0, zf
    )
    if sp != 1.0:
        _, z2, _, _, _, z6, _ = _seq_coeffs(
            code, sp, rl, xl, rl0, xl0, rg, xg, rg0, xg0, zf
        )
    if sn != 1.0:
        _, _, z3, _, z5, _, _ = _seq_coeffs(
            code, sn, rl, xl, rl0, xl0, rg, xg, rg0, xg0, zf
        )
    return k1, z2, z3, k4, z5, z6


def _residual(prm, dp, dn):
    """q-axis residuals (r1, r2) of the two orientation equations.

    uq_pos = r1 and uq_neg = -r2; works elementwise on arrays.
    """
    r1 = (
        prm[P_A1] * np.sin(prm[P_F1] - dp)
        + prm[P_B2] * np.sin(prm[P_P2])
        + prm[P_C3] * np.sin(prm[P_P3] + dn - dp)
    )
    r2 = (
        prm[P_A4] * np.sin(prm[P_F4] - dn)
        + prm[P_B5] * np.sin(prm[P_P5])
        + prm[P_C6] * np.sin(prm[P_P6] + dp - dn)
    )
    return r1, r2


def _jacobian(prm, dp, dn):
    """Partials of (r1, r2) w.r.t. (dp, dn); elementwise on arrays."""
    cp = prm[P_A1] * np.cos(prm[P_F1] - dp)
    cx = prm[P_C3] * np.cos(prm[P_P3] + dn - dp)
    cn = prm[P_A4] * np.cos(prm[P_F4] - dn)
    cy = prm[P_C6] * np.cos(prm[P_P6] + dp - dn)
    j11 = -cp - cx
    j12 = cx
    j21 = cy
    j22 = -cn - cy
    return j11, j12, j21, j22


def _dq_eval(prm, dp, dn):
    """d/q voltages at an angle pair; uq_neg carries the clockwise-frame sign."""
    r1, r2 = _residual(prm, dp, dn)
    ud_p = (
        prm[P_A1] * np.cos(prm[P_F1] - dp)
        + prm[P_B2] * np.cos(prm[P_P2])
        + prm[P_C3] * np.cos(prm[P_P3] + dn - dp)
    )
    ud_n = (
        prm[P_A4] * np.cos(prm[P_F4] - dn)
        + prm[P_B5] * np.cos(prm[P_P5])
        + prm[P_C6] * np.cos(prm[P_P6] + dp - dn)
    )
    return ud_p, r1, ud_n, -r2


def _newton_pair(prm, dp, dn, tol, maxit):
    """Damped Newton on (r1, r2) from one seed; returns (ok, dp, dn, res)."""
    for _ in range(maxit):
        r1, r2 = _residual(prm, dp, dn)
        res = abs(r1) if abs(r1) > abs(r2) else abs(r2)
        if res < tol:
            return True, dp % (2.0 * math.pi), dn % (2.0 * math.pi), res
        j11, j12, j21, j22 = _jacobian(prm, dp, dn)
        det = j11 * j22 - j12 * j21
        if abs(det) < 1e-14:
            return False, dp, dn, res
        sp = -(j22 * r1 - j12 * r2) / det
        sn = -(-j21 * r1 + j11 * r2) / det
        if sp > 0.5:
            sp = 0.5
        elif sp < -0.5:
            sp = -0.5
        if sn > 0.5:
            sn = 0.5
        elif sn < -0.5:
            sn = -0.5
        dp += sp
        dn += sn
    r1, r2 = _residual(prm, dp, dn)
    res = abs(r1) if abs(r1) > abs(r2) else abs(r2)
    return res < tol, dp % (2.0 * math.pi), dn % (2.0 * math.pi), res


def _qualifies(prm, dp, dn, ud_min):
    """Orientation (ud > 0) and negative-feedback (g < 0) checks at a root."""
    ud_p, _, ud_n, _ = _dq_eval(prm, dp, dn)
    j11, _, _, j22 = _jacobian(prm, dp, dn)
    return ud_p > ud_min and ud_n > ud_min and j11 < 0.0 and j22 < 0.0


def _scan_roots_loop(prm, grid_n, tol, maxit, ud_min):
    """Torus-grid-seeded Newton; returns the best qualifying root.

    Returns (found, dp, dn, res, any_converged).
    """
    best_res = 1e30
    best_dp = 0.0
    best_dn = 0.0
    found = False
    any_conv = False
    h = 2.0 * math.pi / grid_n
    for i in range(grid_n):
        for j in range(grid_n):
            ok, dp, dn, res = _newton_pair(prm, i * h, j * h, tol, maxit)
            if not ok:
                continue
            any_conv = True
            if _qualifies(prm, dp, dn, ud_min) and res < best_res:
                best_res = res
                best_dp = dp
                best_dn = dn
                found = True
    return found, best_dp, best_dn, best_res, any_conv


def _scan_roots_vec(prm, grid_n, tol, maxit, ud_min):
    """Vectorized twin of _scan_roots_loop (all seeds advanced together)."""
    h = 2.0 * math.pi / grid_n
    g = np.arange(grid_n) * h
    dp, dn = np.meshgrid(g, g, indexing="ij")
    dp = dp.ravel().copy()
    dn = dn.ravel().copy()
    for _ in range(maxit):
        r1, r2 = _residual(prm, dp, dn)
        j11, j12, j21, j22 = _jacobian(prm, dp, dn)
        det = j11 * j22 - j12 * j21
        det = np.where(np.abs(det) < 1e-14, np.inf, det)
        sp = np.clip(-(j22 * r1 - j12 * r2) / det, -0.5, 0.5)
        sn = np.clip(-(-j21 * r1 + j11 * r2) / det, -0.5, 0.5)
        dp = dp + sp
        dn = dn + sn
    r1, r2 = _residual(prm, dp, dn)
    res = np.maximum(np.abs(r1), np.abs(r2))
    conv = res < tol
    if not conv.any():
        return False, 0.0, 0.0, float(res.min()), False
    dp = dp % (2.0 * math.pi)
    dn = dn % (2.0 * math.pi)
    ud_p, _, ud_n, _ = _dq_eval(prm, dp, dn)
    j11, _, _, j22 = _jacobian(prm, dp, dn)
    good = conv & (ud_p > ud_min) & (ud_n > ud_min) & (j11 < 0.0) & (j22 < 0.0)
    if not good.any():
        return False, 0.0, 0.0, float(res[conv].min()), True
    k = int(np.argmin(np.where(good, res, np.inf)))
    return True, float(dp[k]), float(dn[k]), float(res[k]), True


def _deriv(y, t, code, zf, paths, ug, theta_g0, w0, ref, gains, mode_fll,
           adaptive):
    """Time derivative of the 9-component closed-loop state.

    State layout: [Re U+, Im U+, Re U-, Im U-, theta+, xi+, theta-, xi-, eps].
    ref layout: [I+, theta_i+, I-, theta_i-].
    gains layout: [k_sogi, kp_pll, ki_pll, kp_fll, ki_fll].
    """
    up = y[0] + 1j * y[1]
    un = y[2] + 1j * y[3]
    th_p = y[4]
    xi_p = y[5]
    th_n = y[6]
    xi_n = y[7]
    eps = y[8]
    k_sogi = gains[0]
    kp_pll = gains[1]
    ki_pll = gains[2]
    kp_fll = gains[3]
    ki_fll = gains[4]

    # measured d/q components in the two estimated frames
    mp = up * np.exp(-1j * th_p)
    mn = un.conjugate() * np.exp(-1j * th_n)
    uq_p = mp.imag
    uq_n = -mn.imag

    w_p = w0 + kp_pll * uq_p + ki_pll * xi_p
    w_n = w0 - kp_pll * uq_n - ki_pll * xi_n

    if adaptive:
        if mode_fll:
            # state-held part of the FLL frequency; breaks the loop between
            # the impedance scale and the error that depends on it
            sp = (w0 + ki_fll * eps) / w0
            sn = sp
        else:
            sp = w_p / w0
            sn = w_n / w0
        if sp < 0.2:
            sp = 0.2
        elif sp > 5.0:
            sp = 5.0
        if sn < 0.2:
            sn = 0.2
        elif sn > 5.0:
            sn = 5.0
    else:
        sp = 1.0
        sn = 1.0

    k1, z2, z3, k4, z5, z6 = _seq_coeffs_mixed(
        code, sp, sn, paths[0], paths[1], paths[2], paths[3],
        paths[4], paths[5], paths[6], paths[7], zf,
    )

    theta_g = theta_g0 + w0 * t
    ub_p = (
        k1 * ug * np.exp(1j * (theta_g - math.pi / 3.0))
        + z2 * ref[0] * np.exp(1j * (th_p + ref[1]))
        + z3 * ref[2] * np.exp(1j * (th_n + ref[3] - 2.0 * math.pi / 3.0))
    )
    ub_n = (
        k4 * ug * np.exp(1j * (theta_g + math.pi / 3.0))
        + z5 * ref[2] * np.exp(1j * (th_n + ref[3]))
        + z6 * ref[0] * np.exp(1j * (th_p + ref[1] + 2.0 * math.pi / 3.0))
    )
    u_meas = ub_p + ub_n.conjugate()

    ec = u_meas - up - un
    if mode_fll:
        v = up - un
        e = (ec * v.conjugate()).imag
        w_c = w0 + kp_fll * e + ki_fll * eps
        d_eps = e
    else:
        w_c = w_p
        d_eps = 0.0

    dup = 1j * w_c * up + 0.5 * k_sogi * w_c * ec
    dun = -1j * w_c * un + 0.5 * k_sogi * w_c * ec

    if mode_fll:
        # angles follow the filter states' instantaneous rotation
        ap2 = up.real * up.real + up.imag * up.imag
        an2 = un.real * un.real + un.imag * un.imag
        d_th_p = (dup * up.conjugate()).imag / ap2 if ap2 > 1e-18 else w_c
        d_th_n = -(dun * un.conjugate()).imag / an2 if an2 > 1e-18 else w_c
        d_xi_p = 0.0
        d_xi_n = 0.0
    else:
        d_th_p = w_p
        d_th_n = w_n
        d_xi_p = uq_p
        d_xi_n = uq_n

    out = np.empty(9)
    out[0] = dup.real
    out[1] = dup.imag
    out[2] = dun.real
    out[3] = dun.imag
    out[4] = d_th_p
    out[5] = d_xi_p
    out[6] = d_th_n
    out[7] = d_xi_n
    out[8] = d_eps
    return out


def _observe(y, t, code, zf, paths, ug, theta_g0, w0, ref, gains, mode_fll,
             adaptive):
    """Recorded quantities: (f+, f-, ud+, uq+, ud-, uq-, |U+|, |U-|)."""
    up = y[0] + 1j * y[1]
    un = y[2] + 1j * y[3]
    mp = up * np.exp(-1j * y[4])
    mn = un.conjugate() * np.exp(-1j * y[6])
    uq_p = mp.imag
    uq_n = -mn.imag
    if mode_fll:
        dy = _deriv(y, t, code, zf, paths, ug, theta_g0, w0, ref, gains,
                    mode_fll, adaptive)
        f_p = dy[4] / (2.0 * math.pi)
        f_n = dy[6] / (2.0 * math.pi)
    else:
        f_p = (w0 + gains[1] * uq_p + gains[2] * y[5]) / (2.0 * math.pi)
        f_n = (w0 - gains[1] * uq_n - gains[2] * y[7]) / (2.0 * math.pi)
    return f_p, f_n, mp.real, uq_p, mn.real, uq_n, abs(up), abs(un)


def _simulate(y, n_steps, dt, stride, code, zf, paths, ug, theta_g0, w0,
              t_on, t_clear, ref_pre, ref_on, gains, mode_fll, adaptive, rec):
    """Fixed-step RK4 over [0, n_steps*dt] with stride-decimated recording.

    rec rows: t, f+, f-, theta+, theta-, ud+, uq+, ud-, uq-, |U+|, |U-|.
    Returns (rows_written, overflow_step, y); overflow_step = -1 when none.
    """
    n_rec = 0
    for i in range(n_steps + 1):
        t = i * dt
        on = (t >= t_on) and (t < t_clear)
        code_t = code if on else FAULT_NONE
        ref = ref_on if on else ref_pre
        if i % stride == 0:
            f_p, f_n, ud_p, uq_p, ud_n, uq_n, um_p, um_n = _observe(
                y, t, code_t, zf, paths, ug, theta_g0, w0, ref, gains,
                mode_fll, adaptive)
            rec[n_rec, 0] = t
            rec[n_rec, 1] = f_p
            rec[n_rec, 2] = f_n
            rec[n_rec, 3] = y[4]
            rec[n_rec, 4] = y[6]
            rec[n_rec, 5] = ud_p
            rec[n_rec, 6] = uq_p
            rec[n_rec, 7] = ud_n
            rec[n_rec, 8] = uq_n
            rec[n_rec, 9] = um_p
            rec[n_rec, 10] = um_n
            n_rec += 1
        if i == n_steps:
            break

        # stage-wise fault schedule: each stage evaluates at its own time
        t2 = t + 0.5 * dt
        t3 = t + dt
        on2 = (t2 >= t_on) and (t2 < t_clear)
        on3 = (t3 >= t_on) and (t3 < t_clear)
        code_2 = code if on2 else FAULT_NONE
        ref_2 = ref_on if on2 else ref_pre
        code_3 = code if on3 else FAULT_NONE
        ref_3 = ref_on if on3 else ref_pre

        k1v = _deriv(y, t, code_t, zf, paths, ug, theta_g0, w0, ref, gains,
                     mode_fll, adaptive)
        k2v = _deriv(y + 0.5 * dt * k1v, t2, code_2, zf, paths, ug, theta_g0,
                     w0, ref_2, gains, mode_fll, adaptive)
        k3v = _deriv(y + 0.5 * dt * k2v, t2, code_2, zf, paths, ug, theta_g0,
                     w0, ref_2, gains, mode_fll, adaptive)
        k4v = _deriv(y + dt * k3v, t3, code_3, zf, paths, ug, theta_g0, w0,
                     ref_3, gains, mode_fll, adaptive)
        y = y + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)

        bad = False
        for m in range(9):
            if not np.isfinite(y[m]) or abs(y[m]) > 1e6:
                bad = True
        if bad:
            return n_rec, i + 1, y
    return n_rec, -1, y


if USING_NUMBA:
    _residual = njit(cache=True)(_residual)
    _jacobian = njit(cache=True)(_jacobian)
    _dq_eval = njit(cache=True)(_dq_eval)
    _seq_coeffs = njit(cache=True)(_seq_coeffs)
    _seq_coeffs_mixed = njit(cache=True)(_seq_coeffs_mixed)
    _newton_pair = njit(cache=True)(_newton_pair)
    _qualifies = njit(cache=True)(_qualifies)
    _deriv = njit(cache=True)(_deriv)
    _observe = njit(cache=True)(_observe)
    scan_roots = njit(cache=True)(_scan_roots_loop)
    simulate = njit(cache=True)(_simulate)
else:
    scan_roots = _scan_roots_vec
    simulate = _simulate

seq_coeffs = _seq_coeffs
seq_coeffs_mixed = _seq_coeffs_mixed
newton_pair = _newton_pair
deriv_eval = _deriv
residual_eval = _residual
jacobian_eval = _jacobian
dq_eval = _dq_eval

# always-available flavors for benchmarks and equivalence tests
scan_roots_loop = _scan_roots_loop
scan_roots_vec = _scan_roots_vec
