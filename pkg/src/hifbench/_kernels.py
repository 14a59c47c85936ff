"""Fixed-step RK4 integration kernels for the arc and zero-sequence circuits.

These per-sample loops dominate the runtime of every simulation, so they are
compiled with numba ``@njit`` when available. Setting the environment
variable ``HIFBENCH_PURE_NUMPY=1`` (read once at import) selects the plain
Python/NumPy implementations of the *same* functions; both paths execute the
identical arithmetic and produce identical results.

All kernels integrate with classical 4th-order Runge-Kutta at an internal
step ``h = 1/(oversample * fs)`` and decimate to the output rate ``fs``.
Time-varying inputs are supplied pre-evaluated on the half-step grid
(spacing ``h/2``), which is exactly what the RK4 stages consume, so no
interpolation happens inside the loop.
"""

import os

import numpy as np

ENV_FLAG = "HIFBENCH_PURE_NUMPY"


def _numba_enabled() -> bool:
    if os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USING_NUMBA = _numba_enabled()


def _jit(fn):
    if USING_NUMBA:
        from numba import njit

        return njit(cache=True, nogil=True)(fn)
    return fn


@_jit
def _exp_clamped(x, lo, hi):
    """exp(x) with x clamped to [lo, hi]; keeps RK4 stage evaluations of the
    arc resistance inside the physical clamp band and free of overflow."""
    if x > hi:
        x = hi
    elif x < lo:
        x = lo
    return np.exp(x)


@_jit
def arc_circuit_rk4(u_half, n_out, oversample, h, r_series, p_loss, tau,
                    ln_r0, ln_floor, ln_ceil):
    """Arc in series with a linear resistor, driven by a stiff voltage source.

    State is x = ln(R_arc); dx/dt = (P_loss - u_arc * i) / tau with the
    algebraic circuit relation i = u_src / (r_series + R_arc). ``u_half``
    holds the source voltage on the half-step grid. Returns (i, u_arc,
    r_arc) sampled at the output rate.
    """
    i_out = np.empty(n_out)
    u_arc_out = np.empty(n_out)
    r_out = np.empty(n_out)
    inv_tau = 1.0 / tau
    x = ln_r0
    r = _exp_clamped(x, ln_floor, ln_ceil)
    i = u_half[0] / (r_series + r)
    i_out[0] = i
    u_arc_out[0] = i * r
    r_out[0] = r
    m = 0
    for idx in range(1, n_out):
        for _ in range(oversample):
            u0 = u_half[m]
            um = u_half[m + 1]
            u1 = u_half[m + 2]

            r1 = _exp_clamped(x, ln_floor, ln_ceil)
            i1 = u0 / (r_series + r1)
            k1 = (p_loss - i1 * i1 * r1) * inv_tau

            x2 = x + 0.5 * h * k1
            r2 = _exp_clamped(x2, ln_floor, ln_ceil)
            i2 = um / (r_series + r2)
            k2 = (p_loss - i2 * i2 * r2) * inv_tau

            x3 = x + 0.5 * h * k2
            r3 = _exp_clamped(x3, ln_floor, ln_ceil)
            i3 = um / (r_series + r3)
            k3 = (p_loss - i3 * i3 * r3) * inv_tau

            x4 = x + h * k3
            r4 = _exp_clamped(x4, ln_floor, ln_ceil)
            i4 = u1 / (r_series + r4)
            k4 = (p_loss - i4 * i4 * r4) * inv_tau

            x += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            if x > ln_ceil:
                x = ln_ceil
            elif x < ln_floor:
                x = ln_floor
            m += 2
        r = _exp_clamped(x, ln_floor, ln_ceil)
        i = u_half[m] / (r_series + r)
        i_out[idx] = i
        u_arc_out[idx] = i * r
        r_out[idx] = r
    return i_out, u_arc_out, r_out


@_jit
def net_injected_rk4(if_half, n_out, oversample, h, coil_l, c_sum, g_sum,
                     il0, ub0):
    """Zero-sequence tank driven by an injected fault current.

    States are the coil current i_0L and the bus voltage u_0b:

        d(i_0L)/dt = u_0b / L
        d(u_0b)/dt = (i_0f - i_0L - u_0b * g_sum) / C_sum

    ``if_half`` holds i_0f on the half-step grid. Returns (i_0L, u_0b) at
    the output rate.
    """
    il_out = np.empty(n_out)
    ub_out = np.empty(n_out)
    inv_l = 1.0 / coil_l
    inv_c = 1.0 / c_sum
    il = il0
    ub = ub0
    il_out[0] = il
    ub_out[0] = ub
    m = 0
    for idx in range(1, n_out):
        for _ in range(oversample):
            f0 = if_half[m]
            fm = if_half[m + 1]
            f1 = if_half[m + 2]

            a1 = ub * inv_l
            b1 = (f0 - il - ub * g_sum) * inv_c

            il2 = il + 0.5 * h * a1
            ub2 = ub + 0.5 * h * b1
            a2 = ub2 * inv_l
            b2 = (fm - il2 - ub2 * g_sum) * inv_c

            il3 = il + 0.5 * h * a2
            ub3 = ub + 0.5 * h * b2
            a3 = ub3 * inv_l
            b3 = (fm - il3 - ub3 * g_sum) * inv_c

            il4 = il + h * a3
            ub4 = ub + h * b3
            a4 = ub4 * inv_l
            b4 = (f1 - il4 - ub4 * g_sum) * inv_c

            il += h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
            ub += h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
            m += 2
        il_out[idx] = il
        ub_out[idx] = ub
    return il_out, ub_out


@_jit
def net_coupled_rk4(uf_half, n_out, oversample, h, coil_l, c_sum, g_sum,
                    r_series, p_loss, tau, ln_r0, ln_floor, ln_ceil):
    """Zero-sequence tank coupled to the virtual source through the arc.

    Adds x = ln(R_arc) to the injected-mode states; the fault current is the
    algebraic branch current i_0f = (u_f - u_0b) / (r_series + R_arc) and
    feeds both the tank and the arc energy balance. Returns (i_0f, i_0L,
    u_0b, r_arc) at the output rate.
    """
    if_out = np.empty(n_out)
    il_out = np.empty(n_out)
    ub_out = np.empty(n_out)
    r_out = np.empty(n_out)
    inv_l = 1.0 / coil_l
    inv_c = 1.0 / c_sum
    inv_tau = 1.0 / tau
    il = 0.0
    ub = 0.0
    x = ln_r0
    r = _exp_clamped(x, ln_floor, ln_ceil)
    i0f = (uf_half[0] - ub) / (r_series + r)
    if_out[0] = i0f
    il_out[0] = il
    ub_out[0] = ub
    r_out[0] = r
    m = 0
    for idx in range(1, n_out):
        for _ in range(oversample):
            u0 = uf_half[m]
            um = uf_half[m + 1]
            u1 = uf_half[m + 2]

            r1 = _exp_clamped(x, ln_floor, ln_ceil)
            if1 = (u0 - ub) / (r_series + r1)
            a1 = ub * inv_l
            b1 = (if1 - il - ub * g_sum) * inv_c
            c1 = (p_loss - if1 * if1 * r1) * inv_tau

            il2 = il + 0.5 * h * a1
            ub2 = ub + 0.5 * h * b1
            x2 = x + 0.5 * h * c1
            r2 = _exp_clamped(x2, ln_floor, ln_ceil)
            if2 = (um - ub2) / (r_series + r2)
            a2 = ub2 * inv_l
            b2 = (if2 - il2 - ub2 * g_sum) * inv_c
            c2 = (p_loss - if2 * if2 * r2) * inv_tau

            il3 = il + 0.5 * h * a2
            ub3 = ub + 0.5 * h * b2
            x3 = x + 0.5 * h * c2
            r3 = _exp_clamped(x3, ln_floor, ln_ceil)
            if3 = (um - ub3) / (r_series + r3)
            a3 = ub3 * inv_l
            b3 = (if3 - il3 - ub3 * g_sum) * inv_c
            c3 = (p_loss - if3 * if3 * r3) * inv_tau

            il4 = il + h * a3
            ub4 = ub + h * b3
            x4 = x + h * c3
            r4 = _exp_clamped(x4, ln_floor, ln_ceil)
            if4 = (u1 - ub4) / (r_series + r4)
            a4 = ub4 * inv_l
            b4 = (if4 - il4 - ub4 * g_sum) * inv_c
            c4 = (p_loss - if4 * if4 * r4) * inv_tau

            il += h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
            ub += h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
            x += h * (c1 + 2.0 * c2 + 2.0 * c3 + c4) / 6.0
            if x > ln_ceil:
                x = ln_ceil
            elif x < ln_floor:
                x = ln_floor
            m += 2
        r = _exp_clamped(x, ln_floor, ln_ceil)
        i0f = (uf_half[m] - ub) / (r_series + r)
        if_out[idx] = i0f
        il_out[idx] = il
        ub_out[idx] = ub
        r_out[idx] = r
    return if_out, il_out, ub_out, r_out
