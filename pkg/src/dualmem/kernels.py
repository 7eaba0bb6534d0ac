"""Hot per-sample loops: full-sequence layer forward and backward passes.

One kernel pair serves every layer variant. Unused operands are passed as
1-element dummies and gated by the ``use_*`` flags so numba sees stable
signatures; gated branches are skipped entirely, which keeps a memoryless
layer bit-identical to a plain one. All arrays are float64 and C-contiguous.

Per step k (memory variant, dilation d_s):
    prex[k] = w_comp . s_in[k] + bias ;  x[k] = f(prex[k])
    m[k]    = A_bar m[k-1] + B_bar x[k]   if k % d_s == 0, else m[k-1]
    p[k]    = decay * u[k-1] + w_ff s_in[k] (+ w_rec s[k-1]) + w_mem m[k]
    s[k]    = step(p[k] - threshold)      (or sigma(.) in smooth mode)
    u[k]    = reset(p[k], s[k])
Delayed variants shift each presynaptic channel j by delays[j] steps through
a ring buffer primed with zeros.
"""

from __future__ import annotations

import numpy as np

from .backend import jit
from .surrogate import SPIKE_SMOOTH, smooth_spike, spike_grad

RESET_SOFT = 0
RESET_HARD = 1
RESET_NONE = 2

FX_RELU = 0
FX_IDENTITY = 1
FX_TANH = 2

_RESET_CODES = {"soft-subtract": RESET_SOFT, "hard-zero": RESET_HARD, "none": RESET_NONE}
_FX_CODES = {"relu": FX_RELU, "identity": FX_IDENTITY, "tanh": FX_TANH}


def reset_code(name: str) -> int:
    return _RESET_CODES[name]


def fx_code(name: str) -> int:
    return _FX_CODES[name]


@jit
def _fx(val, code):
    if code == FX_RELU:
        return val if val > 0.0 else 0.0
    elif code == FX_IDENTITY:
        return val
    else:
        return np.tanh(val)


@jit
def _fx_grad(val, code):
    if code == FX_RELU:
        return 1.0 if val > 0.0 else 0.0
    elif code == FX_IDENTITY:
        return 1.0
    else:
        t = np.tanh(val)
        return 1.0 - t * t


@jit
def layer_forward(
    inputs,  # (T, M) presynaptic activity; binary spikes or analog drive
    w_ff,  # (N, M)
    w_rec,  # (N, N) or (1, 1) dummy
    use_rec,
    w_mem,  # (N, d) or (1, 1) dummy
    w_comp,  # (M,) or (1,) dummy
    bias,
    a_bar,  # (d, d) or (1, 1) dummy
    b_bar,  # (d,) or (1,) dummy
    use_mem,
    delays,  # (M,) int64 or (1,) dummy
    use_delay,
    decay,
    threshold,
    reset,
    fx,
    dilation,
    spike_mode,
    surr_kind,
    surr_param,
):
    T, M = inputs.shape
    N = w_ff.shape[0]
    d = a_bar.shape[0]

    s_hist = np.zeros((T, N))
    u_hist = np.zeros((T, N))
    p_hist = np.zeros((T, N))
    m_hist = np.zeros((T, d))
    x_hist = np.zeros(T)
    prex_hist = np.zeros(T)
    eff_hist = np.zeros((T, M))

    ring_depth = 1
    if use_delay:
        ring_depth = int(delays.max()) + 1
    ring = np.zeros((ring_depth, M))

    u = np.zeros(N)
    m = np.zeros(d)
    s_prev = np.zeros(N)

    for k in range(T):
        if use_delay:
            ring[k % ring_depth, :] = inputs[k]
            for j in range(M):
                kk = k - delays[j]
                if kk >= 0:
                    eff_hist[k, j] = ring[kk % ring_depth, j]
        else:
            eff_hist[k, :] = inputs[k]
        sp = eff_hist[k]

        c = np.dot(w_ff, sp)
        if use_rec:
            c = c + np.dot(w_rec, s_prev)
        if use_mem:
            prex = np.dot(w_comp, sp) + bias
            x = _fx(prex, fx)
            if k % dilation == 0:
                m = np.dot(a_bar, m) + b_bar * x
            c = c + np.dot(w_mem, m)
            prex_hist[k] = prex
            x_hist[k] = x
            m_hist[k] = m
        p = decay * u + c

        if spike_mode == SPIKE_SMOOTH:
            s = smooth_spike(p - threshold, surr_kind, surr_param)
        else:
            s = (p >= threshold).astype(np.float64)

        if reset == RESET_SOFT:
            u = p - threshold * s
        elif reset == RESET_HARD:
            u = p * (1.0 - s)
        else:
            u = p

        p_hist[k] = p
        s_hist[k] = s
        u_hist[k] = u
        s_prev = s

    return s_hist, u_hist, p_hist, m_hist, x_hist, prex_hist, eff_hist


@jit
def layer_backward(
    eff_inputs,  # (T, M) delay-shifted presynaptic activity from the forward pass
    s_hist,
    p_hist,
    m_hist,
    prex_hist,
    gs_ext,  # (T, N) dL/ds[k] arriving from downstream layers
    gu_ext,  # (T, N) dL/du[k] applied directly (readout loss)
    w_ff,
    w_rec,
    use_rec,
    w_mem,
    w_comp,
    a_bar,
    b_bar,
    use_mem,
    decay,
    threshold,
    reset,
    fx,
    dilation,
    surr_kind,
    surr_param,
):
    T, M = eff_inputs.shape
    N = w_ff.shape[0]
    d = a_bar.shape[0]

    w_ff_t = np.ascontiguousarray(w_ff.T)
    w_rec_t = np.ascontiguousarray(w_rec.T)
    w_mem_t = np.ascontiguousarray(w_mem.T)
    a_bar_t = np.ascontiguousarray(a_bar.T)

    g_wf = np.zeros_like(w_ff)
    g_wr = np.zeros_like(w_rec)
    g_wm = np.zeros_like(w_mem)
    g_wx = np.zeros_like(w_comp)
    g_b = 0.0
    gs_in = np.zeros((T, M))
    gu_hist = np.zeros((T, N))
    gp_hist = np.zeros((T, N))

    gp_next = np.zeros(N)
    gs_rec = np.zeros(N)
    gm_carry = np.zeros(d)

    for k in range(T - 1, -1, -1):
        gu = gu_ext[k] + decay * gp_next
        gs = gs_ext[k] + gs_rec
        sg = spike_grad(p_hist[k] - threshold, surr_kind, surr_param)
        if reset == RESET_SOFT:
            gs = gs - threshold * gu
            gp = gu + sg * gs
        elif reset == RESET_HARD:
            gs = gs - p_hist[k] * gu
            gp = gu * (1.0 - s_hist[k]) + sg * gs
        else:
            gp = gu + sg * gs
        gu_hist[k] = gu
        gp_hist[k] = gp

        sp = eff_inputs[k]
        g_wf += gp.reshape(N, 1) * sp.reshape(1, M)
        gs_in[k] = np.dot(w_ff_t, gp)
        if use_rec:
            if k > 0:
                g_wr += gp.reshape(N, 1) * s_hist[k - 1].reshape(1, N)
            gs_rec = np.dot(w_rec_t, gp)

        if use_mem:
            gm = np.dot(w_mem_t, gp) + gm_carry
            g_wm += gp.reshape(N, 1) * m_hist[k].reshape(1, d)
            if k % dilation == 0:
                gx = np.dot(b_bar, gm)
                gm_carry = np.dot(a_bar_t, gm)
            else:
                gx = 0.0
                gm_carry = gm
            gprex = _fx_grad(prex_hist[k], fx) * gx
            g_wx += gprex * sp
            g_b += gprex
            gs_in[k] += gprex * w_comp

        gp_next = gp

    return g_wf, g_wr, g_wm, g_wx, g_b, gs_in, gu_hist, gp_hist


def unshift_input_grad(gs_eff: np.ndarray, delays: np.ndarray) -> np.ndarray:
    """Map gradients on delay-shifted inputs back to the original stream."""
    T, M = gs_eff.shape
    out = np.zeros_like(gs_eff)
    for j in range(M):
        dj = int(delays[j])
        if dj == 0:
            out[:, j] = gs_eff[:, j]
        elif dj < T:
            out[: T - dj, j] = gs_eff[dj:, j]
    return out
