"""Reverse-mode gradients through the unrolled network.

Surrogate derivatives stand in for the Heaviside's during backprop; the slow
memory recursion is linear, so its adjoints are exact and no surrogate enters
that chain. The frozen transition pair (A_bar, B_bar) receives no gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError
from .layers import kernel_args
from .network import ForwardTrace, Network, logits_for_mode, network_forward
from .surrogate import SurrogateSpec


def softmax_cross_entropy(logits: np.ndarray, label: int):
    """Stable CE loss and its gradient (softmax minus one-hot)."""
    z = logits - logits.max()
    e = np.exp(z)
    total = e.sum()
    loss = float(np.log(total) - z[label])
    grad = e / total
    grad[label] -= 1.0
    return loss, grad


@dataclass
class GradientTape:
    """Everything the reverse pass produced for one sample.

    ``grads`` maps parameter names (as in ``named_parameters``) to arrays.
    ``gu`` holds the total adjoint of each layer's post-reset membrane per
    step, ``gp`` the adjoint of the pre-reset membrane (the integrated
    potential that drives the spike), and ``gs_in`` the adjoint of each
    layer's (undelayed) input stream.
    """

    loss: float
    logits: np.ndarray
    grads: dict[str, np.ndarray]
    gu: list[np.ndarray]
    gp: list[np.ndarray]
    gs_in: list[np.ndarray]
    trace: ForwardTrace


def backward(
    net: Network,
    trace: ForwardTrace,
    label: int,
    loss_mode: str | None = None,
    surrogate: SurrogateSpec | None = None,
) -> GradientTape:
    """BPTT through a recorded forward trace."""
    if not trace.layers:
        raise DimensionError("trace has no recorded layers")
    loss_mode = loss_mode if loss_mode is not None else net.cfg.loss_mode
    surrogate = surrogate if surrogate is not None else trace.surrogate
    T = trace.inputs.shape[0]
    logits = logits_for_mode(trace, loss_mode)
    loss, glogits = softmax_cross_entropy(logits, label)

    n_layers = len(net.layers)
    grads: dict[str, np.ndarray] = {}
    gu_hists: list[np.ndarray | None] = [None] * n_layers
    gp_hists: list[np.ndarray | None] = [None] * n_layers
    gs_hists: list[np.ndarray | None] = [None] * n_layers

    # Loss seed on the readout membrane.
    c = net.cfg.outputs
    gu_ext = np.zeros((T, c))
    if loss_mode == "mean":
        gu_ext[:] = glogits / T
    else:
        gu_ext[T - 1] = glogits
    gs_ext = np.zeros((T, c))

    for i in range(n_layers - 1, -1, -1):
        lp = net.layers[i]
        rec = trace.layers[i]
        ka = kernel_args(lp)
        g_wf, g_wr, g_wm, g_wx, g_b, gs_in, gu_hist, gp_hist = kernels.layer_backward(
            rec.eff,
            rec.s,
            rec.p,
            rec.m,
            rec.prex,
            gs_ext,
            gu_ext,
            ka["w_ff"],
            ka["w_rec"],
            ka["use_rec"],
            ka["w_mem"],
            ka["w_comp"],
            ka["a_bar"],
            ka["b_bar"],
            ka["use_mem"],
            ka["decay"],
            ka["threshold"],
            ka["reset"],
            ka["fx"],
            ka["dilation"],
            surrogate.code,
            surrogate.param,
        )
        prefix = f"layers.{i}."
        grads[prefix + "w_ff"] = g_wf
        if lp.w_mem is not None:
            grads[prefix + "w_mem"] = g_wm
            grads[prefix + "w_comp"] = g_wx
            grads[prefix + "bias"] = np.array([g_b])
        if lp.w_rec is not None:
            grads[prefix + "w_rec"] = g_wr
        gu_hists[i] = gu_hist
        gp_hists[i] = gp_hist
        if lp.delays is not None:
            gs_in = kernels.unshift_input_grad(gs_in, lp.delays)
        gs_hists[i] = gs_in
        gu_ext = np.zeros_like(gs_in)
        gs_ext = gs_in

    return GradientTape(
        loss=loss,
        logits=logits,
        grads=grads,
        gu=gu_hists,
        gp=gp_hists,
        gs_in=gs_hists,
        trace=trace,
    )


def gradient_profile(
    net: Network,
    inputs: np.ndarray,
    label: int,
    surrogate: SurrogateSpec = SurrogateSpec(),
    layer_index: int = 0,
    loss_mode: str = "last",
    smooth: bool = False,
) -> np.ndarray:
    """Per-step gradient magnitude at one layer under terminal supervision.

    Returns the norm of the loss gradient with respect to the chosen layer's
    integrated (pre-reset) membrane at each step, normalized by its maximum so
    profiles from different models are comparable.
    """
    _, trace = network_forward(net, inputs, smooth=smooth, surrogate=surrogate)
    tape = backward(net, trace, label, loss_mode=loss_mode, surrogate=surrogate)
    norms = np.linalg.norm(tape.gp[layer_index], axis=1)
    peak = norms.max()
    return norms / peak if peak > 0 else norms


@dataclass(frozen=True)
class JointTransition:
    """Linearized one-step map of the joint (membrane, memory) state."""

    F: np.ndarray  # (N + d, N + d), block upper-triangular


def build_joint_transition(decay: float, w_mem: np.ndarray, a_bar: np.ndarray) -> JointTransition:
    n, d = w_mem.shape
    if a_bar.shape != (d, d):
        raise DimensionError(f"a_bar shape {a_bar.shape} does not match w_mem {w_mem.shape}")
    F = np.zeros((n + d, n + d))
    F[:n, :n] = decay * np.eye(n)
    F[:n, n:] = w_mem @ a_bar
    F[n:, n:] = a_bar
    return JointTransition(F=F)


def sort_spectrum(values: np.ndarray) -> np.ndarray:
    """Sort complex eigenvalues by modulus, then argument."""
    values = np.asarray(values, dtype=np.complex128)
    order = np.lexsort((np.angle(values), np.abs(values)))
    return values[order]


def joint_spectrum(decay: float, w_mem: np.ndarray, a_bar: np.ndarray) -> np.ndarray:
    """Eigenvalues of the joint transition, sorted by modulus then argument.

    Block upper-triangularity makes this the decay constant with multiplicity
    N together with the spectrum of the memory transition; the off-diagonal
    coupling block never moves an eigenvalue.
    """
    if w_mem.shape[1] == 0:
        return sort_spectrum(np.full(w_mem.shape[0], decay, dtype=np.complex128))
    F = build_joint_transition(decay, w_mem, a_bar).F
    return sort_spectrum(np.linalg.eigvals(F))
