"""Backpropagation internalized in unit-interval arithmetic.

The raw gradient is the chain-rule derivative of the L1 output residual
with sign gradients at the output and 0/1 activation masks.  Raw
magnitudes are normalized per layer and per parameter kind by the max
norm, combined with the learning rate, and applied with truncated
addition/subtraction so parameters can never leave [0, 1].  A clipped
plain-gradient-descent mode is kept alongside for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import mv
from ._backend import batch_gradients
from ._backend import pure as _pure
from .dataset import Prng
from .network import ForwardCache, LayerParams, NetworkState, forward

UPDATE_MODES = ("lukasiewicz", "clipped_gd")
ETA_COMBINE = ("lukasiewicz_product", "real_product")


@dataclass
class TrainConfig:
    eta: float = 1.0
    eps: float = 0.0
    max_epochs: int = 250
    batch_size: int = 128
    update_mode: str = "lukasiewicz"
    eta_combine: str = "lukasiewicz_product"
    norm_eps: float = 1e-8
    seed: int = 0
    aggregator: str = "max"

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must be in [0, 1]")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must be in [0, 1]")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
        if self.eta_combine not in ETA_COMBINE:
            raise ValueError(f"eta_combine must be one of {ETA_COMBINE}")
        if self.norm_eps <= 0.0:
            raise ValueError("norm_eps must be > 0")


@dataclass
class GradientBundle:
    """Everything one backward pass produces, layer-indexed."""

    masks: list[list[int]]
    g: list[float]
    grad_w: list[np.ndarray]
    grad_b: list[np.ndarray]
    ghat_w: list[np.ndarray] = field(default_factory=list)
    ghat_b: list[np.ndarray] = field(default_factory=list)
    delta_plus_w: list[np.ndarray] = field(default_factory=list)
    delta_minus_w: list[np.ndarray] = field(default_factory=list)
    delta_plus_b: list[np.ndarray] = field(default_factory=list)
    delta_minus_b: list[np.ndarray] = field(default_factory=list)


def routed_target(outputs: Sequence[float], y: float) -> list[float]:
    """Target vector steering a scalar label through max aggregation.

    Only the first arg-max output carries the residual (lowest index wins
    ties); the rest get their own value, so their sign gradient is zero.
    """
    best = 0
    for i in range(1, len(outputs)):
        if outputs[i] > outputs[best]:
            best = i
    target = list(outputs)
    target[best] = y
    return target


def normalize(raw: Sequence[np.ndarray], norm_eps: float) -> list[np.ndarray]:
    """Max-norm scaling per tensor: |raw| / (max|raw| + norm_eps).

    Keeps every magnitude strictly below 1; an all-zero tensor stays zero.
    """
    if norm_eps <= 0.0:
        raise ValueError("norm_eps must be > 0")
    out = []
    for arr in raw:
        mag = np.abs(arr)
        out.append(mag / (mag.max() + norm_eps) if arr.size else mag)
    return out


def _combine_eta(eta: float, ghat: np.ndarray, how: str) -> np.ndarray:
    if how == "lukasiewicz_product":
        return np.maximum(0.0, eta + ghat - 1.0)
    return eta * ghat


def _split_deltas(raw: np.ndarray, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    plus = np.where(raw < 0.0, delta, 0.0)
    minus = np.where(raw > 0.0, delta, 0.0)
    return plus, minus


def backward(
    net: NetworkState, cache: ForwardCache, target: Sequence[float], cfg: TrainConfig
) -> GradientBundle:
    """Single-sample gradients from a cached forward pass.

    Output deltas are sign(a - y) masked to units strictly inside (0, 1);
    hidden deltas flow through transposed weights under the same masks.
    Loop order matches the batch kernels, so results are bit-identical.
    """
    if len(target) != net.output_width:
        raise ValueError(
            f"target length {len(target)} does not match output width {net.output_width}"
        )
    n_layers = len(net.layers)
    masks = [
        [1 if 0.0 < z < 1.0 else 0 for z in cache.z[t]] for t in range(n_layers)
    ]
    out = cache.a[-1]
    g = []
    for i in range(net.output_width):
        diff = out[i] - target[i]
        g.append(1.0 if diff > 0.0 else (-1.0 if diff < 0.0 else 0.0))

    grad_w = [np.zeros_like(l.weights) for l in net.layers]
    grad_b = [np.zeros_like(l.bias) for l in net.layers]
    delta = [g[i] if masks[-1][i] else 0.0 for i in range(net.output_width)]
    for t in range(n_layers - 1, -1, -1):
        prev_a = cache.a[t - 1] if t > 0 else cache.inputs
        gw = grad_w[t]
        gb = grad_b[t]
        for i in range(len(delta)):
            d = delta[i]
            if d != 0.0:
                for j in range(len(prev_a)):
                    gw[i, j] += d * prev_a[j]
                gb[i] += d
        if t > 0:
            w = net.layers[t].weights
            nxt = []
            for j in range(len(prev_a)):
                if masks[t - 1][j]:
                    acc = 0.0
                    for i in range(len(delta)):
                        acc += w[i, j] * delta[i]
                    nxt.append(acc)
                else:
                    nxt.append(0.0)
            delta = nxt

    bundle = GradientBundle(masks=masks, g=g, grad_w=grad_w, grad_b=grad_b)
    bundle.ghat_w = normalize(grad_w, cfg.norm_eps)
    bundle.ghat_b = normalize(grad_b, cfg.norm_eps)
    for t in range(n_layers):
        dw = _combine_eta(cfg.eta, bundle.ghat_w[t], cfg.eta_combine)
        db = _combine_eta(cfg.eta, bundle.ghat_b[t], cfg.eta_combine)
        pw, mw = _split_deltas(grad_w[t], dw)
        pb, mb = _split_deltas(grad_b[t], db)
        bundle.delta_plus_w.append(pw)
        bundle.delta_minus_w.append(mw)
        bundle.delta_plus_b.append(pb)
        bundle.delta_minus_b.append(mb)
    return bundle


def _updated_params(
    w: np.ndarray, raw: np.ndarray, ghat: np.ndarray, cfg: TrainConfig
) -> np.ndarray:
    if cfg.update_mode == "clipped_gd":
        return np.minimum(1.0, np.maximum(0.0, w - cfg.eta * raw))
    delta = _combine_eta(cfg.eta, ghat, cfg.eta_combine)
    lowered = np.maximum(0.0, w - delta)
    raised = np.minimum(1.0, w + delta)
    return np.where(raw > 0.0, lowered, np.where(raw < 0.0, raised, w))


def apply_update(net: NetworkState, bundle: GradientBundle, cfg: TrainConfig) -> NetworkState:
    """One parameter update; zero raw gradient leaves a parameter alone."""
    layers = []
    for t, layer in enumerate(net.layers):
        neww = _updated_params(layer.weights, bundle.grad_w[t], bundle.ghat_w[t], cfg)
        newb = _updated_params(layer.bias, bundle.grad_b[t], bundle.ghat_b[t], cfg)
        layers.append(LayerParams(neww, newb))
    return NetworkState(tuple(layers), net.input_width)


def _step_arrays(
    net: NetworkState, bx: np.ndarray, by: np.ndarray, cfg: TrainConfig
) -> tuple[NetworkState, np.ndarray, np.ndarray]:
    """One batch step on arrays; returns (new net, losses, yhats)."""
    ws = [l.weights for l in net.layers]
    bs = [l.bias for l in net.layers]
    gw_sums, gb_sums, losses, yhats = batch_gradients(ws, bs, bx, by)
    nb = float(bx.shape[0])
    raw_w = [g / nb for g in gw_sums]
    raw_b = [g / nb for g in gb_sums]
    ghat_w = normalize(raw_w, cfg.norm_eps)
    ghat_b = normalize(raw_b, cfg.norm_eps)
    layers = []
    for t, layer in enumerate(net.layers):
        neww = _updated_params(layer.weights, raw_w[t], ghat_w[t], cfg)
        newb = _updated_params(layer.bias, raw_b[t], ghat_b[t], cfg)
        layers.append(LayerParams(neww, newb))
    return NetworkState(tuple(layers), net.input_width), losses, yhats


def train_step(
    net: NetworkState,
    batch: Sequence[tuple[Sequence[float], Sequence[float]]],
    cfg: TrainConfig,
) -> tuple[NetworkState, float]:
    """Average raw gradients over the batch, then apply one update.

    The mean loss is the average distance between the aggregated target
    and aggregated output of each sample, measured before the update.
    """
    if not batch:
        raise ValueError("empty batch")
    bx = np.array([list(map(float, inp)) for inp, _ in batch], dtype=np.float64)
    by = np.array([list(map(float, tgt)) for _, tgt in batch], dtype=np.float64)
    new_net, losses, _ = _step_arrays(net, bx, by, cfg)
    return new_net, float(np.sum(losses)) / len(batch)


EpochHook = Callable[[int, NetworkState, NetworkState, float, float, bool], None]


def train(
    net: NetworkState,
    x: np.ndarray,
    y: np.ndarray,
    cfg: TrainConfig,
    epoch_hook: EpochHook | None = None,
) -> tuple[NetworkState, list[tuple[int, float, float]]]:
    """Epoch loop: seeded shuffle, batched steps, mean-distance stopping.

    Stops early once the epoch's mean distance drops to eps (within the
    usual tolerance), else runs max_epochs.  History rows are
    (epoch, mean_loss, train_accuracy); the optional hook sees each epoch
    for trace recording.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty dataset")
    if y.ndim != 2 or y.shape[0] != n:
        raise ValueError("targets must be (n, output_width)")
    prng = Prng(cfg.seed)
    order = list(range(n))
    history: list[tuple[int, float, float]] = []
    for epoch in range(1, cfg.max_epochs + 1):
        prng.shuffle(order)
        pre_net = net
        total_loss = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            bx = x[idx]
            by = y[idx]
            net, losses, yhats = _step_arrays(net, bx, by, cfg)
            total_loss += float(np.sum(losses))
            preds = yhats >= 0.5
            labels = by.max(axis=1) >= 0.5
            correct += int(np.sum(preds == labels))
        mean_loss = total_loss / n
        accuracy = correct / n
        stopped = mean_loss <= cfg.eps + mv.TOL
        history.append((epoch, mean_loss, accuracy))
        if epoch_hook is not None:
            epoch_hook(epoch, pre_net, net, mean_loss, accuracy, stopped)
        if stopped:
            break
    return net, history


def finite_diff_check(
    net: NetworkState,
    inputs: Sequence[float],
    target: Sequence[float],
    h: float = 1e-4,
    zero_tol: float = 1e-7,
    cfg: TrainConfig | None = None,
) -> dict:
    """Central finite differences of the L1 output residual vs backward.

    Only mask-active coordinates are compared, and the whole sample is
    skipped (near_kink) if any pre-activation sits within 10h of the
    ReLU1 corners or any output residual within 10h of its sign flip,
    since differencing across a kink says nothing about the gradient.
    """
    cfg = cfg or TrainConfig()
    cache = forward(net, inputs, cfg.aggregator)
    margin = 10.0 * h
    near_kink = any(
        min(abs(z), abs(z - 1.0)) < margin for layer in cache.z for z in layer
    ) or any(abs(a - t) < margin for a, t in zip(cache.output, target))
    report = {
        "near_kink": near_kink,
        "checked": 0,
        "sign_agree": 0,
        "max_abs_dev": 0.0,
    }
    if near_kink:
        return report

    bundle = _reference_backward(net, inputs, target, cfg)

    ws = [l.weights.tolist() for l in net.layers]
    bs = [l.bias.tolist() for l in net.layers]

    def loss_now():
        _, acts = _pure._forward_sample(ws, bs, list(map(float, inputs)))
        return sum(abs(a - t) for a, t in zip(acts[-1], target))

    def probe(row: list, idx: int, analytic: float):
        orig = row[idx]
        row[idx] = orig + h
        up = loss_now()
        row[idx] = orig - h
        down = loss_now()
        row[idx] = orig
        fd = (up - down) / (2.0 * h)
        report["checked"] += 1
        if _sign(analytic, zero_tol) == _sign(fd, zero_tol):
            report["sign_agree"] += 1
        report["max_abs_dev"] = max(report["max_abs_dev"], abs(analytic - fd))

    for t, layer in enumerate(net.layers):
        for i in range(layer.width):
            if not bundle.masks[t][i]:
                continue
            for j in range(layer.fan_in):
                probe(ws[t][i], j, float(bundle.grad_w[t][i, j]))
            probe(bs[t], i, float(bundle.grad_b[t][i]))
    report["agreement"] = (
        report["sign_agree"] / report["checked"] if report["checked"] else 1.0
    )
    return report


def _sign(x: float, tol: float) -> int:
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


def _reference_backward(
    net: NetworkState, inputs: Sequence[float], target: Sequence[float], cfg: TrainConfig
) -> GradientBundle:
    cache = forward(net, inputs, cfg.aggregator)
    return backward(net, cache, target, cfg)
