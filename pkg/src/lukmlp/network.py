"""Multilayer perceptron state and the unit-interval forward pass.

Parameters (weights and biases) live in [0, 1], activations are ReLU1,
so every intermediate value stays a Lukasiewicz truth value and the whole
network is expressible as a formula (see lukmlp.formula.extract).

The accumulation order inside a layer is pinned: weight terms left to
right, bias added last.  The compiled and pure training backends, the
formula evaluator, and this reference implementation all follow the same
order, which makes their outputs bit-identical, not merely close.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import mv
from .dataset import Prng

AGGREGATORS = ("max", "min", "truncated_sum")


class DimensionError(ValueError):
    """Shape mismatch between layers or between a layer and its input."""


@dataclass(frozen=True)
class LayerParams:
    """One dense layer: weights (neurons x inputs) and bias (neurons,)."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        b = np.ascontiguousarray(np.asarray(self.bias, dtype=np.float64))
        if w.ndim != 2 or b.ndim != 1:
            raise DimensionError("weights must be 2-d and bias 1-d")
        if w.shape[0] != b.shape[0]:
            raise DimensionError(
                f"bias length {b.shape[0]} does not match {w.shape[0]} neurons"
            )
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite value")
        if w.size and (w.min() < 0.0 or w.max() > 1.0):
            raise ValueError("weight outside [0, 1]")
        if b.size and (b.min() < 0.0 or b.max() > 1.0):
            raise ValueError("bias outside [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def width(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class NetworkState:
    """Immutable stack of layers; input_width is the first fan-in."""

    layers: tuple[LayerParams, ...]
    input_width: int

    def __post_init__(self):
        if not self.layers:
            raise DimensionError("network needs at least one layer")
        prev = self.input_width
        for t, layer in enumerate(self.layers):
            if layer.fan_in != prev:
                raise DimensionError(
                    f"layer {t}: fan-in {layer.fan_in} does not chain "
                    f"from previous width {prev}"
                )
            prev = layer.width

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.input_width,) + tuple(l.width for l in self.layers)

    @property
    def output_width(self) -> int:
        return self.layers[-1].width


@dataclass
class ForwardCache:
    """Per-layer pre-activations z (unclamped reals) and activations a."""

    inputs: list[float]
    z: list[list[float]]
    a: list[list[float]]
    output: list[float]
    yhat: float


def forward_layer(params: LayerParams, inputs: Sequence[float]) -> tuple[list[float], list[float]]:
    """One layer: z_i = sum_j w_ij * x_j + b_i, a_i = relu1(z_i).

    With parameters and inputs in [0, 1] this equals the truncated-sum
    fold b (+) w_i0*x_0 (+) ... because the partial sums are monotone.
    """
    if len(inputs) != params.fan_in:
        raise DimensionError(
            f"layer expects input width {params.fan_in}, got {len(inputs)}"
        )
    w = params.weights
    b = params.bias
    zs: list[float] = []
    acts: list[float] = []
    for i in range(params.width):
        acc = 0.0
        row = w[i]
        for j in range(params.fan_in):
            acc += row[j] * inputs[j]
        z = acc + b[i]
        zs.append(z)
        acts.append(mv.relu1(z))
    return zs, acts


def aggregate(outputs: Sequence[float], kind: str = "max") -> float:
    """Collapse the output vector to a single truth value."""
    if len(outputs) == 0:
        raise ValueError("aggregate of empty output vector")
    if kind == "max":
        best = outputs[0]
        for v in outputs[1:]:
            if v > best:
                best = v
        return best
    if kind == "min":
        worst = outputs[0]
        for v in outputs[1:]:
            if v < worst:
                worst = v
        return worst
    if kind == "truncated_sum":
        return mv.fold_oplus(outputs)
    raise ValueError(f"unknown aggregator {kind!r}")


def forward(net: NetworkState, inputs: Sequence[float], aggregator: str = "max") -> ForwardCache:
    """Full forward pass, caching z and a per layer."""
    if len(inputs) != net.input_width:
        raise DimensionError(
            f"network expects input width {net.input_width}, got {len(inputs)}"
        )
    zs: list[list[float]] = []
    acts: list[list[float]] = []
    start = [float(v) for v in inputs]
    current = start
    for layer in net.layers:
        z, a = forward_layer(layer, current)
        zs.append(z)
        acts.append(a)
        current = a
    return ForwardCache(
        inputs=start, z=zs, a=acts, output=current, yhat=aggregate(current, aggregator)
    )


def end_condition(
    y: float, outputs: Sequence[float], eps: float, aggregator: str = "max"
) -> tuple[float, bool]:
    """Stopping predicate: does the aggregated output sit within eps of y?

    Returns the truth value dist(y, agg) -> eps and whether it counts as
    true (>= 1 - TOL, equivalently dist <= eps + TOL).
    """
    yhat = aggregate(outputs, aggregator)
    truth = mv.implies(mv.dist(y, yhat), eps)
    return truth, truth >= 1.0 - mv.TOL


# --- serialization and digests -------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fmt(x: float) -> str:
    return "%.17g" % x


def serialize(net: NetworkState) -> str:
    """Canonical text form: widths line, then one parameter per line.

    Layer-major, weights row-major then bias, 17 significant digits
    (lossless for float64).  This exact byte stream feeds the digests
    used in training traces.
    """
    lines = [" ".join(str(w) for w in net.widths)]
    for layer in net.layers:
        for i in range(layer.width):
            for j in range(layer.fan_in):
                lines.append(_fmt(layer.weights[i, j]))
        for i in range(layer.width):
            lines.append(_fmt(layer.bias[i]))
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> NetworkState:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ValueError("empty network document")
    try:
        widths = [int(tok) for tok in lines[0].split()]
    except ValueError as e:
        raise ValueError(f"bad widths line: {lines[0]!r}") from e
    if len(widths) < 2:
        raise ValueError("widths line needs input width and one layer")
    values = []
    for k, ln in enumerate(lines[1:], start=2):
        try:
            values.append(float(ln))
        except ValueError as e:
            raise ValueError(f"line {k}: not a number: {ln!r}") from e
    layers = []
    pos = 0
    for prev, cur in zip(widths, widths[1:]):
        need = cur * prev + cur
        if pos + need > len(values):
            raise ValueError("network document truncated")
        w = np.array(values[pos : pos + cur * prev], dtype=np.float64).reshape(cur, prev)
        b = np.array(values[pos + cur * prev : pos + need], dtype=np.float64)
        layers.append(LayerParams(w, b))
        pos += need
    if pos != len(values):
        raise ValueError("trailing data in network document")
    return NetworkState(tuple(layers), widths[0])


def digest(net: NetworkState) -> str:
    """64-bit FNV-1a of the canonical serialization, as 16 hex digits."""
    h = _FNV_OFFSET
    for byte in serialize(net).encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return "%016x" % h


def write_model(net: NetworkState, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(net))


def read_model(path) -> NetworkState:
    with open(path, "r", encoding="utf-8") as fh:
        return deserialize(fh.read())


def random_network(
    arch: Sequence[int],
    seed: int,
    weight_cap: float | None = None,
    bias_cap: float = 0.1,
) -> NetworkState:
    """Seeded uniform initialization that keeps units off the ReLU1 rails.

    Weights are drawn from [0, min(1, 1/fan_in)] by default so that
    pre-activations start around the middle of (0, 1); all-U[0,1] weights
    would saturate wide layers immediately and freeze every gradient.
    """
    if len(arch) < 2:
        raise DimensionError("arch needs at least input and one layer width")
    rng = Prng(seed)
    layers = []
    for fan_in, width in zip(arch, arch[1:]):
        cap = weight_cap if weight_cap is not None else 1.0 / fan_in
        cap = min(1.0, cap)
        w = np.empty((width, fan_in), dtype=np.float64)
        for i in range(width):
            for j in range(fan_in):
                w[i, j] = rng.uniform() * cap
        b = np.empty(width, dtype=np.float64)
        for i in range(width):
            b[i] = rng.uniform() * bias_cap
        layers.append(LayerParams(w, b))
    return NetworkState(tuple(layers), int(arch[0]))
