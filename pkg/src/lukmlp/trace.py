"""Training runs as sequences of axiom-tagged configuration transitions.

A configuration is the epoch counter plus the network parameters; each
step records which inference scheme justified it:

    N0   start an epoch (counter below 1): init -> train, state unchanged
    N0E  counter saturated at 1: stop without an output
    N1   one layer of forward propagation
    N2   tolerance unmet: apply the update, tick the counter by 1/E
    N3   tolerance met: stop with the outputs, state unchanged

Steps carry FNV-1a digests of the canonical network serialization instead
of full parameters; an optional side file with full states enables deep
checking.  The checker replays the run from the initial configuration and
reports every mismatched field as a violation, including the termination
guard: an update step requires both an unmet tolerance and a counter
still strictly below 1.

Dataset-scale training logs one condensed record per epoch in the same
schema (mean distance as the end statistic); those are validated
structurally since re-deriving them would mean re-running the epoch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

from . import mv
from .network import (
    NetworkState,
    aggregate,
    digest,
    end_condition,
    forward_layer,
    ForwardCache,
    serialize,
)
from .training import TrainConfig, apply_update, backward, routed_target

AXIOMS = ("N0", "N0E", "N1", "N2", "N3")
ACTION_KINDS = ("init", "train", "update", "stop")


@dataclass(frozen=True)
class Configuration:
    """Epoch counter in [0, 1] plus the full parameter state."""

    epoch_r: float
    net: NetworkState


@dataclass(frozen=True)
class TraceStep:
    index: int
    axiom: str
    action_kind: str
    action_args: tuple[float, ...]
    layer: Optional[int]
    pre: str
    post: str
    lam: Optional[tuple[float, ...]]
    err: Optional[float]
    end: Optional[float]
    r: float


@dataclass(frozen=True)
class Violation:
    index: int
    axiom: str
    clause: str
    detail: str = ""

    def __str__(self):
        tail = f" ({self.detail})" if self.detail else ""
        return f"step {self.index} [{self.axiom}]: {self.clause}{tail}"


def epoch_tick(r: float, epochs: int) -> float:
    """Advance the counter by 1/E with truncated addition."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    return mv.oplus(r, 1.0 / epochs)


def symbolic_train_loop(
    init: Configuration,
    inputs: Sequence[float],
    target: float,
    eps: float,
    epochs: int,
    cfg: TrainConfig,
    collect_states: Optional[list[str]] = None,
) -> list[TraceStep]:
    """Single-sample training rendered as one record per axiom application.

    Per epoch: N0, one N1 per layer, then N3 (stop) or N2 (update + tick).
    A saturated counter short-circuits the epoch to a terminating N0E.
    When collect_states is a list it receives the serialized post-state of
    every step, for the deep-checking side file.
    """
    steps: list[TraceStep] = []
    net = init.net
    r = init.epoch_r
    xs = [float(v) for v in inputs]
    idx = 0

    def emit(step: TraceStep, post_net: NetworkState):
        steps.append(step)
        if collect_states is not None:
            collect_states.append(serialize(post_net))

    while True:
        d = digest(net)
        if r >= 1.0 - mv.TOL:
            emit(
                TraceStep(idx, "N0E", "stop", (), None, d, d, None, None, None, 1.0),
                net,
            )
            return steps
        emit(
            TraceStep(idx, "N0", "init", tuple(xs), None, d, d, None, None, None, r),
            net,
        )
        idx += 1

        zs: list[list[float]] = []
        acts: list[list[float]] = []
        current = xs
        for t, layer in enumerate(net.layers):
            z, a = forward_layer(layer, current)
            emit(
                TraceStep(
                    idx, "N1", "train", tuple(current), t, d, d, tuple(a), None, None, r
                ),
                net,
            )
            idx += 1
            zs.append(z)
            acts.append(a)
            current = a

        lam = current
        yhat = aggregate(lam, cfg.aggregator)
        err = mv.dist(target, yhat)
        truth, satisfied = end_condition(target, lam, eps, cfg.aggregator)
        if satisfied:
            emit(
                TraceStep(
                    idx, "N3", "stop", tuple(lam), None, d, d, tuple(lam), err, truth, r
                ),
                net,
            )
            return steps

        cache = ForwardCache(inputs=xs, z=zs, a=acts, output=lam, yhat=yhat)
        bundle = backward(net, cache, routed_target(lam, target), cfg)
        new_net = apply_update(net, bundle, cfg)
        new_r = epoch_tick(r, epochs)
        emit(
            TraceStep(
                idx,
                "N2",
                "update",
                (),
                None,
                d,
                digest(new_net),
                tuple(lam),
                err,
                truth,
                new_r,
            ),
            new_net,
        )
        idx += 1
        net = new_net
        r = new_r


# --- checking ---------------------------------------------------------------

def _close_seq(a: Sequence[float], b: Sequence[float]) -> bool:
    return len(a) == len(b) and all(mv.close(x, y) for x, y in zip(a, b))


def check_trace(
    steps: Sequence[TraceStep],
    initial: Configuration,
    inputs: Sequence[float],
    target: float,
    eps: float,
    epochs: int,
    cfg: TrainConfig,
    states: Optional[Sequence[str]] = None,
) -> list[Violation]:
    """Replay a single-sample trace; empty result means accepted.

    Every field of every step is recomputed from the initial
    configuration: digests, per-layer activations, the end statistic, the
    derived update, and the counter law.  When `states` holds the full
    serialized network per step, those are compared too (deep mode).
    """
    violations: list[Violation] = []

    def bad(step: TraceStep, clause: str, detail: str = ""):
        violations.append(Violation(step.index, step.axiom, clause, detail))

    def field(step, clause, ok, detail=""):
        if not ok:
            bad(step, clause, detail)

    def check_state(step: TraceStep, post_net: NetworkState):
        field(step, "post-state mismatch", step.post == digest(post_net))
        if states is not None:
            k = _pos - 1  # position of the step just taken
            if k >= len(states):
                bad(step, "missing side state")
            elif states[k] != serialize(post_net):
                bad(step, "side state mismatch")

    if not steps:
        return [Violation(-1, "-", "empty trace")]

    net = initial.net
    r = initial.epoch_r
    xs = [float(v) for v in inputs]
    _pos = 0
    n_steps = len(steps)

    def take(expected_axioms: tuple[str, ...]) -> Optional[TraceStep]:
        nonlocal _pos
        if _pos >= n_steps:
            violations.append(
                Violation(n_steps, "-", "truncated trace", f"expected {expected_axioms}")
            )
            return None
        step = steps[_pos]
        if step.index != _pos:
            bad(step, "index mismatch", f"expected {_pos}")
        if step.axiom not in AXIOMS:
            bad(step, "unknown axiom")
            return None
        if step.axiom not in expected_axioms:
            bad(step, "unexpected axiom", f"expected one of {expected_axioms}")
            return None
        _pos += 1
        return step

    while True:
        pre_digest = digest(net)
        saturated = r >= 1.0 - mv.TOL
        step = take(("N0E",) if saturated else ("N0",))
        if step is None:
            return violations
        if step.axiom == "N0E":
            field(step, "action kind", step.action_kind == "stop")
            field(step, "action args", step.action_args == ())
            field(step, "layer not null", step.layer is None)
            field(step, "pre-state mismatch", step.pre == pre_digest)
            field(step, "lambda not null", step.lam is None)
            field(step, "err not null", step.err is None)
            field(step, "end not null", step.end is None)
            field(step, "counter mismatch", mv.close(step.r, 1.0))
            check_state(step, net)
            break
        # N0
        field(step, "action kind", step.action_kind == "init")
        field(step, "action args", _close_seq(step.action_args, xs))
        field(step, "layer not null", step.layer is None)
        field(step, "pre-state mismatch", step.pre == pre_digest)
        field(step, "lambda not null", step.lam is None)
        field(step, "err not null", step.err is None)
        field(step, "end not null", step.end is None)
        field(step, "counter mismatch", mv.close(step.r, r))
        check_state(step, net)

        zs: list[list[float]] = []
        acts: list[list[float]] = []
        current = xs
        for t, layer in enumerate(net.layers):
            step = take(("N1",))
            if step is None:
                return violations
            z, a = forward_layer(layer, current)
            field(step, "action kind", step.action_kind == "train")
            field(step, "action args", _close_seq(step.action_args, current))
            field(step, "layer mismatch", step.layer == t)
            field(step, "pre-state mismatch", step.pre == pre_digest)
            field(
                step,
                "forward mismatch",
                step.lam is not None and _close_seq(step.lam, a),
            )
            field(step, "err not null", step.err is None)
            field(step, "end not null", step.end is None)
            field(step, "counter mismatch", mv.close(step.r, r))
            check_state(step, net)
            zs.append(z)
            acts.append(a)
            current = a

        lam = current
        yhat = aggregate(lam, cfg.aggregator)
        err = mv.dist(target, yhat)
        truth, satisfied = end_condition(target, lam, eps, cfg.aggregator)
        step = take(("N3",) if satisfied else ("N2",))
        if step is None:
            return violations
        field(step, "pre-state mismatch", step.pre == pre_digest)
        field(
            step,
            "lambda mismatch",
            step.lam is not None and _close_seq(step.lam, lam),
        )
        field(step, "err mismatch", step.err is not None and mv.close(step.err, err))
        field(step, "end mismatch", step.end is not None and mv.close(step.end, truth))
        if step.axiom == "N3":
            field(step, "action kind", step.action_kind == "stop")
            field(step, "action args", _close_seq(step.action_args, lam))
            field(step, "end below threshold", truth >= 1.0 - mv.TOL)
            field(step, "counter mismatch", mv.close(step.r, r))
            check_state(step, net)
            break
        # N2: termination guard is the theorem made executable
        field(step, "action kind", step.action_kind == "update")
        field(step, "action args", step.action_args == ())
        field(step, "update after final epoch", r < 1.0 - mv.TOL)
        field(step, "update despite satisfied end", truth < 1.0 - mv.TOL)
        cache = ForwardCache(inputs=xs, z=zs, a=acts, output=lam, yhat=yhat)
        bundle = backward(net, cache, routed_target(lam, target), cfg)
        net = apply_update(net, bundle, cfg)
        r = epoch_tick(r, epochs)
        field(step, "counter mismatch", mv.close(step.r, r))
        check_state(step, net)

    # nothing may follow a stop
    if _pos != n_steps:
        extra = steps[_pos]
        violations.append(
            Violation(extra.index, extra.axiom, "steps after stop")
        )
    return violations


def check_condensed_trace(
    steps: Sequence[TraceStep], eps: float, epochs: int
) -> list[Violation]:
    """Structural validation of per-epoch summary records.

    Checks index order, digest chaining, the counter law, the axiom
    guards, and the single trailing stop; the per-epoch updates themselves
    are not re-derived (that would require re-running the epochs).
    """
    violations: list[Violation] = []

    def bad(step, clause, detail=""):
        violations.append(Violation(step.index, step.axiom, clause, detail))

    if not steps:
        return [Violation(-1, "-", "empty trace")]
    r = 0.0
    prev_post: Optional[str] = None
    for k, step in enumerate(steps):
        if step.index != k:
            bad(step, "index mismatch", f"expected {k}")
        if step.axiom not in ("N2", "N3", "N0E"):
            bad(step, "unexpected axiom", "condensed traces hold N2/N3/N0E only")
            continue
        if prev_post is not None and step.pre != prev_post:
            bad(step, "digest chain broken")
        if k < len(steps) - 1 and step.axiom in ("N3", "N0E"):
            bad(step, "steps after stop")
        if step.axiom == "N2":
            if step.end is None or step.err is None:
                bad(step, "missing end statistic")
            else:
                if step.end >= 1.0 - mv.TOL:
                    bad(step, "update despite satisfied end")
                if not mv.close(step.end, mv.implies(step.err, eps)):
                    bad(step, "end mismatch")
            if r >= 1.0 - mv.TOL:
                bad(step, "update after final epoch")
            r = epoch_tick(r, epochs)
            if not mv.close(step.r, r):
                bad(step, "counter mismatch")
        elif step.axiom == "N3":
            if step.end is None or step.end < 1.0 - mv.TOL:
                bad(step, "end below threshold")
            if not mv.close(step.r, r):
                bad(step, "counter mismatch")
        else:  # N0E
            if r < 1.0 - mv.TOL:
                bad(step, "stop before final epoch")
            if not mv.close(step.r, 1.0):
                bad(step, "counter mismatch")
        prev_post = step.post
    last = steps[-1]
    if last.axiom == "N2":
        bad(last, "missing final stop")
    return violations


def dataset_epoch_recorder(eps: float, epochs: int):
    """Epoch hook for training.train that emits condensed records.

    Returns (hook, steps); after training, call finish() implicitly via
    the N0E record appended when the run exhausts its epochs.
    """
    steps: list[TraceStep] = []
    state = {"r": 0.0}

    def hook(epoch, pre_net, post_net, mean_loss, accuracy, stopped):
        truth = mv.implies(mean_loss, eps)
        pre_d = digest(pre_net)
        post_d = digest(post_net)
        idx = len(steps)
        if stopped:
            steps.append(
                TraceStep(
                    idx, "N3", "stop", (), None, pre_d, post_d, None, mean_loss,
                    truth, state["r"],
                )
            )
            return
        state["r"] = epoch_tick(state["r"], epochs)
        steps.append(
            TraceStep(
                idx, "N2", "update", (), None, pre_d, post_d, None, mean_loss,
                truth, state["r"],
            )
        )
        if epoch == epochs:
            steps.append(
                TraceStep(
                    idx + 1, "N0E", "stop", (), None, post_d, post_d, None, None,
                    None, 1.0,
                )
            )

    return hook, steps


# --- JSONL ------------------------------------------------------------------

def _num(x: float) -> str:
    return "%.17g" % x


def _vec(values: Optional[Sequence[float]]) -> str:
    if values is None:
        return "null"
    return "[" + ", ".join(_num(v) for v in values) + "]"


def _opt(x: Optional[float]) -> str:
    return "null" if x is None else _num(x)


def to_json_line(step: TraceStep) -> str:
    return (
        '{"i": %d, "axiom": "%s", "action": {"kind": "%s", "args": %s}, '
        '"layer": %s, "pre": "%s", "post": "%s", "lambda": %s, "err": %s, '
        '"end": %s, "r": %s}'
        % (
            step.index,
            step.axiom,
            step.action_kind,
            _vec(step.action_args),
            "null" if step.layer is None else str(step.layer),
            step.pre,
            step.post,
            _vec(step.lam),
            _opt(step.err),
            _opt(step.end),
            _num(step.r),
        )
    )


def step_from_json(obj: dict) -> TraceStep:
    try:
        action = obj["action"]
        lam = obj["lambda"]
        return TraceStep(
            index=int(obj["i"]),
            axiom=str(obj["axiom"]),
            action_kind=str(action["kind"]),
            action_args=tuple(float(v) for v in action["args"]),
            layer=None if obj["layer"] is None else int(obj["layer"]),
            pre=str(obj["pre"]),
            post=str(obj["post"]),
            lam=None if lam is None else tuple(float(v) for v in lam),
            err=None if obj["err"] is None else float(obj["err"]),
            end=None if obj["end"] is None else float(obj["end"]),
            r=float(obj["r"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed trace record: {e}") from e


def write_trace(steps: Sequence[TraceStep], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for step in steps:
            fh.write(to_json_line(step) + "\n")


def read_trace(path) -> list[TraceStep]:
    steps = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                steps.append(step_from_json(json.loads(line)))
            except ValueError as e:
                raise ValueError(f"line {lineno}: {e}") from e
    return steps


def write_states(steps_states: Sequence[str], path) -> None:
    """Side file: one serialized network per step, for deep checking."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, text in enumerate(steps_states):
            fh.write(json.dumps({"i": i, "net": text}) + "\n")


def read_states(path) -> list[str]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(str(obj["net"]))
            except (ValueError, KeyError) as e:
                raise ValueError(f"line {lineno}: malformed state record: {e}") from e
    return out
