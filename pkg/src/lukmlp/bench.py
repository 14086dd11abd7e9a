"""Benchmark the compiled and pure training kernels against each other.

Runs identical batched gradient steps through every available backend,
reports throughput, and verifies the resulting parameters agree bit for
bit, which is the contract that lets the two backends be interchangeable.
"""

from __future__ import annotations

import time

import numpy as np

from ._backend import available_backends, get_backend
from .dataset import Prng
from .network import NetworkState, random_network
from .training import TrainConfig, _updated_params, normalize


def _synthetic_batch(prng: Prng, n: int, d_in: int, d_out: int):
    x = np.empty((n, d_in), dtype=np.float64)
    y = np.empty((n, d_out), dtype=np.float64)
    for i in range(n):
        for j in range(d_in):
            x[i, j] = prng.uniform()
        for j in range(d_out):
            y[i, j] = 1.0 if prng.uniform() < 0.5 else 0.0
    return x, y


def _run_steps(backend, net: NetworkState, x, y, steps: int, cfg: TrainConfig):
    ws = [l.weights.copy() for l in net.layers]
    bs = [l.bias.copy() for l in net.layers]
    t0 = time.perf_counter()
    for _ in range(steps):
        gw_sums, gb_sums, _, _ = backend.batch_gradients(ws, bs, x, y)
        nb = float(x.shape[0])
        raw_w = [g / nb for g in gw_sums]
        raw_b = [g / nb for g in gb_sums]
        ghat_w = normalize(raw_w, cfg.norm_eps)
        ghat_b = normalize(raw_b, cfg.norm_eps)
        ws = [_updated_params(w, rw, gw, cfg) for w, rw, gw in zip(ws, raw_w, ghat_w)]
        bs = [_updated_params(b, rb, gb, cfg) for b, rb, gb in zip(bs, raw_b, ghat_b)]
    elapsed = time.perf_counter() - t0
    return ws, bs, elapsed


def run_benchmark(
    arch=(2, 32, 32, 1), n: int = 512, steps: int = 20, seed: int = 7
) -> dict:
    """Time each backend on the same workload; returns a report dict."""
    cfg = TrainConfig(seed=seed)
    net = random_network(arch, seed)
    prng = Prng(seed + 1)
    x, y = _synthetic_batch(prng, n, arch[0], arch[-1])

    report = {"arch": tuple(arch), "batch": n, "steps": steps, "backends": {}}
    states = {}
    for name in available_backends():
        ws, bs, elapsed = _run_steps(get_backend(name), net, x, y, steps, cfg)
        samples = n * steps
        report["backends"][name] = {
            "seconds": elapsed,
            "samples_per_second": samples / elapsed if elapsed > 0 else float("inf"),
        }
        states[name] = (ws, bs)

    names = list(states)
    if len(names) == 2:
        a, b = (states[n] for n in names)
        identical = all(np.array_equal(wa, wb) for wa, wb in zip(a[0], b[0])) and all(
            np.array_equal(ba, bb) for ba, bb in zip(a[1], b[1])
        )
        report["bit_identical"] = identical
        fast_s = report["backends"]["fast"]["seconds"]
        pure_s = report["backends"]["pure"]["seconds"]
        report["speedup"] = pure_s / fast_s if fast_s > 0 else float("inf")
    return report


def format_report(report: dict) -> str:
    lines = [
        "arch %s, batch %d, %d steps"
        % ("-".join(str(w) for w in report["arch"]), report["batch"], report["steps"])
    ]
    for name, stats in report["backends"].items():
        lines.append(
            "  %-4s  %8.3f s   %10.0f samples/s"
            % (name, stats["seconds"], stats["samples_per_second"])
        )
    if "speedup" in report:
        lines.append("  speedup fast/pure: %.1fx" % report["speedup"])
        lines.append(
            "  results bit-identical: %s" % ("yes" if report["bit_identical"] else "NO")
        )
    return "\n".join(lines)
