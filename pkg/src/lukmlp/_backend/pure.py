"""Pure-Python training kernels.

Import-compatible with the compiled module in ``_kernels.pyx``; both walk
the same loops in the same order, so results agree bit for bit.  This path
exists as the fallback when the extension is unavailable and as the
semantic reference the compiled kernels are tested against.
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def _forward_sample(ws, bs, x):
    """Returns (zs, acts) per layer; weight terms left to right, bias last."""
    zs = []
    acts = []
    prev = x
    for w, b in zip(ws, bs):
        z_layer = []
        a_layer = []
        for i in range(len(w)):
            row = w[i]
            acc = 0.0
            for j in range(len(row)):
                acc += row[j] * prev[j]
            z = acc + b[i]
            z_layer.append(z)
            if z < 0.0:
                a_layer.append(0.0)
            elif z > 1.0:
                a_layer.append(1.0)
            else:
                a_layer.append(z)
        zs.append(z_layer)
        acts.append(a_layer)
        prev = a_layer
    return zs, acts


def _vec_max(values):
    best = values[0]
    for v in values[1:]:
        if v > best:
            best = v
    return best


def batch_gradients(weights, biases, x, y):
    """Summed raw gradients of sum_i |a_i - y_i| over a batch.

    weights/biases: per-layer float64 arrays; x: (n, d0); y: (n, out).
    Returns (gw_sums, gb_sums, losses, yhats) where the sums run over the
    batch in row order, losses[s] = |max(y_s) - max(a_s)| and yhats[s] is
    the max-aggregated output.
    """
    ws = [w.tolist() for w in weights]
    bs = [b.tolist() for b in biases]
    xs = x.tolist()
    ys = y.tolist()
    n = len(xs)
    n_layers = len(ws)
    gw = [[[0.0] * len(w[0]) for _ in range(len(w))] for w in ws]
    gb = [[0.0] * len(b) for b in bs]
    losses = [0.0] * n
    yhats = [0.0] * n

    for s in range(n):
        zs, acts = _forward_sample(ws, bs, xs[s])
        out = acts[-1]
        z_out = zs[-1]
        target = ys[s]
        yhat = _vec_max(out)
        losses[s] = abs(_vec_max(target) - yhat)
        yhats[s] = yhat

        # output delta: sign of the residual, masked off the ReLU1 rails
        delta = []
        for i in range(len(out)):
            diff = out[i] - target[i]
            g = 1.0 if diff > 0.0 else (-1.0 if diff < 0.0 else 0.0)
            active = 0.0 < z_out[i] < 1.0
            delta.append(g if active else 0.0)

        for t in range(n_layers - 1, -1, -1):
            prev_a = acts[t - 1] if t > 0 else xs[s]
            gw_t = gw[t]
            gb_t = gb[t]
            for i in range(len(delta)):
                d = delta[i]
                if d != 0.0:
                    row = gw_t[i]
                    for j in range(len(prev_a)):
                        row[j] += d * prev_a[j]
                    gb_t[i] += d
            if t > 0:
                w_t = ws[t]
                z_prev = zs[t - 1]
                nxt = []
                for j in range(len(prev_a)):
                    if 0.0 < z_prev[j] < 1.0:
                        acc = 0.0
                        for i in range(len(delta)):
                            acc += w_t[i][j] * delta[i]
                        nxt.append(acc)
                    else:
                        nxt.append(0.0)
                delta = nxt

    gw_sums = [np.array(g, dtype=np.float64) for g in gw]
    gb_sums = [np.array(g, dtype=np.float64) for g in gb]
    return gw_sums, gb_sums, np.array(losses), np.array(yhats)


def forward_outputs(weights, biases, x):
    """Final-layer activations for every row of x; shape (n, out)."""
    ws = [w.tolist() for w in weights]
    bs = [b.tolist() for b in biases]
    xs = x.tolist()
    out_w = len(bs[-1])
    result = np.empty((len(xs), out_w), dtype=np.float64)
    for s in range(len(xs)):
        _, acts = _forward_sample(ws, bs, xs[s])
        result[s, :] = acts[-1]
    return result
