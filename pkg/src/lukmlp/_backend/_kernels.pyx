# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernels.

Same loops, same order as lukmlp._backend.pure: weight terms left to
right, bias last, batch rows in order.  Build flags disable FMA
contraction, so outputs are bit-identical to the pure backend.
"""

import numpy as np

NAME = "fast"


cdef void _forward_flat(const double* wbuf, const double* bbuf,
                        const Py_ssize_t* woff, const Py_ssize_t* uoff,
                        const Py_ssize_t* widths, Py_ssize_t n_layers,
                        const double* x, double* zbuf, double* abuf) noexcept nogil:
    cdef Py_ssize_t t, i, j, fan_in, width
    cdef const double* prev = x
    cdef const double* wrow
    cdef double acc, z
    for t in range(n_layers):
        fan_in = widths[t]
        width = widths[t + 1]
        for i in range(width):
            wrow = wbuf + woff[t] + i * fan_in
            acc = 0.0
            for j in range(fan_in):
                acc += wrow[j] * prev[j]
            z = acc + bbuf[uoff[t] + i]
            zbuf[uoff[t] + i] = z
            if z < 0.0:
                abuf[uoff[t] + i] = 0.0
            elif z > 1.0:
                abuf[uoff[t] + i] = 1.0
            else:
                abuf[uoff[t] + i] = z
        prev = abuf + uoff[t]


cdef double _vec_max(const double* v, Py_ssize_t n) noexcept nogil:
    cdef double best = v[0]
    cdef Py_ssize_t i
    for i in range(1, n):
        if v[i] > best:
            best = v[i]
    return best


def _pack(weights, biases, x):
    widths = np.empty(len(weights) + 1, dtype=np.intp)
    widths[0] = x.shape[1]
    for t, w in enumerate(weights):
        widths[t + 1] = w.shape[0]
    woff = np.zeros(len(weights), dtype=np.intp)
    uoff = np.zeros(len(weights), dtype=np.intp)
    for t in range(1, len(weights)):
        woff[t] = woff[t - 1] + weights[t - 1].size
        uoff[t] = uoff[t - 1] + biases[t - 1].size
    wbuf = np.concatenate([np.ascontiguousarray(w).ravel() for w in weights])
    bbuf = np.concatenate([np.ascontiguousarray(b) for b in biases])
    return widths, woff, uoff, wbuf, bbuf


def batch_gradients(weights, biases, x, y):
    """Summed raw gradients of sum_i |a_i - y_i| over a batch.

    Mirrors pure.batch_gradients; see there for the contract.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    widths, woff, uoff, wbuf, bbuf = _pack(weights, biases, x)
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t total_units = bbuf.shape[0]
    cdef Py_ssize_t total_w = wbuf.shape[0]

    zbuf = np.zeros(total_units, dtype=np.float64)
    abuf = np.zeros(total_units, dtype=np.float64)
    dbuf = np.zeros(total_units, dtype=np.float64)
    gwbuf = np.zeros(total_w, dtype=np.float64)
    gbbuf = np.zeros(total_units, dtype=np.float64)
    losses = np.empty(n, dtype=np.float64)
    yhats = np.empty(n, dtype=np.float64)

    cdef double[:, ::1] xv = x
    cdef double[:, ::1] yv = y
    cdef double[::1] wv = wbuf, bv = bbuf, zv = zbuf, av = abuf, dv = dbuf
    cdef double[::1] gwv = gwbuf, gbv = gbbuf, lv = losses, hv = yhats
    cdef Py_ssize_t[::1] widv = widths, wov = woff, uov = uoff

    cdef Py_ssize_t s, t, i, j, fan_in, width, out_w
    cdef double acc, diff, g, yhat, ymax, d
    cdef const double* prev_a
    cdef const double* zrow
    cdef const double* out_a
    cdef const double* wrow

    out_w = widv[n_layers]
    with nogil:
        for s in range(n):
            _forward_flat(&wv[0], &bv[0], &wov[0], &uov[0], &widv[0],
                          n_layers, &xv[s, 0], &zv[0], &av[0])
            out_a = &av[0] + uov[n_layers - 1]
            zrow = &zv[0] + uov[n_layers - 1]
            yhat = _vec_max(out_a, out_w)
            ymax = _vec_max(&yv[s, 0], out_w)
            diff = ymax - yhat
            lv[s] = diff if diff >= 0.0 else -diff
            hv[s] = yhat

            for i in range(out_w):
                diff = out_a[i] - yv[s, i]
                g = 1.0 if diff > 0.0 else (-1.0 if diff < 0.0 else 0.0)
                if 0.0 < zrow[i] < 1.0:
                    dv[uov[n_layers - 1] + i] = g
                else:
                    dv[uov[n_layers - 1] + i] = 0.0

            for t in range(n_layers - 1, -1, -1):
                fan_in = widv[t]
                width = widv[t + 1]
                prev_a = (&av[0] + uov[t - 1]) if t > 0 else &xv[s, 0]
                for i in range(width):
                    d = dv[uov[t] + i]
                    if d != 0.0:
                        for j in range(fan_in):
                            gwv[wov[t] + i * fan_in + j] += d * prev_a[j]
                        gbv[uov[t] + i] += d
                if t > 0:
                    for j in range(fan_in):
                        if 0.0 < zv[uov[t - 1] + j] < 1.0:
                            acc = 0.0
                            for i in range(width):
                                acc += wv[wov[t] + i * fan_in + j] * dv[uov[t] + i]
                            dv[uov[t - 1] + j] = acc
                        else:
                            dv[uov[t - 1] + j] = 0.0

    gw_sums = []
    gb_sums = []
    pos_w = 0
    pos_u = 0
    for t in range(n_layers):
        w = weights[t]
        gw_sums.append(gwbuf[pos_w : pos_w + w.size].reshape(w.shape).copy())
        gb_sums.append(gbbuf[pos_u : pos_u + w.shape[0]].copy())
        pos_w += w.size
        pos_u += w.shape[0]
    return gw_sums, gb_sums, losses, yhats


def forward_outputs(weights, biases, x):
    """Final-layer activations for every row of x; shape (n, out)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    widths, woff, uoff, wbuf, bbuf = _pack(weights, biases, x)
    cdef Py_ssize_t n_layers = len(weights)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t total_units = bbuf.shape[0]
    cdef Py_ssize_t out_w = weights[len(weights) - 1].shape[0]

    zbuf = np.zeros(total_units, dtype=np.float64)
    abuf = np.zeros(total_units, dtype=np.float64)
    result = np.empty((n, out_w), dtype=np.float64)

    cdef double[:, ::1] xv = x
    cdef double[:, ::1] rv = result
    cdef double[::1] wv = wbuf, bv = bbuf, zv = zbuf, av = abuf
    cdef Py_ssize_t[::1] widv = widths, wov = woff, uov = uoff
    cdef Py_ssize_t s, i

    with nogil:
        for s in range(n):
            _forward_flat(&wv[0], &bv[0], &wov[0], &uov[0], &widv[0],
                          n_layers, &xv[s, 0], &zv[0], &av[0])
            for i in range(out_w):
                rv[s, i] = av[uov[n_layers - 1] + i]
    return result
