import numpy as np
import pytest

from lukmlp import bench, network, training
from lukmlp._backend import available_backends, get_backend
from lukmlp.dataset import Prng

needs_fast = pytest.mark.skipif(
    "fast" not in available_backends(), reason="compiled extension not built"
)


def random_problem(prng, n=23):
    depth = 1 + prng.below(3)
    widths = [1 + prng.below(5) for _ in range(depth + 1)]
    layers = []
    for fan_in, width in zip(widths, widths[1:]):
        w = np.array([[prng.uniform() for _ in range(fan_in)] for _ in range(width)])
        b = np.array([prng.uniform() for _ in range(width)])
        layers.append(network.LayerParams(w, b))
    net = network.NetworkState(tuple(layers), widths[0])
    x = np.array([[prng.uniform() for _ in range(widths[0])] for _ in range(n)])
    y = np.array([[float(prng.below(2)) for _ in range(widths[-1])] for _ in range(n)])
    return net, x, y


@needs_fast
def test_backends_bit_identical_on_gradients():
    fast = get_backend("fast")
    pure = get_backend("pure")
    prng = Prng(101)
    for _ in range(40):
        net, x, y = random_problem(prng)
        ws = [l.weights for l in net.layers]
        bs = [l.bias for l in net.layers]
        gw_f, gb_f, loss_f, yh_f = fast.batch_gradients(ws, bs, x, y)
        gw_p, gb_p, loss_p, yh_p = pure.batch_gradients(ws, bs, x, y)
        for a, b in zip(gw_f, gw_p):
            assert np.array_equal(a, b)
        for a, b in zip(gb_f, gb_p):
            assert np.array_equal(a, b)
        assert np.array_equal(loss_f, loss_p)
        assert np.array_equal(yh_f, yh_p)


@needs_fast
def test_backends_bit_identical_over_training():
    """Whole train() runs agree parameter for parameter across backends."""
    import lukmlp.training as tr

    prng = Prng(103)
    x = np.array([[prng.uniform(), prng.uniform()] for _ in range(96)])
    y = np.array([[float(prng.below(2))] for _ in range(96)])
    cfg = training.TrainConfig(max_epochs=6, batch_size=16, norm_eps=8.0, seed=5)
    net = network.random_network([2, 6, 1], 31)

    results = {}
    original = tr.batch_gradients
    for name in ("fast", "pure"):
        tr.batch_gradients = get_backend(name).batch_gradients
        try:
            final, hist = training.train(net, x, y, cfg)
        finally:
            tr.batch_gradients = original
        results[name] = (network.serialize(final), hist)
    assert results["fast"][0] == results["pure"][0]
    assert results["fast"][1] == results["pure"][1]


def test_forward_outputs_matches_reference():
    backend = get_backend(available_backends()[0])
    prng = Prng(107)
    for _ in range(20):
        net, x, _ = random_problem(prng, n=7)
        ws = [l.weights for l in net.layers]
        bs = [l.bias for l in net.layers]
        outs = backend.forward_outputs(ws, bs, x)
        for i in range(x.shape[0]):
            cache = network.forward(net, list(x[i]))
            assert list(outs[i]) == [float(v) for v in cache.output]


@needs_fast
def test_benchmark_reports_identical_results():
    report = bench.run_benchmark(arch=(2, 8, 1), n=64, steps=5)
    assert report["bit_identical"] is True
    assert set(report["backends"]) == {"fast", "pure"}
    assert bench.format_report(report)
