import json
import os

import numpy as np
import pytest

from lukmlp import cli, dataset, formula, network


def run(argv):
    return cli.main(argv)


def test_gen_data_defaults_row_counts(tmp_path):
    out = tmp_path / "data"
    assert run(["gen-data", "--n-per-class", "400", "--seed", "3", "--out-dir", str(out)]) == 0
    train = dataset.read_csv(out / "train.csv")
    test = dataset.read_csv(out / "test.csv")
    assert len(train) == 600 and len(test) == 200
    assert train.features.min() >= 0.0 and train.features.max() <= 1.0


def test_gen_data_tiny_pool(tmp_path):
    assert run(["gen-data", "--n-per-class", "2", "--noise", "0", "--seed", "1",
                "--out-dir", str(tmp_path)]) == 0
    train = dataset.read_csv(tmp_path / "train.csv")
    test = dataset.read_csv(tmp_path / "test.csv")
    assert len(train) + len(test) == 4


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as ei:
        run(["gen-data", "--n-per-class", "not-a-number"])
    assert ei.value.code == 2
    with pytest.raises(SystemExit) as ei:
        run(["no-such-command"])
    assert ei.value.code == 2


def _gen_and_train(tmp_path, extra=()):
    data_dir = tmp_path / "data"
    run_dir = tmp_path / "run"
    assert run(["gen-data", "--n-per-class", "200", "--seed", "11",
                "--out-dir", str(data_dir)]) == 0
    argv = [
        "train", "--data", str(data_dir / "train.csv"), "--arch", "2,8,1",
        "--epochs", "3", "--batch", "32", "--seed", "11", "--norm-eps", "64",
        "--out-dir", str(run_dir), *extra,
    ]
    assert run(argv) == 0
    return data_dir, run_dir


def test_train_writes_artifacts(tmp_path, capsys):
    data_dir, run_dir = _gen_and_train(tmp_path)
    assert (run_dir / "model.txt").exists()
    history = (run_dir / "history.csv").read_text().splitlines()
    assert history[0] == "epoch,mean_loss,train_accuracy"
    assert len(history) == 4
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["epochs"] == 3 and manifest["seed"] == 11
    net = network.read_model(run_dir / "model.txt")
    assert net.widths == (2, 8, 1)


def test_train_arch_mismatch_is_validation_error(tmp_path, capsys):
    data_dir = tmp_path / "d"
    run(["gen-data", "--n-per-class", "50", "--seed", "1", "--out-dir", str(data_dir)])
    code = run(["train", "--data", str(data_dir / "train.csv"), "--arch", "3,4,1",
                "--epochs", "1", "--out-dir", str(tmp_path / "r")])
    assert code == 1
    assert "does not match" in capsys.readouterr().err


def test_manifest_rerun_reproduces_bytes(tmp_path):
    data_dir, run_dir = _gen_and_train(tmp_path, extra=["--trace", str(tmp_path / "t.jsonl")])
    model1 = (run_dir / "model.txt").read_bytes()
    history1 = (run_dir / "history.csv").read_bytes()
    trace1 = (tmp_path / "t.jsonl").read_bytes()

    rerun_dir = tmp_path / "rerun"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    manifest["trace"] = str(tmp_path / "t2.jsonl")
    mpath = tmp_path / "m.json"
    mpath.write_text(json.dumps(manifest))
    assert run(["train", "--manifest", str(mpath), "--out-dir", str(rerun_dir)]) == 0
    assert (rerun_dir / "model.txt").read_bytes() == model1
    assert (rerun_dir / "history.csv").read_bytes() == history1
    assert (tmp_path / "t2.jsonl").read_bytes() == trace1


def test_manifest_flag_override(tmp_path):
    data_dir, run_dir = _gen_and_train(tmp_path)
    mpath = run_dir / "manifest.json"
    other = tmp_path / "override"
    assert run(["train", "--manifest", str(mpath), "--epochs", "1",
                "--out-dir", str(other)]) == 0
    manifest = json.loads((other / "manifest.json").read_text())
    assert manifest["epochs"] == 1
    history = (other / "history.csv").read_text().splitlines()
    assert len(history) == 2


def test_eval_reports_accuracy(tmp_path, capsys):
    data_dir, run_dir = _gen_and_train(tmp_path)
    capsys.readouterr()
    assert run(["eval", "--model", str(run_dir / "model.txt"),
                "--data", str(data_dir / "train.csv"),
                "--data", str(data_dir / "test.csv")]) == 0
    out = capsys.readouterr().out
    lines = [ln for ln in out.splitlines() if "accuracy" in ln]
    assert len(lines) == 2


def test_eval_perfect_and_inverted(tmp_path, capsys):
    # constant-1 predictor: single layer with bias 1
    net = network.NetworkState(
        (network.LayerParams(np.zeros((1, 2)), np.array([1.0])),), 2
    )
    model = tmp_path / "one.txt"
    network.write_model(net, model)
    ones = dataset.Dataset(np.array([[0.1, 0.2], [0.5, 0.6]]), np.array([1, 1]))
    zeros = dataset.Dataset(ones.features.copy(), np.array([0, 0]))
    dataset.write_csv(ones, tmp_path / "ones.csv")
    dataset.write_csv(zeros, tmp_path / "zeros.csv")
    run(["eval", "--model", str(model), "--data", str(tmp_path / "ones.csv")])
    assert "accuracy 1.0000" in capsys.readouterr().out
    run(["eval", "--model", str(model), "--data", str(tmp_path / "zeros.csv")])
    assert "accuracy 0.0000" in capsys.readouterr().out


def test_extract_eval_formula_cross_check(tmp_path, capsys):
    """Text round trip: formula evaluation equals the forward pass.

    Weights on a 3-decimal grid so the printed coefficients are exact.
    """
    rng = np.random.default_rng(5)
    layers = []
    widths = [2, 4, 1]
    for fan_in, width in zip(widths, widths[1:]):
        w = rng.integers(0, 1000, size=(width, fan_in)) / 1000.0
        b = rng.integers(0, 1000, size=width) / 1000.0
        layers.append(network.LayerParams(w, b))
    net = network.NetworkState(tuple(layers), 2)
    model = tmp_path / "model.txt"
    network.write_model(net, model)

    fpath = tmp_path / "f.txt"
    assert run(["extract", "--model", str(model), "--output", "0", "-o", str(fpath)]) == 0
    assert run(["eval-formula", str(fpath), "--assign", "0.31,0.77"]) == 0
    value = float(capsys.readouterr().out.strip())
    cache = network.forward(net, [0.31, 0.77])
    assert abs(value - cache.output[0]) <= 1e-9


def test_extract_all_outputs_and_aggregate(tmp_path, capsys):
    net = network.NetworkState(
        (network.LayerParams(np.array([[0.4, 0.3], [0.6, 0.1]]), np.array([0.1, 0.1])),), 2
    )
    model = tmp_path / "m.txt"
    network.write_model(net, model)
    run(["extract", "--model", str(model)])
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    run(["extract", "--model", str(model), "--aggregate"])
    agg = capsys.readouterr().out.strip()
    phi = formula.parse(agg)
    cache = network.forward(net, [0.3, 0.9])
    assert formula.evaluate(phi, [0.3, 0.9]) == pytest.approx(cache.yhat, abs=1e-9)


def test_simplify_idempotent_cli(tmp_path, capsys):
    src = tmp_path / "f.txt"
    src.write_text("(c0 (+) <1>!(!x0))\n")
    run(["simplify", str(src)])
    once = capsys.readouterr().out.strip()
    assert once == "x0"
    src.write_text(once + "\n")
    run(["simplify", str(src)])
    assert capsys.readouterr().out.strip() == once


def test_eval_formula_examples(tmp_path, capsys):
    src = tmp_path / "f.txt"
    src.write_text("c0.5\n")
    assert run(["eval-formula", str(src)]) == 0
    assert float(capsys.readouterr().out) == 0.5
    src.write_text("x2\n")
    assert run(["eval-formula", str(src), "--assign", "0.1,0.2"]) == 1
    assert "x2" in capsys.readouterr().err


def test_formula_syntax_error_exit(tmp_path, capsys):
    src = tmp_path / "f.txt"
    src.write_text("<1.5>x0\n")
    assert run(["simplify", str(src)]) == 1
    assert "out of range" in capsys.readouterr().err


def test_trace_and_check_trace_cycle(tmp_path, capsys):
    net = network.NetworkState(
        (
            network.LayerParams(np.array([[0.4, 0.3], [0.6, 0.1]]), np.array([0.1, 0.1])),
            network.LayerParams(np.array([[0.9, 0.8], [0.0, 1.0]]), np.array([0.15, 0.15])),
        ),
        2,
    )
    model = tmp_path / "m.txt"
    network.write_model(net, model)
    tpath = tmp_path / "trace.jsonl"
    spath = tmp_path / "states.jsonl"
    common = ["--model", str(model), "--input", "0.2,0.3", "--target", "0.8",
              "--eps", "0.1", "--epochs", "3"]
    assert run(["trace", *common, "-o", str(tpath), "--states", str(spath)]) == 0
    first_axioms = [json.loads(ln)["axiom"] for ln in tpath.read_text().splitlines()[:4]]
    assert first_axioms == ["N0", "N1", "N1", "N2"]

    assert run(["check-trace", str(tpath), *common, "--states", str(spath)]) == 0

    # single-character mutation flips the verdict
    text = tpath.read_text().splitlines()
    mutated = text[:3] + [text[3].replace('"axiom": "N2"', '"axiom": "N3"')] + text[4:]
    bad = tmp_path / "bad.jsonl"
    bad.write_text("\n".join(mutated) + "\n")
    capsys.readouterr()
    assert run(["check-trace", str(bad), *common]) == 1
    assert "REJECTED" in capsys.readouterr().err


def test_check_trace_condensed(tmp_path, capsys):
    data_dir, run_dir = _gen_and_train(tmp_path, extra=["--trace", str(tmp_path / "c.jsonl")])
    assert run(["check-trace", str(tmp_path / "c.jsonl"), "--eps", "0", "--epochs", "3"]) == 0


def test_selftest_cli(capsys):
    assert run(["selftest", "--samples", "2000"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_selftest_detects_injected_fault():
    from lukmlp import selftest

    broken = {"oplus": lambda a, b: a + b}  # no clamp
    results = selftest.run_suite(n_samples=2000, ops=broken)
    assert any(not r.passed for r in results)


def test_seed_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("LUKMLP_SEED", "77")
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert run(["gen-data", "--n-per-class", "20", "--out-dir", str(out1)]) == 0
    assert run(["gen-data", "--n-per-class", "20", "--seed", "77", "--out-dir", str(out2)]) == 0
    assert (out1 / "train.csv").read_bytes() == (out2 / "train.csv").read_bytes()


def test_missing_file_is_error(tmp_path, capsys):
    assert run(["eval", "--model", str(tmp_path / "nope.txt"), "--data", "x.csv"]) == 1
