import math

import numpy as np
import pytest

from lukmlp import dataset
from lukmlp.dataset import Prng


def splitmix64_reference(seed, count):
    """Independent transliteration of the published algorithm."""
    mask = (1 << 64) - 1
    state = seed & mask
    out = []
    for _ in range(count):
        state = (state + 0x9E3779B97F4A7C15) & mask
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out.append(z ^ (z >> 31))
    return out


def test_prng_matches_reference_stream():
    rng = Prng(0)
    assert [rng.next_u64() for _ in range(4)] == splitmix64_reference(0, 4)
    rng = Prng(0x123456789ABCDEF)
    assert [rng.next_u64() for _ in range(8)] == splitmix64_reference(0x123456789ABCDEF, 8)


def test_prng_known_values():
    # frozen from the reference algorithm, seed 42
    assert splitmix64_reference(42, 3) == [
        13679457532755275413,
        2949826092126892291,
        5139283748462763858,
    ]
    rng = Prng(42)
    assert [rng.next_u64() for _ in range(3)] == splitmix64_reference(42, 3)


def test_uniform_range_and_determinism():
    rng = Prng(7)
    values = [rng.uniform() for _ in range(1000)]
    assert all(0.0 <= v < 1.0 for v in values)
    rng2 = Prng(7)
    assert values == [rng2.uniform() for _ in range(1000)]


def test_gaussian_pair_moments():
    rng = Prng(11)
    zs = []
    for _ in range(20000):
        a, b = rng.gaussian_pair()
        zs.extend((a, b))
    zs = np.array(zs)
    assert abs(zs.mean()) < 0.02
    assert abs(zs.std() - 1.0) < 0.02


def test_shuffle_is_permutation():
    rng = Prng(3)
    items = list(range(100))
    rng.shuffle(items)
    assert sorted(items) == list(range(100))
    assert items != list(range(100))


def test_two_moons_endpoints_noiseless():
    ds = dataset.gen_two_moons(1, 0.0, 5)
    assert ds.features[0] == pytest.approx([1.0, 0.0])
    assert ds.features[1] == pytest.approx([0.0, 0.5])
    assert list(ds.labels) == [0, 1]

    ds = dataset.gen_two_moons(2, 0.0, 5)
    class0 = ds.features[:2]
    assert class0[0] == pytest.approx([1.0, 0.0])
    assert class0[1] == pytest.approx([-1.0, 0.0], abs=1e-15)


def test_two_moons_counts_and_determinism():
    a = dataset.gen_two_moons(3000, 0.1, 42)
    b = dataset.gen_two_moons(3000, 0.1, 42)
    assert len(a) == 6000
    assert int(np.sum(a.labels == 0)) == 3000
    assert int(np.sum(a.labels == 1)) == 3000
    assert np.array_equal(a.features, b.features)
    c = dataset.gen_two_moons(3000, 0.1, 43)
    assert not np.array_equal(a.features, c.features)


def test_mirror_vertical():
    ds = dataset.gen_two_moons(4, 0.05, 9)
    flipped = dataset.mirror_vertical(ds)
    assert np.array_equal(flipped.features[:, 0], ds.features[:, 0])
    assert np.array_equal(flipped.features[:, 1], -ds.features[:, 1])
    assert np.array_equal(flipped.labels, ds.labels)


def test_scale_unit_basic():
    ds = dataset.Dataset(np.array([[0.0, 0.0], [2.0, 4.0]]), np.array([0, 1]))
    scaled, rec = dataset.scale_unit(ds)
    assert scaled.features == pytest.approx(np.array([[0.0, 0.0], [1.0, 1.0]]))
    assert rec.mins == (0.0, 0.0)
    assert rec.ranges == (2.0, 4.0)

    already = dataset.Dataset(np.array([[0.0, 0.0], [1.0, 1.0], [0.25, 0.75]]), np.array([0, 1, 0]))
    scaled, _ = dataset.scale_unit(already)
    assert np.array_equal(scaled.features, already.features)


def test_scale_unit_degenerate_coordinate():
    ds = dataset.Dataset(np.array([[1.0, 0.0], [1.0, 1.0]]), np.array([0, 1]))
    with pytest.raises(ValueError, match="degenerate"):
        dataset.scale_unit(ds)


def test_apply_scaling_clamps_out_of_range():
    train = dataset.Dataset(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([0, 1]))
    _, rec = dataset.scale_unit(train)
    test = dataset.Dataset(np.array([[2.0, -1.0]]), np.array([0]))
    scaled = dataset.apply_scaling(test, rec)
    assert scaled.features[0] == pytest.approx([1.0, 0.0])


def test_scale_then_inverse_recovers_inputs():
    ds = dataset.gen_two_moons(200, 0.1, 13)
    scaled, rec = dataset.scale_unit(ds)
    recovered = scaled.features * np.array(rec.ranges) + np.array(rec.mins)
    assert np.max(np.abs(recovered - ds.features)) <= 1e-12


def test_split_counts():
    pool = dataset.gen_two_moons(4000, 0.1, 21)
    train, test = dataset.split(pool, 0.75, 22)
    assert len(train) == 6000 and len(test) == 2000
    for part in (train, test):
        n0 = int(np.sum(part.labels == 0))
        n1 = int(np.sum(part.labels == 1))
        assert abs(n0 - n1) <= 1


def test_split_two_samples():
    ds = dataset.Dataset(np.array([[0.0, 0.1], [1.0, 0.9]]), np.array([0, 1]))
    train, test = dataset.split(ds, 0.5, 1)
    assert len(train) == 1 and len(test) == 1


def test_split_determinism_and_validation():
    pool = dataset.gen_two_moons(100, 0.1, 2)
    a1, b1 = dataset.split(pool, 0.6, 9)
    a2, b2 = dataset.split(pool, 0.6, 9)
    assert np.array_equal(a1.features, a2.features)
    assert np.array_equal(b1.features, b2.features)
    with pytest.raises(ValueError):
        dataset.split(pool, 1.5, 9)


def test_csv_round_trip(tmp_path):
    ds = dataset.gen_two_moons(50, 0.1, 77)
    path = tmp_path / "data.csv"
    dataset.write_csv(ds, path)
    back = dataset.read_csv(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)


def test_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("x1,x2,label\n", encoding="utf-8")
    ds = dataset.read_csv(path)
    assert len(ds) == 0


@pytest.mark.parametrize(
    "row,message",
    [
        ("0.2,0.3,2", "label"),
        ("0.2,0.3", "3 fields"),
        ("hello,0.3,1", "bad number"),
    ],
)
def test_csv_rejects_bad_rows(tmp_path, row, message):
    path = tmp_path / "bad.csv"
    path.write_text(f"x1,x2,label\n{row}\n", encoding="utf-8")
    with pytest.raises(ValueError, match=f"line 2.*{message}"):
        dataset.read_csv(path)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 1"):
        dataset.read_csv(path)


def test_generation_fixes_every_byte(tmp_path):
    """(seed, params) pins the CSV byte for byte."""
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    dataset.write_csv(dataset.gen_two_moons(500, 0.1, 31), p1)
    dataset.write_csv(dataset.gen_two_moons(500, 0.1, 31), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_gaussian_pairs_consumed_per_point():
    """x-noise uses the cosine branch, y-noise the sine branch, in order."""
    seed = 99
    ds = dataset.gen_two_moons(2, 0.5, seed)
    rng = Prng(seed)
    expect = []
    for i in range(2):
        t = math.pi * i
        gx, gy = rng.gaussian_pair()
        expect.append((math.cos(t) + 0.5 * gx, math.sin(t) + 0.5 * gy))
    assert ds.features[0] == pytest.approx(expect[0], abs=0)
    assert ds.features[1] == pytest.approx(expect[1], abs=0)
