"""Randomized equation suite for the unit-interval algebra.

Each axiom the package relies on is checked as an equation over large
random samples, vectorized with numpy for speed, plus a pointwise
agreement row tying the vectorized operations back to the scalar kernel
in lukmlp.mv.  The operation table can be swapped out (e.g. a broken
oplus) to prove the suite actually detects faults.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import mv

TOL = 1e-9


def default_ops() -> dict[str, Callable]:
    return {
        "oplus": lambda a, b: np.minimum(1.0, a + b),
        "neg": lambda a: 1.0 - a,
        "otimes": lambda a, b: np.maximum(0.0, a + b - 1.0),
        "ominus": lambda a, b: np.maximum(0.0, a - b),
        "scale": lambda r, a: r * a,
        "implies": lambda a, b: np.minimum(1.0, 1.0 - a + b),
    }


@dataclass
class EquationResult:
    name: str
    passed: bool
    samples: int
    max_dev: float


def _dev(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0


def run_suite(n_samples: int = 100_000, seed: int = 2024, ops=None) -> list[EquationResult]:
    o = dict(default_ops())
    if ops:
        o.update(ops)
    rng = np.random.default_rng(seed)
    a = rng.random(n_samples)
    b = rng.random(n_samples)
    c = rng.random(n_samples)
    r = rng.random(n_samples)
    q = rng.random(n_samples)
    one = np.ones_like(a)
    zero = np.zeros_like(a)

    oplus, neg, otimes = o["oplus"], o["neg"], o["otimes"]
    ominus, scale, implies = o["ominus"], o["scale"], o["implies"]

    equations: list[tuple[str, np.ndarray, np.ndarray]] = [
        ("MV neg involution", neg(neg(a)), a),
        ("MV top absorbs", oplus(neg(zero), a), neg(zero)),
        (
            "MV exchange",
            oplus(neg(oplus(neg(a), b)), b),
            oplus(neg(oplus(neg(b), a)), a),
        ),
        ("M1 associativity", oplus(a, oplus(b, c)), oplus(oplus(a, b), c)),
        ("M2 top absorbs", oplus(neg(zero), a), neg(zero)),
        (
            "M3 join exchange",
            oplus(otimes(a, neg(b)), b),
            oplus(otimes(b, neg(a)), a),
        ),
        ("M4 double negation", neg(neg(a)), a),
        ("M5 commutativity", oplus(a, b), oplus(b, a)),
        ("M6 zero identity", oplus(a, zero), a),
        ("R1 scale over ominus", scale(r, ominus(a, b)), ominus(scale(r, a), scale(r, b))),
        ("R2 ominus of scalars", scale(ominus(r, q), a), ominus(scale(r, a), scale(q, a))),
        ("R3 scale composition", scale(r, scale(q, a)), scale(r * q, a)),
        ("R4 unit scale", scale(one, a), a),
        ("RMV1 scalar distributivity", scale(r, ominus(a, b)), ominus(scale(r, a), scale(r, b))),
        ("RMV2 scalar difference", scale(ominus(r, q), a), ominus(scale(r, a), scale(q, a))),
        ("RMV3 scalar associativity", scale(r, scale(q, a)), scale(r * q, a)),
        ("RMV4 unit scalar", scale(one, a), a),
    ]

    results = [
        EquationResult(name, _dev(lhs, rhs) <= TOL, n_samples, _dev(lhs, rhs))
        for name, lhs, rhs in equations
    ]

    # truncated-sum fold equals min(1, plain sum)
    k = 8
    seqs = rng.random((n_samples, k)) * (2.0 / k)
    acc = np.zeros(n_samples)
    for col in range(k):
        acc = oplus(acc, seqs[:, col])
    dev = _dev(acc, np.minimum(1.0, np.sum(seqs, axis=1)))
    results.append(EquationResult("fold equals clipped sum", dev <= TOL, n_samples, dev))

    # order characterization of the implication
    lhs_true = implies(a, b) >= 1.0 - TOL
    rhs_true = a <= b + TOL
    mismatches = int(np.sum(lhs_true != rhs_true))
    results.append(
        EquationResult(
            "implies order characterization", mismatches == 0, n_samples, float(mismatches)
        )
    )

    # vectorized table vs the scalar kernel, pointwise
    m = min(n_samples, 1000)
    pair_devs = []
    for i in range(m):
        pair_devs.append(abs(float(oplus(a[i : i + 1], b[i : i + 1])[0]) - mv.oplus(a[i], b[i])))
        pair_devs.append(abs(float(otimes(a[i : i + 1], b[i : i + 1])[0]) - mv.otimes(a[i], b[i])))
        pair_devs.append(abs(float(neg(a[i : i + 1])[0]) - mv.neg(a[i])))
        pair_devs.append(abs(float(implies(a[i : i + 1], b[i : i + 1])[0]) - mv.implies(a[i], b[i])))
    dev = max(pair_devs)
    results.append(EquationResult("vectorized ops match scalar kernel", dev <= TOL, m, dev))

    return results


def format_report(results: list[EquationResult]) -> str:
    lines = []
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        lines.append(
            f"{status}  {res.name}  ({res.samples} samples, max dev {res.max_dev:.3g})"
        )
    n_fail = sum(1 for r in results if not r.passed)
    lines.append(
        f"{len(results) - n_fail}/{len(results)} equations passed"
        if n_fail
        else f"all {len(results)} equations passed"
    )
    return "\n".join(lines)
