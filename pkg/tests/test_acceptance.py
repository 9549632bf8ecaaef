"""Acceptance gate: ten criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (the lines are repeated in the
terminal summary) or directly with ``python3 tests/test_acceptance.py``.
"""

import itertools
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from conftest import FIVE_FIRST, dense_oracle, random_coeffs, scheme  # noqa: E402
from mrlattice import (  # noqa: E402
    LatticeSampler,
    adjoint,
    check_reconstruction_property,
    column_rank_full,
    compute_s,
    condition_number,
    construct_alg1,
    construct_alg7,
    evaluate,
    hyperbolic_cross,
    is_collision_free,
    next_prime,
    random_cube_freqset,
)
from mrlattice.construct import ConstructionParams, construct  # noqa: E402
from mrlattice.numtheory import prime_range  # noqa: E402
from mrlattice.verify import aliasing_probability_exhaustive, dense_fourier_matrix  # noqa: E402

RESULTS: list[str] = []


def verdict(num, label, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {num:>2}. {label}" + (f"  ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    assert ok, line


def five_set():
    return np.array([[k, 3] for k in FIVE_FIRST], dtype=np.int64)


def test_01_formula():
    a = compute_s(1683, 0.5, 2)
    b = compute_s(148, 0.9972, 2)
    verdict(1, "lattice count formula", a == 17 and b == 10, f"s(1683, 0.5, 2)={a}, s(148, 0.9972, 2)={b}")


def test_02_alg1_bound():
    r = construct_alg1(148, 3, 299, ConstructionParams(c=2, delta=0.9972))
    M = r.mr1l.sizes[0]
    ok = r.total_nodes_bound == 3061 and M == next_prime(math.floor(r.c_used * 147))
    verdict(2, "Alg 1 node bound", ok, f"s={r.s_used}, M={M}, bound={r.total_nodes_bound}")


def test_03_five_set():
    freqs = five_set()
    bad = []
    worst = 0.0
    for seed in range(100):
        r = construct_alg7(freqs, ConstructionParams(c=1.1, C=2, seed=seed))
        kappa = condition_number(freqs, r.mr1l, method="svd").kappa
        worst = max(worst, abs(kappa - 2.7191))
        if r.extra["stage_moduli"] != [5, 3] or r.total_nodes_distinct != 7 or abs(kappa - 2.7191) > 1e-3:
            bad.append(seed)
    verdict(3, "Alg 7 on the five-frequency set", not bad, f"100 seeds, failing={bad[:5]}, max |kappa-2.7191|={worst:.2e}")


def test_04_uncovered_full_rank():
    freqs = np.array([[k, 4] for k in (0, 2, 5, 7, 16, 21)])
    mr = scheme(((1, 0), 2), ((1, 2), 3), ((1, 3), 5))
    covered = check_reconstruction_property(freqs, mr).covered
    full = column_rank_full(freqs, mr)
    verdict(4, "coverage is sufficient, not necessary", (not covered) and full, f"covered={covered}, full rank={full}")


def test_05_roundtrip():
    rng = np.random.default_rng(5)
    sets = [(f"hc{n}", hyperbolic_cross(6, n)) for n in range(1, 6)]
    for i in range(10):
        T = int(rng.integers(2, 513))
        sets.append((f"cube{i}", random_cube_freqset(3, T, 1, 300, seed=1000 + i)))
    worst = 0.0
    failures = []
    for (name, freqs), alg in itertools.product(sets, range(3, 8)):
        est = LatticeSampler(algorithm=alg, random_state=7).fit(freqs)
        if not est.covered_:
            failures.append(f"{name}/alg{alg} uncovered")
            continue
        err = est.roundtrip_error(random_coeffs(rng, len(freqs)))
        worst = max(worst, err)
        if err > 1e-9:
            failures.append(f"{name}/alg{alg} err={err:.1e}")
    verdict(5, "round trip, algorithms 3-7", not failures, f"{len(sets) * 5} cases, worst={worst:.1e} {failures[:3]}")


def test_06_oversampling():
    freqs = hyperbolic_cross(6, 5)
    worst = {}
    for alg in (3, 5, 6):
        worst[alg] = max(construct(alg, freqs, ConstructionParams(seed=s)).oversampling for s in range(5))
    s1 = construct_alg1(len(freqs), 6, 31, ConstructionParams()).s_used
    ok = worst[5] <= 4.0 and worst[6] <= 4.0 and worst[3] <= 30 and s1 == 17
    detail = ", ".join(f"alg{a} max {v:.2f}" for a, v in worst.items()) + f", alg1 s={s1}"
    verdict(6, "oversampling bands, hyperbolic cross d=6 n=5", ok, detail)


def test_07_condition():
    lines = []
    ok = True
    for n in range(1, 6):
        freqs = hyperbolic_cross(6, n)
        N = int(np.ptp(freqs, axis=0).max()) + 1
        k1 = condition_number(freqs, construct_alg1(len(freqs), 6, N, ConstructionParams(seed=n)).mr1l).kappa
        ok &= 1 <= k1 <= 2.5
        k56 = []
        for alg in (5, 6):
            k = condition_number(freqs, construct(alg, freqs, ConstructionParams(seed=n)).mr1l).kappa
            k56.append(k)
            ok &= 1 <= k <= 12
        lines.append(f"n={n}: {k1:.2f}/{k56[0]:.2f}/{k56[1]:.2f}")
    verdict(7, "condition number bands (alg 1/5/6)", bool(ok), "; ".join(lines))


def test_08_success_rate():
    mr = construct_alg1(148, 3, 299, ConstructionParams(c=2, seed=8), s=10).mr1l
    hits = sum(check_reconstruction_property(random_cube_freqset(3, 148, 1, 300, seed=s), mr).covered
               for s in range(200))
    verdict(8, "Alg 1 scheme vs random sets", hits / 200 >= 0.95, f"{hits}/200 covered")


def _collision_free_pool():
    rng = np.random.default_rng(9)
    for M, d in itertools.product((5, 7, 11, 13), (1, 2)):
        # a collision-free set has at most M**d elements
        for T in range(2, min(6, M**d) + 1):
            drawn = 0
            while drawn < 12:
                freqs = np.unique(rng.integers(-2 * M, 2 * M + 1, (T, d)), axis=0)
                if len(freqs) == T and is_collision_free(freqs, M):
                    drawn += 1
                    yield freqs, M


def test_09_aliasing_probability():
    checked = violations = 0
    for freqs, M in _collision_free_pool():
        T = len(freqs)
        for k in range(T):
            checked += 1
            violations += aliasing_probability_exhaustive(freqs, k, M) * M > T - 1
    verdict(9, "aliasing probability bound, exhaustive", violations == 0, f"{checked} (set, k) pairs, {violations} violations")


def _property_suite():
    rng = np.random.default_rng(10)
    freqs = np.unique(rng.integers(-6, 7, (14, 2)), axis=0)
    mr = scheme(((1, 5), 41), ((3, 2), 37), ((4, 9), 43))
    x = random_coeffs(rng, len(freqs))
    y = random_coeffs(rng, mr.n_rows)
    out = {}
    out["adjoint"] = abs(np.vdot(evaluate(x, freqs, mr), y) - np.vdot(x, adjoint(y, freqs, mr))) < 1e-9
    x2 = random_coeffs(rng, len(freqs))
    a, b = 1.5 - 2j, -0.25 + 1j
    out["linearity"] = np.allclose(evaluate(a * x + b * x2, freqs, mr),
                                   a * evaluate(x, freqs, mr) + b * evaluate(x2, freqs, mr), atol=1e-10)
    shift = np.array([4, -3])
    A, A0 = dense_oracle(freqs, mr), dense_oracle(freqs + shift, mr)
    nodes = [np.array([(j * zc) % lat.M for zc in lat.z]) / lat.M
             for i, lat in enumerate(mr) for j in range(0 if i == 0 else 1, lat.M)]
    out["shift"] = np.max(np.abs(A0 - np.exp(2j * np.pi * np.array(nodes) @ shift)[:, None] * A)) < 1e-10
    single = scheme(((3, 7), 11))
    out["mod identity"] = np.max(np.abs(dense_fourier_matrix(freqs, single)
                                        - dense_fourier_matrix(np.mod(freqs, 11), single))) < 1e-12
    primes = np.array(prime_range(0, 2 * 10**6))
    idx = np.searchsorted(primes, np.arange(2, 10**6 + 1), side="right")
    oracle_ok = all(next_prime(n) == primes[i] for n, i in zip(range(2, 10**6 + 1), idx))
    out["next_prime / Bertrand"] = oracle_ok and bool(np.all(primes[idx] < 2 * np.arange(2, 10**6 + 1)))
    rank_ok = True
    for seed in range(30):
        fr = np.unique(np.random.default_rng(seed).integers(-8, 9, (20, 2)), axis=0)
        r = construct(5, fr, ConstructionParams(seed=seed))
        rank_ok &= (not check_reconstruction_property(fr, r.mr1l).covered) or column_rank_full(fr, r.mr1l)
    out["coverage => full rank"] = bool(rank_ok)
    return out


def test_10_property_suite():
    out = _property_suite()
    verdict(10, "property suite", all(out.values()), ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in out.items()))


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in globals().items() if k.startswith("test_")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
