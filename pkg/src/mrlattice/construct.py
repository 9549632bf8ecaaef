"""Randomized construction of sampling schemes made of rank-1 lattices.

Seven strategies are provided:

* ``construct_alg1`` / ``construct_alg2``: need only the cardinality, the
  dimension and an expansion bound. All lattices share one prime size
  (alg 1) or use consecutive primes (alg 2). Success holds with high
  probability and is not certified.
* ``construct_alg3`` / ``construct_alg4``: draw lattices against a known
  frequency set and keep those that enlarge the union of aliasing-free
  sets, until the union is the whole set.
* ``construct_alg5`` / ``construct_alg6``: greedy rounds, each one picking
  the best of several random generating vectors for a lattice sized to the
  still unresolved part of the set. Reconstruction peels.
* ``construct_alg7``: stages sized by componentwise residues, each stage
  built with the alg-3 loop at a fixed prime. Reconstruction peels.

Randomness is drawn from ``numpy.random.default_rng([seed, round, candidate])``
so every draw depends only on its position, never on execution order.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import check_frequencies
from .freqset import expansion, reduce_mod
from .lattice import MultipleRank1Lattice, Rank1Lattice, aliasing_free_mask, mr1l_node_count
from .numtheory import MAX_PRIME_ARG, collision_free_primes, next_prime
from .plan import PeelingPlan, PeelingStage

__all__ = [
    "ConstructionParams",
    "ConstructionReport",
    "ConstructionAborted",
    "compute_s",
    "construct",
    "construct_alg1",
    "construct_alg2",
    "construct_alg3",
    "construct_alg4",
    "construct_alg5",
    "construct_alg6",
    "construct_alg7",
    "find_M_ICc",
]

log = logging.getLogger(__name__)

NODE_COUNT_CAP = 20_000_000


class ConstructionAborted(RuntimeError):
    """Too many consecutive draws failed to make progress."""


@dataclass(frozen=True)
class ConstructionParams:
    """Tuning knobs shared by all constructions.

    ``c`` is the oversampling factor of the lattice size threshold, ``delta``
    the admissible failure probability, ``n`` the number of candidate primes
    for alg 3 and ``C`` the stage constant of alg 7. ``max_rounds`` bounds
    the number of fruitless batches before a construction gives up.
    """

    c: float = 2.0
    delta: float = 0.5
    n: int = 1
    C: float = 2.0
    seed: int | None = None
    max_rounds: int = 100

    def __post_init__(self):
        if not self.c > 1:
            raise ValueError(f"c must exceed 1, got {self.c}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not self.C >= 1:
            raise ValueError(f"C must be >= 1, got {self.C}")
        if self.seed is not None and (int(self.seed) != self.seed or self.seed < 0):
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")
        if int(self.max_rounds) != self.max_rounds or self.max_rounds < 1:
            raise ValueError(f"max_rounds must be a positive integer, got {self.max_rounds}")


@dataclass
class ConstructionReport:
    algorithm: int
    mr1l: MultipleRank1Lattice
    s_planned: int | None
    s_used: int
    per_lattice_cover: list[np.ndarray] | None
    covered: bool | None
    total_nodes_distinct: int | None
    total_nodes_bound: int
    peeling: PeelingPlan | None = None
    c_used: float | None = None
    seed: int | None = None
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    wall_ms: float = 0.0

    @property
    def n_freqs(self) -> int | None:
        return self.extra.get("n_freqs")

    @property
    def oversampling(self) -> float | None:
        """Distinct nodes per frequency (falls back to the node bound)."""
        if not self.n_freqs:
            return None
        nodes = self.total_nodes_distinct if self.total_nodes_distinct is not None else self.total_nodes_bound
        return nodes / self.n_freqs

    @property
    def oversampling_bound(self) -> float | None:
        """Row count ``1 - s + sum M`` per frequency, duplicates included."""
        return self.total_nodes_bound / self.n_freqs if self.n_freqs else None

    def to_dict(self) -> dict:
        lattices = []
        for i, lat in enumerate(self.mr1l):
            item = {"z": list(lat.z), "M": lat.M}
            if self.per_lattice_cover is not None:
                item["n_cover"] = int(len(self.per_lattice_cover[i]))
            lattices.append(item)
        return {
            "algorithm": self.algorithm,
            "params": self.params,
            "c_used": self.c_used,
            "seed": self.seed,
            "s_planned": self.s_planned,
            "s_used": self.s_used,
            "covered": self.covered,
            "total_nodes_distinct": self.total_nodes_distinct,
            "total_nodes_bound": self.total_nodes_bound,
            "oversampling": self.oversampling,
            "oversampling_bound": self.oversampling_bound,
            "lattice_hash": self.mr1l.content_hash(),
            "lattices": lattices,
            "per_lattice_cover": None
            if self.per_lattice_cover is None
            else [[int(i) for i in cov] for cov in self.per_lattice_cover],
            "peeling": None if self.peeling is None else self.peeling.to_dict(),
            "extra": self.extra,
            "wall_ms": self.wall_ms,
        }


def compute_s(T: int, delta: float, c: float) -> int:
    """Number of lattices ``ceil((c/(c-1))**2 * (ln T - ln delta) / 2)``."""
    if int(T) != T or T < 2:
        raise ValueError(f"T must be an integer >= 2, got {T}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not c > 1:
        raise ValueError(f"c must exceed 1, got {c}")
    return _s_formula(math.log(T) - math.log(delta), c)


def _s_formula(log_term: float, c: float) -> int:
    return max(1, math.ceil((c / (c - 1)) ** 2 * log_term / 2))


def _resolve_seed(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    return int(seed)


def _rng(seed: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng([seed, *counters])


def _draw_z(rng: np.random.Generator, d: int, M: int) -> tuple[int, ...]:
    return tuple(int(v) for v in rng.integers(0, M, size=d))


def _first_prime_above(lam) -> int:
    # smallest prime strictly larger than the (possibly fractional) threshold
    return next_prime(math.floor(lam))


def _finish(report: ConstructionReport, n_freqs: int | None, start: float) -> ConstructionReport:
    mr1l = report.mr1l
    report.total_nodes_bound = mr1l.n_rows
    try:
        report.total_nodes_distinct, _ = mr1l_node_count(mr1l, NODE_COUNT_CAP)
    except (MemoryError, OverflowError) as exc:
        log.info("distinct nodes not counted: %s", exc)
    report.extra["n_freqs"] = n_freqs
    report.wall_ms = (time.perf_counter() - start) * 1e3
    return report


def _degenerate(algorithm: int, params: ConstructionParams, seed: int, d: int, start: float):
    # a single frequency is recovered from the value at the origin
    mr1l = MultipleRank1Lattice((Rank1Lattice((0,) * d, 1),), meta={"algorithm": algorithm})
    plan = PeelingPlan((), 0) if algorithm >= 5 else None
    report = ConstructionReport(
        algorithm, mr1l, 1, 1, [np.array([0])], True, None, 1, plan, params.c, seed, asdict(params) | {"seed": seed}
    )
    return _finish(report, 1, start)


def _check_TdN(T, d, N):
    for name, val, low in (("T", T, 2), ("d", d, 1), ("N", N, 1)):
        if int(val) != val or val < low:
            raise ValueError(f"{name} must be an integer >= {low}, got {val}")


def _fixed_size_scheme(algorithm: int, T: int, d: int, N: int, params: ConstructionParams, s: int | None):
    _check_TdN(T, d, N)
    start = time.perf_counter()
    seed = _resolve_seed(params.seed)
    c_adj = max(Fraction(params.c), Fraction(int(N), int(T) - 1))
    s_plan = compute_s(T, params.delta, float(c_adj))
    s_used = s_plan if s is None else int(s)
    if s_used < 1:
        raise ValueError(f"s must be >= 1, got {s_used}")
    lam = c_adj * (T - 1)
    sizes = [_first_prime_above(lam)]
    while len(sizes) < s_used:
        sizes.append(sizes[-1] if algorithm == 1 else next_prime(sizes[-1]))
    lattices = tuple(Rank1Lattice(_draw_z(_rng(seed, r, 0), d, M), M) for r, M in enumerate(sizes))
    mr1l = MultipleRank1Lattice(lattices, meta={"algorithm": algorithm})
    params_d = asdict(params) | {"seed": seed, "T": int(T), "d": int(d), "N": int(N)}
    report = ConstructionReport(
        algorithm, mr1l, s_plan, s_used, None, None, None, 0, None, float(c_adj), seed, params_d,
        {"lambda": float(lam)},
    )
    return _finish(report, int(T), start)


def construct_alg1(T: int, d: int, N: int, params: ConstructionParams | None = None, s: int | None = None):
    """``s`` random lattices of one common prime size; no frequency set needed.

    ``c`` is first raised to ``N / (T - 1)`` if smaller, so the common size
    exceeds the expansion of any admissible set. ``s`` overrides the number
    of lattices given by the probability bound.
    """
    return _fixed_size_scheme(1, T, d, N, params or ConstructionParams(), s)


def construct_alg2(T: int, d: int, N: int, params: ConstructionParams | None = None, s: int | None = None):
    """As :func:`construct_alg1` with consecutive, pairwise distinct primes."""
    return _fixed_size_scheme(2, T, d, N, params or ConstructionParams(), s)


def _cover_loop(freqs, pick_size, seed, key, d, budget, label):
    """Draw lattices until the union of aliasing-free sets covers ``freqs``.

    ``pick_size(rng, n_kept)`` returns the lattice size, or ``None`` to stop
    early. A draw that adds nothing is discarded; ``budget`` consecutive
    discards raise :class:`ConstructionAborted`.
    """
    T = len(freqs)
    covered = np.zeros(T, dtype=bool)
    lattices, covers = [], []
    fails = draw = 0
    while not covered.all():
        rng = _rng(seed, *key, draw)
        draw += 1
        M = pick_size(rng, len(lattices))
        if M is None:
            break
        z = _draw_z(rng, d, M)
        free = aliasing_free_mask(freqs, z, M)
        if np.any(free & ~covered):
            lattices.append(Rank1Lattice(z, M))
            covers.append(np.flatnonzero(free))
            covered |= free
            fails = 0
            continue
        fails += 1
        if fails >= budget:
            if label is None:
                break
            raise ConstructionAborted(
                f"{label}: {fails} consecutive draws added no coverage "
                f"({int(covered.sum())}/{T} frequencies covered)"
            )
    return lattices, covers, covered


def construct_alg3(freqs, params: ConstructionParams | None = None):
    """Keep drawing lattices from the ``n`` smallest suitable primes until covered."""
    params = params or ConstructionParams()
    freqs = check_frequencies(freqs, allow_duplicates=False)
    start = time.perf_counter()
    seed = _resolve_seed(params.seed)
    T, d = freqs.shape
    if T == 1:
        return _degenerate(3, params, seed, d, start)
    lam = params.c * (T - 1)
    primes = collision_free_primes(freqs, lam, params.n).primes
    s = compute_s(T, params.delta, params.c)

    def pick(rng, _):
        return primes[int(rng.integers(len(primes)))]

    lattices, covers, _ = _cover_loop(freqs, pick, seed, (0,), d, params.max_rounds * s, "alg 3")
    mr1l = MultipleRank1Lattice(tuple(lattices), meta={"algorithm": 3})
    report = ConstructionReport(
        3, mr1l, s, len(lattices), covers, True, None, 0, None, params.c, seed,
        asdict(params) | {"seed": seed}, {"lambda": lam, "primes": list(primes)},
    )
    return _finish(report, T, start)


def construct_alg4(freqs, params: ConstructionParams | None = None):
    """Distinct ascending primes, at most ``s`` lattices; may end uncovered.

    Failure to cover within ``s`` lattices (or after ``max_rounds``
    fruitless draws for one prime) is reported through ``covered = False``.
    """
    params = params or ConstructionParams()
    freqs = check_frequencies(freqs, allow_duplicates=False)
    start = time.perf_counter()
    seed = _resolve_seed(params.seed)
    T, d = freqs.shape
    if T == 1:
        return _degenerate(4, params, seed, d, start)
    lam = params.c * (T - 1)
    s = compute_s(T, params.delta, params.c)
    primes = collision_free_primes(freqs, lam, s).primes

    def pick(_, kept):
        return primes[kept] if kept < s else None

    lattices, covers, covered = _cover_loop(freqs, pick, seed, (0,), d, params.max_rounds, None)
    if not lattices:
        # nothing useful was drawn; keep a placeholder so the scheme is well formed
        lattices, covers = [Rank1Lattice((0,) * d, primes[0])], [np.array([], dtype=np.int64)]
    mr1l = MultipleRank1Lattice(tuple(lattices), meta={"algorithm": 4})
    ok = bool(covered.all())
    if not ok:
        log.info("alg 4 stopped with %d/%d frequencies covered", int(covered.sum()), T)
    report = ConstructionReport(
        4, mr1l, s, len(lattices), covers, ok, None, 0, None, params.c, seed,
        asdict(params) | {"seed": seed}, {"lambda": lam, "primes": list(primes)},
    )
    return _finish(report, T, start)


def _greedy_rounds(algorithm: int, freqs, params: ConstructionParams):
    params = params or ConstructionParams()
    freqs = check_frequencies(freqs, allow_duplicates=False)
    start = time.perf_counter()
    seed = _resolve_seed(params.seed)
    T1, d = freqs.shape
    if T1 == 1:
        return _degenerate(algorithm, params, seed, d, start)
    c = params.c
    s1 = _s_formula(2 * math.log(T1) - math.log(params.delta), c)
    remaining = np.arange(T1)
    lattices, covers, stages, used = [], [], [], []
    fails = rnd = 0
    while len(remaining):
        T = len(remaining)
        sub = freqs[remaining]
        s = _s_formula(math.log(T) + math.log(T1) - math.log(params.delta), c)
        exclude = used if algorithm == 6 else ()
        M = collision_free_primes(sub, c * (T - 1), 1, exclude=exclude)[0]
        masks = [aliasing_free_mask(sub, z, M) for z in (_draw_z(_rng(seed, rnd, t), d, M) for t in range(s))]
        counts = [int(m.sum()) for m in masks]
        best = int(np.argmax(counts))
        rnd += 1
        if counts[best] == 0:
            fails += 1
            if fails >= params.max_rounds:
                raise ConstructionAborted(f"alg {algorithm}: {fails} consecutive rounds resolved nothing ({T} left)")
            continue
        fails = 0
        z = _draw_z(_rng(seed, rnd - 1, best), d, M)
        resolved = remaining[masks[best]]
        stages.append(PeelingStage(M, (len(lattices), len(lattices) + 1), resolved))
        lattices.append(Rank1Lattice(z, M))
        covers.append(resolved)
        used.append(M)
        remaining = remaining[~masks[best]]
    mr1l = MultipleRank1Lattice(tuple(lattices), tuple(range(len(lattices))), meta={"algorithm": algorithm})
    bound = min(math.ceil(s1 * math.log(T1)), T1)
    if len(lattices) > bound:
        log.warning("alg %d used %d lattices, above the round bound %d", algorithm, len(lattices), bound)
    report = ConstructionReport(
        algorithm, mr1l, s1, len(lattices), covers, True, None, 0, PeelingPlan(tuple(stages)), c, seed,
        asdict(params) | {"seed": seed}, {"round_bound": bound, "draw_rounds": rnd},
    )
    return _finish(report, T1, start)


def construct_alg5(freqs, params: ConstructionParams | None = None):
    """Greedy rounds; each round keeps the best of ``s`` random vectors."""
    return _greedy_rounds(5, freqs, params)


def construct_alg6(freqs, params: ConstructionParams | None = None):
    """As :func:`construct_alg5` with pairwise distinct lattice sizes."""
    return _greedy_rounds(6, freqs, params)


def find_M_ICc(freqs, c: float, C: float) -> int:
    """Smallest prime ``M`` with at least ``|I|/C`` unique residue vectors mod ``M``
    and ``M > c * (number of distinct residue vectors - 1)``.
    """
    freqs = check_frequencies(freqs)
    T = len(freqs)
    if T < 2:
        raise ValueError("need at least two frequencies")
    # every qualifying M satisfies M > c*(T/C - 1), since residues >= uniques >= T/C
    p = next_prime(max(1, math.floor(c * (T / C - 1))))
    while p < MAX_PRIME_ARG:
        red = reduce_mod(freqs, p)
        if len(red.unique_idx) * C >= T and p > c * (red.n_residues - 1):
            return p
        p = next_prime(p)
    raise ConstructionAborted("no qualifying prime below 2**62")


def construct_alg7(freqs, params: ConstructionParams | None = None):
    """Stages at residue-driven primes, each built by the covering loop at that prime."""
    params = params or ConstructionParams()
    freqs = check_frequencies(freqs, allow_duplicates=False)
    start = time.perf_counter()
    seed = _resolve_seed(params.seed)
    T, d = freqs.shape
    if T > 1 and params.C > T:
        raise ValueError(f"C must lie in [1, {T}], got {params.C}")
    remaining = np.arange(T)
    lattices, covers, stages, bounds = [], [], [], []
    stage_no = 0
    s_ref = compute_s(max(T, 2), params.delta, params.c)
    while len(remaining) > 1:
        sub = freqs[remaining]
        M = find_M_ICc(sub, params.c, params.C)
        red = reduce_mod(sub, M)
        singleton = np.zeros(red.n_residues, dtype=bool)
        singleton[red.class_of[red.unique_idx]] = True
        stage_lats, stage_covers, _ = _cover_loop(
            red.residue_set, lambda rng, kept: M, seed, (stage_no,), d, params.max_rounds * s_ref, f"alg 7 stage {stage_no}"
        )
        lo = len(lattices)
        bounds.append(lo)
        for cov in stage_covers:
            hit = np.zeros(red.n_residues, dtype=bool)
            hit[cov] = True
            covers.append(remaining[hit[red.class_of] & singleton[red.class_of]])
        lattices.extend(stage_lats)
        stages.append(PeelingStage(M, (lo, len(lattices)), remaining[red.unique_idx]))
        keep = np.ones(len(remaining), dtype=bool)
        keep[red.unique_idx] = False
        remaining = remaining[keep]
        stage_no += 1
    leftover = int(remaining[0]) if len(remaining) == 1 else None
    if not lattices:
        lattices.append(Rank1Lattice((0,) * d, 1))
        covers.append(np.array([leftover]))
        bounds.append(0)
    mr1l = MultipleRank1Lattice(tuple(lattices), tuple(bounds), meta={"algorithm": 7})
    report = ConstructionReport(
        7, mr1l, None, len(lattices), covers, True, None, 0, PeelingPlan(tuple(stages), leftover), params.c, seed,
        asdict(params) | {"seed": seed}, {"stage_moduli": [st.modulus for st in stages]},
    )
    return _finish(report, T, start)


_BY_SET = {3: construct_alg3, 4: construct_alg4, 5: construct_alg5, 6: construct_alg6, 7: construct_alg7}


def construct(algorithm: int, freqs=None, params: ConstructionParams | None = None, *, T=None, d=None, N=None, s=None):
    """Dispatch by algorithm number.

    Algorithms 1 and 2 take ``T``, ``d``, ``N`` (derived from ``freqs`` when
    given); the others require ``freqs``.
    """
    params = params or ConstructionParams()
    if algorithm in (1, 2):
        if freqs is not None:
            freqs = check_frequencies(freqs)
            T = len(freqs) if T is None else T
            d = freqs.shape[1] if d is None else d
            N = max(1, expansion(freqs)) if N is None else N
        if T is None or d is None or N is None:
            raise ValueError(f"algorithm {algorithm} needs T, d and N")
        fn = construct_alg1 if algorithm == 1 else construct_alg2
        return fn(T, d, N, params, s=s)
    if algorithm not in _BY_SET:
        raise ValueError(f"unknown algorithm {algorithm}; choose 1..7")
    if freqs is None:
        raise ValueError(f"algorithm {algorithm} needs a frequency set")
    return _BY_SET[algorithm](freqs, params)
