"""Certificates and brute-force checks for sampling schemes.

The dense routines build the full block Fourier matrix and are meant for
small instances; their size caps are arguments, not constants.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from ._validation import check_frequencies
from .lattice import MultipleRank1Lattice, aliasing_free_mask, inner_residues
from .plan import PeelingPlan

__all__ = [
    "AliasingReport",
    "ConditionResult",
    "check_reconstruction_property",
    "check_peeling_plan",
    "dense_fourier_matrix",
    "gram_matrix",
    "numerical_rank",
    "column_rank_full",
    "condition_number",
    "power_iteration_sigma_max",
    "aliasing_probability_exhaustive",
]

DENSE_CAP = 4_000_000
GRAM_CAP = 2000
RANK_TOL = 1e-10


@dataclass(frozen=True)
class AliasingReport:
    per_lattice: list[np.ndarray]
    union_size: int
    covered: bool
    uncovered_idx: list[int]

    def to_dict(self) -> dict:
        return {
            "per_lattice_sizes": [int(len(r)) for r in self.per_lattice],
            "union_size": self.union_size,
            "covered": self.covered,
            "uncovered_idx": self.uncovered_idx,
        }


def check_reconstruction_property(freqs, mr1l: MultipleRank1Lattice) -> AliasingReport:
    """Aliasing-free set of every lattice and whether their union is the whole set."""
    freqs = check_frequencies(freqs)
    if freqs.shape[1] != mr1l.dim:
        raise ValueError(f"frequencies have dimension {freqs.shape[1]}, lattices {mr1l.dim}")
    hit = np.zeros(len(freqs), dtype=bool)
    per = []
    for lat in mr1l:
        mask = aliasing_free_mask(freqs, lat.z, lat.M)
        per.append(np.flatnonzero(mask))
        hit |= mask
    missing = np.flatnonzero(~hit)
    return AliasingReport(per, int(hit.sum()), not len(missing), [int(i) for i in missing])


def check_peeling_plan(freqs, mr1l: MultipleRank1Lattice, plan: PeelingPlan) -> AliasingReport:
    """Certificate for staged recovery.

    Every frequency of a stage must be aliasing-free, among the frequencies
    not resolved by earlier stages, on some lattice of that stage. The
    returned ``per_lattice`` lists what each lattice contributes.
    """
    freqs = check_frequencies(freqs)
    T = len(freqs)
    try:
        plan.check(T, len(mr1l))
    except ValueError:
        return AliasingReport([np.array([], dtype=np.int64)] * len(mr1l), 0, False, list(range(T)))
    per = [np.array([], dtype=np.int64)] * len(mr1l)
    ok = np.zeros(T, dtype=bool)
    remaining = np.ones(T, dtype=bool)
    for st in plan.stages:
        rem_idx = np.flatnonzero(remaining)
        want = np.zeros(T, dtype=bool)
        want[st.resolved_idx] = True
        for l in range(*st.lattice_indices):
            lat = mr1l[l]
            free = rem_idx[aliasing_free_mask(freqs[rem_idx], lat.z, lat.M)]
            per[l] = free[want[free]]
            ok[per[l]] = True
        remaining[st.resolved_idx] = False
    if plan.leftover_idx is not None:
        ok[plan.leftover_idx] = True
    missing = np.flatnonzero(~ok)
    return AliasingReport(per, int(ok.sum()), not len(missing), [int(i) for i in missing])


def dense_fourier_matrix(freqs, mr1l: MultipleRank1Lattice, cap: int = DENSE_CAP) -> np.ndarray:
    """Stacked matrix with entries ``exp(2 pi i j (k.z mod M) / M)``, duplicate rows kept."""
    freqs = check_frequencies(freqs)
    rows, cols = mr1l.n_rows, len(freqs)
    if rows * cols > cap:
        raise MemoryError(f"dense matrix {rows} x {cols} exceeds cap of {cap} entries")
    blocks = []
    for i, lat in enumerate(mr1l):
        r = inner_residues(freqs, lat.z, lat.M)
        j = np.arange(0 if i == 0 else 1, lat.M, dtype=np.int64)
        blocks.append(np.exp(2j * np.pi * (np.outer(j, r) % lat.M) / lat.M))
    return np.vstack(blocks)


def gram_matrix(freqs, mr1l: MultipleRank1Lattice, cap: int = GRAM_CAP) -> np.ndarray:
    """Exact ``A^H A`` without forming ``A``.

    A full lattice contributes ``M`` where two residues agree and zero
    elsewhere; each later lattice lacks its origin row, which removes one
    from every entry.
    """
    freqs = check_frequencies(freqs)
    T = len(freqs)
    if T > cap:
        raise MemoryError(f"Gram matrix of order {T} exceeds cap {cap}")
    G = np.full((T, T), -(len(mr1l) - 1), dtype=np.float64)
    for lat in mr1l:
        r = inner_residues(freqs, lat.z, lat.M)
        G += lat.M * (r[:, None] == r[None, :])
    return G


def numerical_rank(A: np.ndarray, tol: float = RANK_TOL) -> int:
    """Rank from column-pivoted QR, counting pivots above ``tol`` times the largest."""
    if A.size == 0:
        return 0
    R = scipy.linalg.qr(A, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    if diag[0] == 0:
        return 0
    return int(np.sum(diag > tol * diag[0]))


def column_rank_full(freqs, mr1l: MultipleRank1Lattice, tol: float = RANK_TOL, cap: int = DENSE_CAP) -> bool:
    freqs = check_frequencies(freqs)
    return numerical_rank(dense_fourier_matrix(freqs, mr1l, cap), tol) == len(freqs)


@dataclass(frozen=True)
class ConditionResult:
    kappa: float
    sigma_max: float
    sigma_min: float | None
    method: str
    lower_bound: bool = False
    rank: int | None = None

    def to_dict(self) -> dict:
        return {k: (None if v is None else v) for k, v in self.__dict__.items()}


def power_iteration_sigma_max(
    freqs, mr1l: MultipleRank1Lattice, iters: int = 200, rtol: float = 1e-10, seed: int = 0
) -> float:
    """Largest singular value by power iteration on ``A^H A`` through the fast transforms.

    Each iterate gives a lower bound; the returned value is the last one.
    """
    from .transform import adjoint, evaluate

    freqs = check_frequencies(freqs)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(len(freqs)) + 1j * rng.standard_normal(len(freqs))
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(iters):
        y = adjoint(evaluate(x, freqs, mr1l), freqs, mr1l)
        lam = float(np.real(np.vdot(x, y)))
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        x = y / norm
        new = np.sqrt(max(lam, 0.0))
        if abs(new - sigma) <= rtol * new:
            return new
        sigma = new
    return sigma


def condition_number(
    freqs,
    mr1l: MultipleRank1Lattice,
    method: str = "auto",
    dense_cap: int = DENSE_CAP,
    gram_cap: int = GRAM_CAP,
    tol: float = RANK_TOL,
) -> ConditionResult:
    """Spectral condition number of the stacked Fourier matrix.

    ``method`` is ``"svd"`` (dense SVD), ``"gram"`` (eigenvalues of the exact
    Gram matrix), ``"power"`` (only the largest singular value; the result is
    a lower bound) or ``"auto"``, which picks the first that fits its cap.
    A rank-deficient matrix yields ``kappa = inf``.
    """
    freqs = check_frequencies(freqs)
    T = len(freqs)
    if method == "auto":
        if mr1l.n_rows * T <= dense_cap:
            method = "svd"
        elif T <= gram_cap:
            method = "gram"
        else:
            method = "power"
    if method == "svd":
        sv = scipy.linalg.svdvals(dense_fourier_matrix(freqs, mr1l, dense_cap))
        sv = np.concatenate([sv, np.zeros(T - len(sv))])
    elif method == "gram":
        ev = scipy.linalg.eigvalsh(gram_matrix(freqs, mr1l, gram_cap))
        sv = np.sqrt(np.clip(ev, 0.0, None))[::-1]
    elif method == "power":
        smax = power_iteration_sigma_max(freqs, mr1l)
        # unit-modulus entries: every column has norm sqrt(rows), so sigma_min <= sqrt(rows)
        return ConditionResult(smax / np.sqrt(mr1l.n_rows), smax, None, "power", lower_bound=True)
    else:
        raise ValueError(f"unknown method {method!r}")
    smax = float(sv[0])
    rank = int(np.sum(sv > tol * smax)) if smax > 0 else 0
    smin = float(sv[-1])
    kappa = float("inf") if rank < T else smax / smin
    return ConditionResult(kappa, smax, smin, method, rank=rank)


def aliasing_probability_exhaustive(freqs, k_idx: int, M: int, cap: int = 10**7) -> Fraction:
    """Exact share of vectors ``z`` in ``[0, M-1]^d`` on which frequency ``k_idx``
    collides with another frequency modulo ``M``.
    """
    freqs = check_frequencies(freqs)
    M = int(M)
    T, d = freqs.shape
    if not 0 <= k_idx < T:
        raise IndexError(f"k_idx {k_idx} out of range for {T} frequencies")
    total = M**d
    if total > cap:
        raise MemoryError(f"{total} generating vectors exceed the enumeration cap {cap}")
    diffs = np.mod(np.delete(freqs, k_idx, axis=0) - freqs[k_idx], M)
    if len(diffs) == 0:
        return Fraction(0)
    bad = 0
    chunk = max(1, 10**6 // max(1, len(diffs)))
    grid = itertools.product(range(M), repeat=d)
    while True:
        zs = np.array(list(itertools.islice(grid, chunk)), dtype=np.int64).reshape(-1, d)
        if not len(zs):
            break
        hits = (zs @ diffs.T) % M == 0
        bad += int(hits.any(axis=1).sum())
    return Fraction(bad, total)
