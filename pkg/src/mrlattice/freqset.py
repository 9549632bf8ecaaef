"""Frequency sets: generators, expansion, shifting and modular reduction.

A frequency set is an int64 array of shape ``(T, d)``; its row order fixes
the alignment of coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_frequencies

__all__ = [
    "ModReduction",
    "expansion",
    "hyperbolic_cross",
    "hyperbolic_cross_size",
    "random_cube_freqset",
    "shift_to_nonneg",
    "reduce_mod",
    "load_freqset",
    "save_freqset",
    "format_freqset",
    "parse_freqset",
]

DEFAULT_SIZE_CAP = 5_000_000


def expansion(freqs) -> int:
    """Largest per-coordinate spread ``max_j (max_k k_j - min_l l_j)``."""
    freqs = check_frequencies(freqs)
    return int((freqs.max(axis=0) - freqs.min(axis=0)).max())


def _dyadic_block(level: int) -> np.ndarray:
    if level == 0:
        return np.zeros(1, dtype=np.int64)
    half = 1 << (level - 1)
    return np.arange(-half + 1, half + 1, dtype=np.int64)


def _dyadic_level(v: np.ndarray) -> np.ndarray:
    """Smallest j with v in G_j."""
    v = np.asarray(v, dtype=np.int64)
    out = np.zeros(v.shape, dtype=np.int64)
    pos = v > 0
    neg = v < 0
    # v > 0: 2**(j-1) >= v;  v < 0: 2**(j-1) >= 1 - v
    out[pos] = 1 + np.ceil(np.log2(v[pos])).astype(np.int64)
    out[neg] = 1 + np.ceil(np.log2(1 - v[neg])).astype(np.int64)
    return out


def _level_counts(n: int) -> list[int]:
    # number of integers whose smallest dyadic block has the given level
    return [1, 1] + [1 << (j - 1) for j in range(2, n + 1)] if n >= 1 else [1]


def hyperbolic_cross_size(d: int, n: int) -> int:
    """Cardinality of the dyadic hyperbolic cross, computed without enumeration."""
    if d < 1 or n < 0:
        raise ValueError(f"need d >= 1 and n >= 0, got d={d}, n={n}")
    per_level = _level_counts(n)[: n + 1]
    # ways[b]: number of prefixes using total level exactly b
    ways = [1] + [0] * n
    for _ in range(d):
        new = [0] * (n + 1)
        for b, w in enumerate(ways):
            if w:
                for lev, cnt in enumerate(per_level):
                    if b + lev > n:
                        break
                    new[b + lev] += w * cnt
        ways = new
    return sum(ways)


def hyperbolic_cross(d: int, n: int, size_cap: int = DEFAULT_SIZE_CAP) -> np.ndarray:
    """Dyadic hyperbolic cross of dimension ``d`` and refinement ``n``.

    Uses the blocks ``G_0 = {0}`` and ``G_j = (-2**(j-1), 2**(j-1)]`` so that
    the expansion is ``2**n - 1``. Rows are emitted in lexicographic order.
    """
    size = hyperbolic_cross_size(d, n)
    if size > size_cap:
        raise ValueError(f"hyperbolic cross H_{n}^{d} has {size} elements, above cap {size_cap}")
    blocks = [_dyadic_block(b) for b in range(n + 1)]
    block_levels = [_dyadic_level(blk) for blk in blocks]
    sizes = np.array([len(blk) for blk in blocks])
    rows = np.zeros((1, 0), dtype=np.int64)
    budget = np.array([n], dtype=np.int64)
    for _ in range(d):
        parent = np.repeat(np.arange(len(rows)), sizes[budget])
        col = np.concatenate([blocks[b] for b in budget])
        col_levels = np.concatenate([block_levels[b] for b in budget])
        rows = np.hstack([rows[parent], col[:, None]])
        budget = budget[parent] - col_levels
    return np.ascontiguousarray(rows)


def random_cube_freqset(d: int, T: int, lo: int, hi: int, seed=None) -> np.ndarray:
    """``T`` distinct frequencies drawn uniformly from ``[lo, hi]^d`` without replacement."""
    if hi < lo:
        raise ValueError(f"empty range [{lo}, {hi}]")
    width = hi - lo + 1
    total = width**d
    if T < 1 or T > total:
        raise ValueError(f"cannot draw {T} distinct frequencies from a cube of {total} points")
    rng = np.random.default_rng(seed)
    if total <= 10**7:
        flat = rng.choice(total, size=T, replace=False)
    else:
        seen: dict[int, None] = {}
        while len(seen) < T:
            for v in rng.integers(0, total, size=T - len(seen)):
                seen.setdefault(int(v))
        flat = np.fromiter(seen, dtype=object)
    out = np.empty((T, d), dtype=np.int64)
    flat = [int(v) for v in flat]
    for j in range(d - 1, -1, -1):
        out[:, j] = [v % width for v in flat]
        flat = [v // width for v in flat]
    return out + lo


def shift_to_nonneg(freqs) -> tuple[np.ndarray, np.ndarray]:
    """Translate ``freqs`` so every axis has minimum zero; returns (shifted, shift)."""
    freqs = check_frequencies(freqs)
    shift = freqs.min(axis=0)
    return freqs - shift, shift


@dataclass(frozen=True)
class ModReduction:
    """Componentwise reduction of a frequency set modulo ``modulus``.

    ``image[i]`` is the residue vector of frequency ``i``. ``unique_idx`` holds
    the indices whose residue vector is hit exactly once, ``colliding_idx``
    the rest.
    """

    modulus: int
    image: np.ndarray
    unique_idx: np.ndarray
    colliding_idx: np.ndarray
    residue_set: np.ndarray  # distinct residue vectors, first-occurrence order
    class_of: np.ndarray  # row of residue_set for each frequency

    @property
    def n_residues(self) -> int:
        return len(self.residue_set)


def reduce_mod(freqs, M: int) -> ModReduction:
    M = int(M)
    if M < 2:
        raise ValueError(f"modulus must be >= 2, got {M}")
    freqs = check_frequencies(freqs)
    image = np.mod(freqs, M)
    view = np.ascontiguousarray(image).view(np.dtype((np.void, image.dtype.itemsize * image.shape[1])))
    _, first, inverse, counts = np.unique(view.ravel(), return_index=True, return_inverse=True, return_counts=True)
    mult = counts[inverse]
    # relabel classes by first occurrence so residue_set follows frequency order
    order = np.argsort(first, kind="stable")
    relabel = np.empty_like(order)
    relabel[order] = np.arange(len(order))
    return ModReduction(
        modulus=M,
        image=image,
        unique_idx=np.flatnonzero(mult == 1),
        colliding_idx=np.flatnonzero(mult > 1),
        residue_set=image[np.sort(first)],
        class_of=relabel[inverse.ravel()],
    )


def format_freqset(freqs, comment: str | None = None) -> str:
    freqs = check_frequencies(freqs)
    lines = [f"# {line}" for line in comment.splitlines()] if comment else []
    lines += [" ".join(str(int(v)) for v in row) for row in freqs]
    return "\n".join(lines) + "\n"


def parse_freqset(text: str) -> np.ndarray:
    rows = []
    dim = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [int(tok) for tok in line.split()]
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer entry in {line!r}") from None
        if dim is None:
            dim = len(row)
        elif len(row) != dim:
            raise ValueError(f"line {lineno}: expected {dim} components, got {len(row)}")
        rows.append(row)
    if not rows:
        raise ValueError("frequency file contains no frequencies")
    return check_frequencies(np.array(rows, dtype=np.int64), allow_duplicates=False)


def load_freqset(path) -> np.ndarray:
    return parse_freqset(Path(path).read_text(encoding="utf-8"))


def save_freqset(path, freqs, comment: str | None = None) -> None:
    Path(path).write_text(format_freqset(freqs, comment), encoding="utf-8")
