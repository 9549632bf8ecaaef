"""Rank-1 lattices, multiple rank-1 lattices and aliasing-free sets."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_frequencies
from .numtheory import is_prime, mod_inverse

__all__ = [
    "Rank1Lattice",
    "MultipleRank1Lattice",
    "inner_residues",
    "lattice_nodes",
    "mr1l_node_count",
    "aliasing_free_mask",
    "aliasing_free_set",
    "load_lattice",
    "save_lattice",
]

_INT64_SAFE_MODULUS = 2**31
DEFAULT_NODE_CAP = 50_000_000


@dataclass(frozen=True)
class Rank1Lattice:
    """The ``M`` nodes ``(j / M) * z mod 1``, ``j = 0..M-1``."""

    z: tuple[int, ...]
    M: int

    def __post_init__(self):
        M = int(self.M)
        if M < 1:
            raise ValueError(f"lattice size must be >= 1, got {M}")
        z = tuple(int(v) for v in self.z)
        if not z:
            raise ValueError("generating vector must have at least one component")
        if any(v < 0 or v >= M for v in z):
            raise ValueError(f"generating vector components must lie in [0, {M - 1}]")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "M", M)

    @property
    def dim(self) -> int:
        return len(self.z)


@dataclass(frozen=True)
class MultipleRank1Lattice:
    """Ordered union of rank-1 lattices sharing one dimension.

    ``stage_bounds`` optionally splits ``lattices`` into consecutive stages
    (offsets into the list, starting with 0).
    """

    lattices: tuple[Rank1Lattice, ...]
    stage_bounds: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lattices = tuple(self.lattices)
        if not lattices:
            raise ValueError("a multiple rank-1 lattice needs at least one lattice")
        dims = {lat.dim for lat in lattices}
        if len(dims) != 1:
            raise ValueError(f"lattices disagree in dimension: {sorted(dims)}")
        object.__setattr__(self, "lattices", lattices)
        if self.stage_bounds is not None:
            object.__setattr__(self, "stage_bounds", tuple(int(b) for b in self.stage_bounds))

    @property
    def dim(self) -> int:
        return self.lattices[0].dim

    @property
    def sizes(self) -> list[int]:
        return [lat.M for lat in self.lattices]

    def __len__(self) -> int:
        return len(self.lattices)

    def __iter__(self):
        return iter(self.lattices)

    def __getitem__(self, i):
        return self.lattices[i]

    @property
    def block_lengths(self) -> list[int]:
        """Row counts per lattice: M_1, then M_l - 1 (the origin is listed once)."""
        return [lat.M if i == 0 else lat.M - 1 for i, lat in enumerate(self.lattices)]

    @property
    def n_rows(self) -> int:
        return 1 - len(self.lattices) + sum(self.sizes)

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "lattices": [{"z": list(lat.z), "M": lat.M} for lat in self.lattices]}
        if self.stage_bounds is not None:
            out["stage_bounds"] = list(self.stage_bounds)
        out["meta"] = dict(self.meta)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MultipleRank1Lattice":
        lattices = tuple(Rank1Lattice(tuple(item["z"]), int(item["M"])) for item in data["lattices"])
        mr1l = cls(lattices, data.get("stage_bounds"), dict(data.get("meta", {})))
        if "dim" in data and int(data["dim"]) != mr1l.dim:
            raise ValueError(f"declared dim {data['dim']} does not match generating vectors ({mr1l.dim})")
        return mr1l

    def content_hash(self) -> str:
        payload = json.dumps(
            {"lattices": [[list(lat.z), lat.M] for lat in self.lattices]}, sort_keys=True
        ).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def inner_residues(freqs, z, M: int) -> np.ndarray:
    """``k . z mod M`` for every row ``k`` of ``freqs`` (least nonnegative residue)."""
    freqs = check_frequencies(freqs)
    M = int(M)
    z = [int(v) for v in z]
    if len(z) != freqs.shape[1]:
        raise ValueError(f"generating vector has {len(z)} components, frequencies have {freqs.shape[1]}")
    if M == 1:
        return np.zeros(len(freqs), dtype=np.int64)
    if M <= _INT64_SAFE_MODULUS:
        red = np.mod(freqs, M)
        acc = np.zeros(len(freqs), dtype=np.int64)
        for j, zj in enumerate(z):
            if zj:
                acc = (acc + red[:, j] * (zj % M)) % M
        return acc
    red = np.mod(freqs, M).astype(object)
    acc = np.zeros(len(freqs), dtype=object)
    for j, zj in enumerate(z):
        acc = (acc + red[:, j] * (zj % M)) % M
    return acc.astype(np.int64)


def lattice_nodes(lattice: Rank1Lattice) -> np.ndarray:
    """Nodes as an (M, d) float array in [0, 1)^d; row 0 is the origin."""
    j = np.arange(lattice.M, dtype=object if lattice.M > _INT64_SAFE_MODULUS else np.int64)
    num = np.mod(np.outer(j, np.array(lattice.z, dtype=j.dtype)), lattice.M)
    return num.astype(np.float64) / lattice.M


def _canonical_nodes(lattice: Rank1Lattice, skip_origin: bool) -> np.ndarray:
    # each node as (denominator, numerators) in lowest terms
    M = lattice.M
    j = np.arange(1 if skip_origin else 0, M, dtype=np.int64)
    num = np.mod(np.outer(j, np.array(lattice.z, dtype=np.int64)), M)
    g = np.gcd.reduce(np.hstack([num, np.full((len(j), 1), M, dtype=np.int64)]), axis=1)
    return np.hstack([(M // g)[:, None], num // g[:, None]])


def _prime_group_key(lattice: Rank1Lattice):
    # for prime M the nonzero multiples of z form a group of order M; scale z
    # so its first nonzero entry is 1 to identify that group
    M, z = lattice.M, lattice.z
    lead = next((v for v in z if v), 0)
    if lead == 0:
        return None
    inv = mod_inverse(lead, M)
    return M, tuple(v * inv % M for v in z)


def mr1l_node_count(mr1l: MultipleRank1Lattice, node_cap: int = DEFAULT_NODE_CAP) -> tuple[int, int]:
    """Return ``(distinct_count, upper_bound)`` with upper bound ``1 - s + sum M``.

    For prime sizes two lattices share nodes beyond the origin only if their
    generating vectors span the same cyclic group, so the count is exact
    without listing nodes. Other sizes are enumerated, limited by
    ``node_cap`` stored integers.
    """
    bound = mr1l.n_rows
    if all(lat.M == 1 or is_prime(lat.M) for lat in mr1l):
        groups = {_prime_group_key(lat) for lat in mr1l if lat.M > 1} - {None}
        return 1 + sum(M - 1 for M, _ in groups), bound
    if sum(mr1l.sizes) * (mr1l.dim + 1) > node_cap:
        raise MemoryError(f"{sum(mr1l.sizes)} nodes of dimension {mr1l.dim} exceed the counting cap {node_cap}")
    if max(mr1l.sizes) > _INT64_SAFE_MODULUS:
        raise OverflowError("distinct node counting supports lattice sizes up to 2**31")
    keys = np.vstack([_canonical_nodes(lat, skip_origin=i > 0) for i, lat in enumerate(mr1l)])
    keys = np.ascontiguousarray(keys)
    view = keys.view(np.dtype((np.void, keys.dtype.itemsize * keys.shape[1])))
    return len(np.unique(view)), bound


def aliasing_free_mask(freqs, z, M: int) -> np.ndarray:
    """Boolean mask of frequencies whose residue ``k . z mod M`` no other frequency shares."""
    r = inner_residues(freqs, z, M)
    _, inverse, counts = np.unique(r, return_inverse=True, return_counts=True)
    return counts[inverse.ravel()] == 1


def aliasing_free_set(freqs, lattice: Rank1Lattice) -> np.ndarray:
    """Indices of the frequencies that do not alias on ``lattice``."""
    return np.flatnonzero(aliasing_free_mask(freqs, lattice.z, lattice.M))


def save_lattice(path, mr1l: MultipleRank1Lattice) -> None:
    Path(path).write_text(json.dumps(mr1l.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_lattice(path) -> MultipleRank1Lattice:
    return MultipleRank1Lattice.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
