"""Staged reconstruction plans."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PeelingStage", "PeelingPlan"]


@dataclass(frozen=True)
class PeelingStage:
    """One peeling step.

    The lattices ``lattice_indices`` (a half-open range into the sampling
    scheme) recover the coefficients ``resolved_idx`` once all earlier
    stages have been subtracted from the samples.
    """

    modulus: int | None
    lattice_indices: tuple[int, int]
    resolved_idx: np.ndarray

    def to_dict(self) -> dict:
        return {
            "modulus": self.modulus,
            "lattice_indices": list(self.lattice_indices),
            "resolved_idx": [int(i) for i in self.resolved_idx],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PeelingStage":
        lo, hi = data["lattice_indices"]
        return cls(data.get("modulus"), (int(lo), int(hi)), np.asarray(data["resolved_idx"], dtype=np.int64))


@dataclass(frozen=True)
class PeelingPlan:
    stages: tuple[PeelingStage, ...]
    leftover_idx: int | None = None

    def check(self, n_freqs: int, n_lattices: int) -> None:
        """Raise ``ValueError`` unless the plan partitions ``range(n_freqs)``."""
        seen = np.zeros(n_freqs, dtype=np.int64)
        for st in self.stages:
            lo, hi = st.lattice_indices
            if not 0 <= lo < hi <= n_lattices:
                raise ValueError(f"stage lattice range {st.lattice_indices} outside [0, {n_lattices})")
            if len(st.resolved_idx) and (st.resolved_idx.min() < 0 or st.resolved_idx.max() >= n_freqs):
                raise ValueError("stage resolves an index outside the frequency set")
            np.add.at(seen, st.resolved_idx, 1)
        if self.leftover_idx is not None:
            if not 0 <= self.leftover_idx < n_freqs:
                raise ValueError(f"leftover index {self.leftover_idx} outside the frequency set")
            seen[self.leftover_idx] += 1
        if np.any(seen != 1):
            bad = np.flatnonzero(seen != 1)
            raise ValueError(f"plan does not partition the frequency set; first offending index {int(bad[0])}")

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    def to_dict(self) -> dict:
        return {
            "stages": [st.to_dict() for st in self.stages],
            "leftover_idx": self.leftover_idx,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PeelingPlan":
        left = data.get("leftover_idx")
        return cls(tuple(PeelingStage.from_dict(s) for s in data["stages"]), None if left is None else int(left))
