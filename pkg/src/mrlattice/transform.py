"""Fast evaluation and reconstruction on multiple rank-1 lattices.

Sign convention: the forward DFT uses ``exp(-2j*pi*j*k/M)`` without
scaling. Evaluation is the conjugate (inverse-sign) transform and
reconstruction divides by ``M``.

Sample vectors follow the stacked layout of the block Fourier matrix: all
``M_1`` values of the first lattice, then ``M_l - 1`` values (``j >= 1``)
of every further lattice. The omitted ``j = 0`` node of a later lattice is
the origin, whose value is the first entry of the vector.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_coefficients, check_frequencies
from .lattice import MultipleRank1Lattice, Rank1Lattice, aliasing_free_mask, inner_residues
from .plan import PeelingPlan

__all__ = [
    "dft_arbitrary_length",
    "evaluate_single_lattice",
    "evaluate",
    "adjoint",
    "reconstruct_direct",
    "reconstruct_peeling",
    "UncoveredFrequencyError",
]


class UncoveredFrequencyError(ValueError):
    """A frequency has no aliasing-free lattice to be read from."""


def _chirp(M: int, length: int, sign: float) -> np.ndarray:
    m = np.arange(length, dtype=np.int64)
    # m**2 mod 2M keeps the phase argument exact for large m
    sq = (m % (2 * M)) ** 2 % (2 * M) if M < 2**30 else np.array([(int(v) ** 2) % (2 * M) for v in m])
    return np.exp(sign * 1j * np.pi * sq / M)


def dft_arbitrary_length(v, axis: int = -1) -> np.ndarray:
    """Unscaled forward DFT of any length via the Bluestein chirp-z identity.

    The length-``M`` transform becomes a circular convolution of
    power-of-two length ``L >= 2M - 1``.
    """
    v = np.asarray(v, dtype=np.complex128)
    v = np.moveaxis(v, axis, -1)
    M = v.shape[-1]
    if M == 0:
        raise ValueError("DFT of an empty vector")
    if M == 1:
        return np.moveaxis(v.copy(), -1, axis)
    L = 1 << (2 * M - 2).bit_length()
    down = _chirp(M, M, -1.0)
    a = np.zeros(v.shape[:-1] + (L,), dtype=np.complex128)
    a[..., :M] = v * down
    b = np.zeros(L, dtype=np.complex128)
    up = np.conj(down)
    b[:M] = up
    b[L - M + 1 :] = up[1:][::-1]
    conv = np.fft.ifft(np.fft.fft(a, axis=-1) * np.fft.fft(b), axis=-1)[..., :M]
    return np.moveaxis(conv * down, -1, axis)


def _inverse_sign_dft(v) -> np.ndarray:
    return np.conj(dft_arbitrary_length(np.conj(v)))


def _scatter(coeffs: np.ndarray, bins: np.ndarray, M: int) -> np.ndarray:
    acc = np.zeros(coeffs.shape[:-1] + (M,), dtype=np.complex128)
    # np.add.at accumulates sequentially in frequency order
    np.add.at(np.moveaxis(acc, -1, 0), bins, np.moveaxis(coeffs, -1, 0))
    return acc


def evaluate_single_lattice(coeffs, freqs, lattice: Rank1Lattice) -> np.ndarray:
    """Values of the polynomial at all ``M`` nodes of ``lattice``."""
    freqs = check_frequencies(freqs)
    coeffs = check_coefficients(coeffs, len(freqs))
    bins = inner_residues(freqs, lattice.z, lattice.M)
    return _inverse_sign_dft(_scatter(coeffs, bins, lattice.M))


def evaluate(coeffs, freqs, mr1l: MultipleRank1Lattice) -> np.ndarray:
    """Samples in stacked block layout; duplicate physical nodes are kept."""
    freqs = check_frequencies(freqs)
    coeffs = check_coefficients(coeffs, len(freqs))
    blocks = []
    for i, lat in enumerate(mr1l):
        vals = evaluate_single_lattice(coeffs, freqs, lat)
        blocks.append(vals if i == 0 else vals[..., 1:])
    return np.concatenate(blocks, axis=-1)


def _full_blocks(samples, mr1l: MultipleRank1Lattice, fill_origin: bool) -> list[np.ndarray]:
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.ndim not in (1, 2) or samples.shape[-1] != mr1l.n_rows:
        raise ValueError(f"expected samples of trailing length {mr1l.n_rows}, got shape {samples.shape}")
    origin = samples[..., :1] if fill_origin else np.zeros_like(samples[..., :1])
    out = []
    start = 0
    for i, length in enumerate(mr1l.block_lengths):
        block = samples[..., start : start + length]
        out.append(block.copy() if i == 0 else np.concatenate([origin, block], axis=-1))
        start += length
    return out


def adjoint(samples, freqs, mr1l: MultipleRank1Lattice) -> np.ndarray:
    """Apply the conjugate transpose of the block Fourier matrix."""
    freqs = check_frequencies(freqs)
    blocks = _full_blocks(samples, mr1l, fill_origin=False)
    out = np.zeros(blocks[0].shape[:-1] + (len(freqs),), dtype=np.complex128)
    for lat, y in zip(mr1l, blocks):
        out += dft_arbitrary_length(y)[..., inner_residues(freqs, lat.z, lat.M)]
    return out


def reconstruct_direct(samples, freqs, mr1l: MultipleRank1Lattice, cover) -> np.ndarray:
    """Recover coefficients by reading each one from a lattice it does not alias on.

    ``cover[l]`` lists the frequency indices that are aliasing-free on lattice
    ``l``; the union must be the whole set.
    """
    freqs = check_frequencies(freqs)
    if len(cover) != len(mr1l):
        raise ValueError(f"cover has {len(cover)} entries for {len(mr1l)} lattices")
    T = len(freqs)
    source = np.full(T, -1, dtype=np.int64)
    for l in range(len(mr1l) - 1, -1, -1):
        source[np.asarray(cover[l], dtype=np.int64)] = l
    if np.any(source < 0):
        raise UncoveredFrequencyError(f"frequency index {int(np.flatnonzero(source < 0)[0])} is not covered")
    blocks = _full_blocks(samples, mr1l, fill_origin=True)
    out = np.zeros(blocks[0].shape[:-1] + (T,), dtype=np.complex128)
    for l, lat in enumerate(mr1l):
        idx = np.flatnonzero(source == l)
        if len(idx):
            spectrum = dft_arbitrary_length(blocks[l])
            out[..., idx] = spectrum[..., inner_residues(freqs[idx], lat.z, lat.M)] / lat.M
    return out


def reconstruct_peeling(samples, freqs, mr1l: MultipleRank1Lattice, plan: PeelingPlan) -> np.ndarray:
    """Stage-by-stage recovery with subtraction of already recovered terms."""
    freqs = check_frequencies(freqs)
    T = len(freqs)
    plan.check(T, len(mr1l))
    work = _full_blocks(samples, mr1l, fill_origin=True)
    origin = work[0][..., 0].copy()
    out = np.zeros(work[0].shape[:-1] + (T,), dtype=np.complex128)
    remaining = np.ones(T, dtype=bool)
    for st in plan.stages:
        lo, hi = st.lattice_indices
        rem_idx = np.flatnonzero(remaining)
        pos = np.searchsorted(rem_idx, st.resolved_idx)
        todo = np.ones(len(st.resolved_idx), dtype=bool)
        for l in range(lo, hi):
            if not todo.any():
                break
            lat = mr1l[l]
            free = aliasing_free_mask(freqs[rem_idx], lat.z, lat.M)[pos]
            take = todo & free
            if take.any():
                idx = st.resolved_idx[take]
                spectrum = dft_arbitrary_length(work[l])
                out[..., idx] = spectrum[..., inner_residues(freqs[idx], lat.z, lat.M)] / lat.M
                todo &= ~take
        if todo.any():
            bad = int(st.resolved_idx[todo][0])
            raise UncoveredFrequencyError(
                f"frequency index {bad} aliases on every lattice of its stage; plan does not fit the lattice"
            )
        remaining[st.resolved_idx] = False
        resolved = out[..., st.resolved_idx]
        sub = freqs[st.resolved_idx]
        for l in range(hi, len(mr1l)):
            work[l] -= evaluate_single_lattice(resolved, sub, mr1l[l])
        origin -= resolved.sum(axis=-1)
    if plan.leftover_idx is not None:
        # single remaining term: its coefficient is the residual value at the origin
        out[..., plan.leftover_idx] = origin
    return out
