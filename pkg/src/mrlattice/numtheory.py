"""Primes, primality and collision-free lattice sizes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_frequencies

__all__ = [
    "PrimeSet",
    "is_prime",
    "next_prime",
    "is_collision_free",
    "collision_free_primes",
    "mod_inverse",
    "prime_range",
]

MAX_PRIME_ARG = 2**62

# Witnesses proven sufficient for every n < 3.3e24 (Sorenson & Webster).
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
_SMALL_PRIMES = _MR_WITNESSES


def is_prime(m: int) -> bool:
    """Deterministic Miller-Rabin test, exact for all 64-bit integers."""
    m = int(m)
    if m < 2:
        return False
    for p in _SMALL_PRIMES:
        if m % p == 0:
            return m == p
    d = m - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, m)
        if x == 1 or x == m - 1:
            continue
        for _ in range(r - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    n = int(n)
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n >= MAX_PRIME_ARG:
        raise OverflowError(f"next_prime argument {n} exceeds 2**62")
    if n < 2:
        return 2
    m = n + 1 if n % 2 == 0 else n + 2
    while not is_prime(m):
        m += 2
    return m


def prime_range(start: int, stop: int) -> list[int]:
    """Primes p with start <= p < stop, by a plain sieve."""
    if stop <= 2:
        return []
    sieve = np.ones(stop, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(stop**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.flatnonzero(sieve) if p >= start]


def mod_inverse(a: int, M: int) -> int:
    """Multiplicative inverse of ``a`` modulo the prime ``M``."""
    a = int(a) % int(M)
    if a == 0:
        raise ValueError(f"{a} has no inverse modulo {M}")
    return pow(a, -1, int(M))


def _unique_rows(rows: np.ndarray) -> int:
    rows = np.ascontiguousarray(rows)
    view = rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1])))
    return len(np.unique(view))


def is_collision_free(freqs, M: int) -> bool:
    """True iff the componentwise reduction ``k mod M`` is injective on ``freqs``."""
    M = int(M)
    if M < 2:
        raise ValueError(f"modulus must be >= 2, got {M}")
    freqs = check_frequencies(freqs)
    if len(freqs) < 2:
        return True
    spread = int((freqs.max(axis=0) - freqs.min(axis=0)).max())
    if M > spread:
        return True
    return _unique_rows(np.mod(freqs, M)) == len(freqs)


@dataclass(frozen=True)
class PrimeSet:
    """The ``n`` smallest collision-free primes above ``lam``."""

    primes: tuple[int, ...]
    lam: float
    n: int = field(default=1)

    def __iter__(self):
        return iter(self.primes)

    def __len__(self):
        return len(self.primes)

    def __getitem__(self, i):
        return self.primes[i]


def collision_free_primes(freqs, lam: float, n: int = 1, exclude=()) -> PrimeSet:
    """Return the ``n`` smallest primes ``p > lam`` with ``|I mod p| = |I|``.

    Primes listed in ``exclude`` are skipped (used when lattice sizes must be
    pairwise distinct).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    freqs = check_frequencies(freqs)
    exclude = set(int(e) for e in exclude)
    primes: list[int] = []
    p = int(np.floor(lam))
    while len(primes) < n:
        p = next_prime(p)
        if p in exclude:
            continue
        if is_collision_free(freqs, p):
            primes.append(p)
    return PrimeSet(tuple(primes), float(lam), n)
