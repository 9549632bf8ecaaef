"""Input validation helpers shared across modules."""

import numpy as np
from sklearn.utils import check_array


def check_frequencies(freqs, allow_duplicates=True) -> np.ndarray:
    """Return ``freqs`` as a C-contiguous int64 array of shape (T, d)."""
    if isinstance(freqs, np.ndarray) and freqs.dtype == np.int64 and freqs.ndim == 2:
        arr = np.ascontiguousarray(freqs)
    else:
        arr = np.asarray(freqs)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        arr = check_array(arr, dtype=None, ensure_2d=True)
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(arr, 1), 0)):
                raise ValueError("frequencies must be integers")
        arr = np.ascontiguousarray(arr, dtype=np.int64)
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"need at least one frequency of dimension >= 1, got shape {arr.shape}")
    if not allow_duplicates:
        view = arr.view(np.dtype((np.void, arr.dtype.itemsize * arr.shape[1])))
        _, first, counts = np.unique(view, return_index=True, return_counts=True)
        if np.any(counts > 1):
            dup = int(np.sort(first[counts > 1])[0])
            raise ValueError(f"duplicate frequency {arr[dup].tolist()} at index {dup}")
    return arr


def check_coefficients(coeffs, n_freqs: int) -> np.ndarray:
    """Complex coefficient vector (T,) or batch (n, T)."""
    arr = np.asarray(coeffs, dtype=np.complex128)
    if arr.ndim not in (1, 2) or arr.shape[-1] != n_freqs:
        raise ValueError(f"expected coefficients of trailing length {n_freqs}, got shape {arr.shape}")
    return arr
