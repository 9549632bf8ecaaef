"""Scikit-learn style wrapper around construction and transforms."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_coefficients, check_frequencies
from .construct import ConstructionParams, construct
from .transform import evaluate, reconstruct_direct, reconstruct_peeling
from .verify import check_reconstruction_property

__all__ = ["LatticeSampler"]


class LatticeSampler(TransformerMixin, BaseEstimator):
    """Sampling scheme for trigonometric polynomials with a known frequency set.

    ``fit`` takes the frequency array (one row per frequency) and builds the
    lattices. ``transform`` maps coefficient vectors, shape ``(n, T)``, to
    samples; ``inverse_transform`` recovers the coefficients.

    Parameters
    ----------
    algorithm : int, default=5
        Construction strategy, 1 to 7.
    c, delta, n, C, max_rounds :
        See :class:`~mrlattice.construct.ConstructionParams`.
    random_state : int or None
        Seed for the lattice draws.
    """

    def __init__(self, algorithm=5, c=2.0, delta=0.5, n=1, C=2.0, max_rounds=100, random_state=None):
        self.algorithm = algorithm
        self.c = c
        self.delta = delta
        self.n = n
        self.C = C
        self.max_rounds = max_rounds
        self.random_state = random_state

    def fit(self, X, y=None):
        freqs = check_frequencies(X, allow_duplicates=False)
        params = ConstructionParams(self.c, self.delta, self.n, self.C, self.random_state, self.max_rounds)
        report = construct(int(self.algorithm), freqs, params)
        cover = report.per_lattice_cover
        covered = report.covered
        if covered is None:
            aliasing = check_reconstruction_property(freqs, report.mr1l)
            cover, covered = aliasing.per_lattice, aliasing.covered
        self.freqs_ = freqs
        self.report_ = report
        self.lattice_ = report.mr1l
        self.cover_ = cover
        self.covered_ = bool(covered)
        self.n_features_in_ = freqs.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "lattice_")
        coeffs = check_coefficients(X, len(self.freqs_))
        return evaluate(coeffs, self.freqs_, self.lattice_)

    def inverse_transform(self, X):
        check_is_fitted(self, "lattice_")
        if not self.covered_:
            raise ValueError("the fitted lattices do not certify reconstruction for this frequency set")
        if self.report_.peeling is not None:
            return reconstruct_peeling(X, self.freqs_, self.lattice_, self.report_.peeling)
        return reconstruct_direct(X, self.freqs_, self.lattice_, self.cover_)

    def roundtrip_error(self, X) -> float:
        """Largest relative error of ``inverse_transform(transform(X))``."""
        X = np.atleast_2d(check_coefficients(X, len(self.freqs_)))
        back = np.atleast_2d(self.inverse_transform(self.transform(X)))
        return float(np.max(np.abs(back - X)) / np.max(np.abs(X)))
