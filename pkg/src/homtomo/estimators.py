"""Estimator-style front end over the functional reconstruction pipeline.

Both classes follow the scikit-learn protocol: hyperparameters in the
constructor, fit(X) ingesting homodyne records, predict(X) evaluating the
reconstruction at phase-space points.  X for fit is either a Dataset or a
plain (n_events, 2) array of (theta, x) rows — in the latter case the
detector efficiency comes from the `eta` hyperparameter.  X for predict
is an (n_points, 2) array of (q, p) rows.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .fbp import FbpConfig, fbp_point
from .mle import ReconstructionConfig, reconstruct_points
from .simulate import Dataset


def _ingest_records(X, eta):
    if isinstance(X, Dataset):
        return X
    arr = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if arr.shape[1] != 2:
        raise ValueError(f"records must have 2 columns (theta, x), got {arr.shape[1]}")
    return Dataset(arr[:, 0], arr[:, 1], eta, "")


def _ingest_points(X):
    arr = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if arr.shape[1] != 2:
        raise ValueError(f"points must have 2 columns (q, p), got {arr.shape[1]}")
    return arr


class MaximumLikelihoodWigner(BaseEstimator):
    """Wigner-function values by constrained per-point EM estimation.

    Parameters mirror ReconstructionConfig; `threads` caps the number of
    worker processes for multi-point predictions (0 = one per CPU).
    Failed points predict NaN rather than raising.
    """

    def __init__(self, eta=1.0, n_max=40, max_iters=10_000, loglik_tol=0.0, threads=0):
        self.eta = eta
        self.n_max = n_max
        self.max_iters = max_iters
        self.loglik_tol = loglik_tol
        self.threads = threads

    def fit(self, X, y=None):
        self.data_ = _ingest_records(X, self.eta)
        self.n_events_ = len(self.data_)
        return self

    def predict(self, X):
        check_is_fitted(self)
        points = _ingest_points(X)
        cfg = ReconstructionConfig(n_max=self.n_max, max_iters=self.max_iters,
                                   loglik_tol=self.loglik_tol)
        rows = reconstruct_points(self.data_, points, cfg, threads=self.threads)
        return np.array([row.wigner for row in rows])


class FilteredBackProjection(BaseEstimator):
    """Linear back-projection baseline with a sharp band limit `cutoff`.

    On lossy records this estimates the blurred s-ordered object, not the
    Wigner function; see fbp_expected_limit for the matching analytic
    curve.
    """

    def __init__(self, eta=1.0, cutoff=6.0):
        self.eta = eta
        self.cutoff = cutoff

    def fit(self, X, y=None):
        self.data_ = _ingest_records(X, self.eta)
        self.n_events_ = len(self.data_)
        return self

    def predict(self, X):
        check_is_fitted(self)
        points = _ingest_points(X)
        cfg = FbpConfig(cutoff=self.cutoff)
        return np.array([fbp_point(self.data_, q, p, cfg) for q, p in points])
