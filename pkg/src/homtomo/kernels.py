"""Fock-basis quadrature kernels for lossy homodyne detection.

A detector with efficiency ``eta`` sees the quadrature statistics of the
n-th Fock state as a binomial mixture of the squared oscillator
wavefunctions psi_k**2 for k <= n.  ``coefficient_a`` evaluates that
mixture kernel at a single Fock index, ``coefficient_table`` precomputes
it for a whole batch of outcomes (one row per event, one column per Fock
index), which is the workhorse input of the likelihood iteration.

Conventions: psi_k is the real harmonic-oscillator position
eigenfunction with unit norm and vacuum variance 1/2, so
psi_0(y) = pi**-0.25 * exp(-y**2 / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

# Hard cap on the Fock index, bounding precomputation cost.  Raise it only
# for states with mean photon number well above a hundred.
DEFAULT_FOCK_CAP = 256

# Above this order the binomial * power prefactors span enough orders of
# magnitude that they are accumulated in log space.
_LOG_SPACE_ORDER = 30

# Row chunk for table construction, keeps peak memory at ~100 MB even for
# multi-million-event batches.
_TABLE_CHUNK = 1 << 18


def _check_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"detector efficiency must lie in (0, 1], got {eta}")


def _check_cap(k: int, cap: int) -> None:
    if k < 0:
        raise ValueError(f"Fock index must be nonnegative, got {k}")
    if k > cap:
        raise ValueError(f"Fock index {k} exceeds the configured cap {cap}")


def _wavefunction_table(y: np.ndarray, n_max: int, out: np.ndarray | None = None) -> np.ndarray:
    """psi_k(y) for k = 0..n_max-1, shape (len(y), n_max).

    Three-term recurrence psi_k = sqrt(2/k) y psi_{k-1} - sqrt((k-1)/k) psi_{k-2};
    normalized functions stay bounded, so the recurrence neither overflows
    nor loses the leading digits for any k up to the cap.
    """
    y = np.asarray(y, dtype=np.float64)
    table = out if out is not None else np.empty((y.size, n_max))
    table[:, 0] = np.pi ** -0.25 * np.exp(-0.5 * y * y)
    if n_max > 1:
        table[:, 1] = math.sqrt(2.0) * y * table[:, 0]
    for k in range(2, n_max):
        table[:, k] = math.sqrt(2.0 / k) * y * table[:, k - 1] - math.sqrt((k - 1) / k) * table[:, k - 2]
    return table


def fock_wavefunction(k: int, y, *, cap: int = DEFAULT_FOCK_CAP):
    """Oscillator eigenfunction psi_k at quadrature value(s) y.

    Args:
        k: Fock index, 0 <= k <= cap.
        y: scalar or array of quadrature values.

    Returns:
        psi_k(y), scalar if y is scalar.
    """
    _check_cap(k, cap)
    arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if not np.all(np.isfinite(arr)):
        raise ValueError("quadrature values must be finite")
    val = _wavefunction_table(arr.ravel(), k + 1)[:, k]
    if np.ndim(y) == 0:
        return float(val[0])
    return val.reshape(np.shape(y))


@lru_cache(maxsize=64)
def _binomial_weights(n: int, eta: float) -> np.ndarray:
    """Mixing weights C(n,k) (1-eta)^(n-k) eta^k for k = 0..n."""
    if n <= _LOG_SPACE_ORDER:
        return np.array([math.comb(n, k) * (1.0 - eta) ** (n - k) * eta**k for k in range(n + 1)])
    k = np.arange(n + 1, dtype=np.float64)
    log_w = (
        gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)
        + k * math.log(eta) + (n - k) * math.log1p(-eta)
    )
    return np.exp(log_w)


@lru_cache(maxsize=16)
def _mixing_matrix(n_max: int, eta: float) -> np.ndarray:
    """Lower-triangular matrix B with B[n, k] = C(n,k) (1-eta)^(n-k) eta^k."""
    b = np.zeros((n_max, n_max))
    for n in range(n_max):
        b[n, : n + 1] = _binomial_weights(n, eta)
    return b


def coefficient_a(n: int, y, eta: float, *, cap: int = DEFAULT_FOCK_CAP):
    """Event-rate kernel of the n-th Fock state under detection efficiency eta.

    Sum over k of C(n,k) (1-eta)^(n-k) eta^k psi_k(y)^2: a probability
    density in y that integrates to one for every n.  At eta = 1 it is
    exactly psi_n(y)^2 (the single k = n term; the degenerate powers are
    never evaluated).

    Args:
        n: Fock index.
        y: scalar or array of (shifted) quadrature outcomes.
        eta: detector efficiency in (0, 1].
    """
    _check_eta(eta)
    _check_cap(n, cap)
    arr = np.atleast_1d(np.asarray(y, dtype=np.float64)).ravel()
    psi = _wavefunction_table(arr, n + 1)
    if eta == 1.0:
        val = psi[:, n] ** 2
    else:
        val = (psi * psi) @ _binomial_weights(n, eta)
    if np.isscalar(y) or np.ndim(y) == 0:
        return float(val[0])
    return val.reshape(np.shape(y))


@dataclass
class CoefficientTable:
    """Precomputed kernel values A_n(y_i) for a batch of outcomes.

    values[i, n] is the mixture kernel of Fock index n at outcome y_i.
    Rows whose kernel values all underflow to zero cannot contribute to
    any likelihood and are flagged in ``excluded``.
    """

    values: np.ndarray          # (events, n_max), nonnegative
    eta: float
    excluded: np.ndarray = field(repr=False)  # bool mask, True = underflowed row

    @property
    def n_max(self) -> int:
        return self.values.shape[1]

    @property
    def n_events(self) -> int:
        return self.values.shape[0]

    @property
    def n_excluded(self) -> int:
        return int(self.excluded.sum())

    def active_values(self) -> np.ndarray:
        """Rows that take part in the likelihood (contiguous copy if needed)."""
        if self.n_excluded == 0:
            return self.values
        return np.ascontiguousarray(self.values[~self.excluded])


def coefficient_table(
    outcomes,
    n_max: int,
    eta: float,
    *,
    dtype=np.float64,
    cap: int = DEFAULT_FOCK_CAP,
) -> CoefficientTable:
    """Tabulate coefficient_a(n, y_i, eta) for all events and n < n_max.

    Args:
        outcomes: 1-D sequence of (shifted) quadrature outcomes y_i.
        n_max: exclusive Fock truncation (columns 0..n_max-1).
        eta: detector efficiency in (0, 1].
        dtype: storage dtype of the table; float32 halves memory and
            iteration time for very large event batches.
    """
    _check_eta(eta)
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    _check_cap(n_max - 1, cap)
    y = np.asarray(outcomes, dtype=np.float64).ravel()
    if y.size == 0:
        raise ValueError("outcomes must be non-empty")
    if not np.all(np.isfinite(y)):
        raise ValueError("outcomes must be finite")

    mix_t = None if eta == 1.0 else np.ascontiguousarray(_mixing_matrix(n_max, eta).T)
    values = np.empty((y.size, n_max), dtype=dtype)
    excluded = np.zeros(y.size, dtype=bool)
    for start in range(0, y.size, _TABLE_CHUNK):
        stop = min(start + _TABLE_CHUNK, y.size)
        psi = _wavefunction_table(y[start:stop], n_max)
        np.square(psi, out=psi)
        block = psi if mix_t is None else psi @ mix_t
        values[start:stop] = block
        excluded[start:stop] = block.sum(axis=1) == 0.0
    return CoefficientTable(values=values, eta=float(eta), excluded=excluded)
