"""Constrained maximum-likelihood estimation of displaced-Fock weights.

For a phase-space point (q, p) the homodyne records are shifted so that
the point becomes the origin; the outcome density is then a mixture of
the fixed kernels A_n with unknown weights rho_n that form a probability
distribution.  The weights are estimated by an EM fixed-point iteration,

    rho_m <- (1/N) sum_i A_m(y_i) rho_m / sum_n A_n(y_i) rho_n,

which keeps every weight nonnegative, preserves the simplex exactly, and
never decreases the likelihood.  The Wigner value at the point is the
alternating sum (1/pi) sum_n (-1)^n rho_n, automatically confined to
[-1/pi, 1/pi].

The per-event accumulation is the hot loop (millions of events times
thousands of iterations), so it is compiled with numba; accumulators stay
in double precision even when the kernel table is stored in float32.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .kernels import coefficient_table
from .simulate import Dataset

_F32_TABLE_EVENTS = 200_000  # store kernel tables in float32 above this size
_TOL_CHECK_EVERY = 50
# Dying mixture components decay geometrically and would drift through the
# float64 subnormal range for thousands of iterations, where the products
# values * w turn the compiled sweep 10-100x slower.  Pinning live weights at
# this floor keeps every product normal (1e-250 times the smallest float32
# kernel value is still ~1e-295) while staying far below anything that can
# show up in a Wigner value; exact zeros are left alone.
_WEIGHT_FLOOR = 1e-250

WIGNER_BOUND = 1.0 / math.pi


class EstimationError(RuntimeError):
    """Raised when a likelihood evaluation or EM update is impossible."""


# -- domain types ------------------------------------------------------------

@dataclass(frozen=True)
class FockWeights:
    """Displaced-Fock weight vector: nonnegative, summing to one."""

    w: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.w, dtype=np.float64)
        if arr.ndim != 1 or len(arr) < 1:
            raise ValueError("weights must be a 1-d vector")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one within 1e-12")
        object.__setattr__(self, "w", arr)

    @classmethod
    def flat(cls, n_max):
        return cls(np.full(n_max, 1.0 / n_max))

    @property
    def n_max(self):
        return len(self.w)


@dataclass(frozen=True)
class ReconstructionConfig:
    """Knobs of the per-point estimation.

    loglik_tol = 0 disables early stopping (pure iteration budget, the
    default); when positive, the run stops once the likelihood gain over
    the previous 50 iterations falls below the tolerance.  init is either
    'flat' or a FockWeights to start from.
    """

    n_max: int = 40
    max_iters: int = 10_000
    loglik_tol: float = 0.0
    init: object = "flat"
    trace_every: int = 10

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.loglik_tol < 0.0:
            raise ValueError("loglik_tol must be >= 0")
        if self.init != "flat" and not isinstance(self.init, FockWeights):
            raise ValueError("init must be 'flat' or a FockWeights")

    def initial_weights(self):
        if isinstance(self.init, FockWeights):
            if self.init.n_max != self.n_max:
                raise ValueError("custom init length differs from n_max")
            return self.init.w.copy()
        return np.full(self.n_max, 1.0 / self.n_max)


@dataclass
class EstimateDiagnostics:
    iterations_run: int
    final_loglik: float
    loglik_trace: list = field(default_factory=list)
    excluded_events: int = 0


# -- compiled inner loops ----------------------------------------------------

@njit(cache=True, fastmath=True)
def _mixture_loglik(values, w):
    """sum_i ln(sum_n values[i, n] w[n]); nan flags a nonpositive mixture."""
    total = 0.0
    for i in range(values.shape[0]):
        denom = 0.0
        for n in range(values.shape[1]):
            denom += values[i, n] * w[n]
        if denom <= 0.0:
            return np.nan
        total += np.log(denom)
    return total


@njit(cache=True, fastmath=True)
def _em_accumulate(values, w, acc):
    """One E-step sweep: add each event's normalized responsibilities into
    acc and return the log-likelihood of the incoming weights (without the
    constant -N term).  Serial on purpose — bit-reproducible regardless of
    how many workers run elsewhere."""
    total = 0.0
    for i in range(values.shape[0]):
        denom = 0.0
        for n in range(values.shape[1]):
            denom += values[i, n] * w[n]
        if denom <= 0.0:
            return np.nan
        total += np.log(denom)
        inv = 1.0 / denom
        for n in range(values.shape[1]):
            acc[n] += values[i, n] * w[n] * inv
    return total


# -- operations --------------------------------------------------------------

def shift_outcomes(data, q, p):
    """Outcomes re-centered on the phase-space point:
    y_i = x_i - sqrt(eta) (q cos theta_i + p sin theta_i)."""
    proj = q * np.cos(data.thetas) + p * np.sin(data.thetas)
    return data.xs - math.sqrt(data.eta) * proj


def log_likelihood(w, table):
    """ln-likelihood of the weights against a kernel table, including the
    constant -N simplex term, N counting the non-excluded events."""
    if table.n_max != len(w.w):
        raise ValueError("weight length does not match table")
    values = table.active_values()
    total = _mixture_loglik(values, w.w)
    if not np.isfinite(total):
        raise EstimationError("nonpositive mixture density for some event")
    return float(total) - values.shape[0]


def em_step(w, table):
    """One EM update of the weights (the fixed-point map applied once)."""
    if table.n_max != len(w.w):
        raise ValueError("weight length does not match table")
    values = table.active_values()
    acc = np.zeros(table.n_max)
    total = _em_accumulate(values, w.w, acc)
    if not np.isfinite(total):
        raise EstimationError("nonpositive mixture density for some event")
    out = acc / acc.sum()
    out[(out > 0.0) & (out < _WEIGHT_FLOOR)] = _WEIGHT_FLOOR
    return FockWeights(out)


def wigner_from_weights(w):
    """Wigner value from the weights: (1/pi) sum_n (-1)^n rho_n, clipped to
    the physical bounds against last-bit rounding."""
    alt = float(np.sum(w.w[::2]) - np.sum(w.w[1::2]))
    return float(np.clip(alt / math.pi, -WIGNER_BOUND, WIGNER_BOUND))


def estimate_weights(data, q, p, cfg=None):
    """Full per-point estimation: shift records, tabulate kernels, run EM.

    Returns (FockWeights, EstimateDiagnostics).  Events whose kernel row
    underflows to zero are excluded (counted in the diagnostics); if that
    removes everything, estimation fails.
    """
    cfg = cfg or ReconstructionConfig()
    y = shift_outcomes(data, q, p)
    dtype = np.float32 if len(y) >= _F32_TABLE_EVENTS else np.float64
    table = coefficient_table(y, cfg.n_max, data.eta, dtype=dtype)
    if table.n_excluded == len(y):
        raise EstimationError(f"all {len(y)} events excluded by kernel underflow")
    values = table.active_values()
    n_active = values.shape[0]
    w = cfg.initial_weights()
    acc = np.empty(cfg.n_max)
    trace = []
    checkpoint = None
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        acc[:] = 0.0
        total = _em_accumulate(values, w, acc)
        if not np.isfinite(total):
            raise EstimationError("nonpositive mixture density for some event")
        if (iterations - 1) % cfg.trace_every == 0:
            trace.append(float(total) - n_active)
        w = acc / acc.sum()
        w[(w > 0.0) & (w < _WEIGHT_FLOOR)] = _WEIGHT_FLOOR
        if cfg.loglik_tol > 0.0 and iterations % _TOL_CHECK_EVERY == 0:
            if checkpoint is not None and total - checkpoint < cfg.loglik_tol:
                break
            checkpoint = total
    final = _mixture_loglik(values, w)
    if not np.isfinite(final):
        raise EstimationError("nonpositive mixture density for some event")
    trace.append(float(final) - n_active)
    diag = EstimateDiagnostics(
        iterations_run=iterations,
        final_loglik=float(final) - n_active,
        loglik_trace=trace,
        excluded_events=table.n_excluded,
    )
    return FockWeights(w), diag


# -- grid evaluation ---------------------------------------------------------

@dataclass
class GridRow:
    q: float
    p: float
    wigner: float
    iterations: int
    final_loglik: float
    error: str = ""


_WORKER = None


def _grid_worker_init(data, cfg):
    global _WORKER
    _WORKER = (data, cfg)


def _grid_worker_run(point):
    data, cfg = _WORKER
    return _reconstruct_point(data, float(point[0]), float(point[1]), cfg)


def _reconstruct_point(data, q, p, cfg):
    try:
        w, diag = estimate_weights(data, q, p, cfg)
        return GridRow(q, p, wigner_from_weights(w), diag.iterations_run, diag.final_loglik)
    except EstimationError as exc:
        return GridRow(q, p, float("nan"), 0, float("nan"), error=str(exc))


def reconstruct_points(data, points, cfg=None, threads=0):
    """Estimate the Wigner value independently at each (q, p) point.

    Points are independent work units; rows come back in input order no
    matter the execution schedule, and a failed point yields a flagged
    row rather than aborting the batch.
    """
    cfg = cfg or ReconstructionConfig()
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    workers = min(workers, len(points))
    if workers <= 1:
        return [_reconstruct_point(data, float(q), float(p), cfg) for q, p in points]
    with ProcessPoolExecutor(max_workers=workers, initializer=_grid_worker_init,
                             initargs=(data, cfg)) as pool:
        return list(pool.map(_grid_worker_run, points))


def reconstruct_grid(data, grid, cfg=None, threads=0):
    """reconstruct_points over a GridSpec, rows in grid order."""
    return reconstruct_points(data, grid.points(), cfg, threads)
