"""Seeded Monte Carlo generation of homodyne event records.

Events are generated in two stages that mirror the measurement model: an
ideal quadrature value is drawn from the perfect-detection distribution by
inverse-CDF lookup, then detector loss is applied as a Gaussian smear of
mean sqrt(eta) x' and variance (1-eta)/2.  Sampling the ideal distribution
and smearing separately is exact and avoids tabulating a new pdf for every
efficiency value.

Per-phase substreams are derived from (seed, phase index) with
numpy's SeedSequence spawning, so a dataset is reproducible bit for bit no
matter how generation work is scheduled.  The ideal draws consume the
uniform stream only; the loss stage consumes normals afterwards, so
datasets at different eta but the same seed share their underlying ideal
events.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .kernels import _check_eta
from .states import format_state, quadrature_pdf

_SAMPLER_PITCH = 0.005
_SUPPORT_MARGIN = 6.0


@dataclass(frozen=True)
class HomodyneRecord:
    """One homodyne event: detector phase theta and quadrature outcome x."""

    theta: float
    x: float


@dataclass
class Dataset:
    """A homodyne event collection plus the metadata needed to interpret it.

    thetas and xs are parallel arrays (phase-major, draw order within each
    phase).  state_desc is the plain-text state form, eta the detector
    efficiency the records were subjected to.
    """

    thetas: np.ndarray
    xs: np.ndarray
    eta: float
    state_desc: str
    seed: int = 0
    phases: int = 0
    per_phase: int = 0

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        self.xs = np.asarray(self.xs, dtype=np.float64)
        if self.thetas.shape != self.xs.shape or self.thetas.ndim != 1:
            raise ValueError("thetas and xs must be 1-d arrays of equal length")
        if len(self.thetas) == 0:
            raise ValueError("dataset must contain at least one record")
        if not (np.all(np.isfinite(self.thetas)) and np.all(np.isfinite(self.xs))):
            raise ValueError("records must be finite")
        _check_eta(self.eta)

    def __len__(self):
        return len(self.thetas)

    def record(self, i):
        return HomodyneRecord(float(self.thetas[i]), float(self.xs[i]))

    @property
    def records(self):
        """Materialized record list; meant for small datasets and tests."""
        return [self.record(i) for i in range(len(self))]

    @classmethod
    def from_events(cls, events, eta, state_desc="", **meta):
        """Build a dataset from an iterable of (theta, x) pairs."""
        pairs = [(float(t), float(x)) for t, x in events]
        thetas = np.array([t for t, _ in pairs])
        xs = np.array([x for _, x in pairs])
        return cls(thetas, xs, eta, state_desc, **meta)


# -- ideal-quadrature sampling -----------------------------------------------

def _support_halfwidth(spec):
    if spec.kind == "fock":
        return math.sqrt(2.0 * spec.n + 1.0) + _SUPPORT_MARGIN
    if spec.kind == "vacuum":
        return 1.0 + _SUPPORT_MARGIN
    return math.sqrt(2.0) * abs(spec.alpha) + _SUPPORT_MARGIN


@lru_cache(maxsize=256)
def _inverse_cdf_table(spec, theta):
    """Tabulated CDF of the ideal distribution on a uniform grid."""
    half = _support_halfwidth(spec)
    npts = int(math.ceil(2.0 * half / _SAMPLER_PITCH)) + 1
    grid = np.linspace(-half, half, npts)
    density = quadrature_pdf(spec, theta, grid, 1.0)
    cdf = np.concatenate(([0.0], cumulative_trapezoid(density, grid)))
    cdf /= cdf[-1]
    return grid, cdf


def sample_ideal(spec, theta, rng, size=None):
    """Draw perfect-detection quadrature value(s) at phase theta.

    Inverse-CDF sampling with linear interpolation between grid cells;
    returns a scalar when size is None, else an array of that length.
    """
    grid, cdf = _inverse_cdf_table(spec, float(theta))
    u = rng.random(1 if size is None else size)
    x = np.interp(u, cdf, grid)
    return float(x[0]) if size is None else x


def apply_efficiency(x_ideal, eta, rng):
    """Push ideal outcome(s) through a detector of efficiency eta.

    eta = 1 returns the input unchanged without touching the stream; for
    eta < 1 the outcome is sqrt(eta) x' plus Gaussian noise of variance
    (1-eta)/2.
    """
    _check_eta(eta)
    if eta == 1.0:
        return x_ideal
    g = rng.standard_normal(np.shape(x_ideal)) if np.ndim(x_ideal) else rng.standard_normal()
    return math.sqrt(eta) * x_ideal + math.sqrt((1.0 - eta) / 2.0) * g


def simulate(spec, eta, phases, per_phase, seed):
    """Generate a full dataset: per_phase events at each of `phases`
    detector phases uniformly spaced over [0, pi).

    The stream for phase j depends only on (seed, j), so any subset of
    phases can be regenerated independently and the assembled dataset does
    not depend on generation order.
    """
    _check_eta(eta)
    if phases < 1 or per_phase < 1:
        raise ValueError("phases and per_phase must be >= 1")
    children = np.random.SeedSequence(seed).spawn(phases)
    thetas = np.empty(phases * per_phase)
    xs = np.empty(phases * per_phase)
    for j in range(phases):
        rng = np.random.default_rng(children[j])
        theta = j * math.pi / phases
        ideal = sample_ideal(spec, theta, rng, per_phase)
        block = slice(j * per_phase, (j + 1) * per_phase)
        thetas[block] = theta
        xs[block] = apply_efficiency(ideal, eta, rng)
    return Dataset(thetas, xs, eta, format_state(spec),
                   seed=seed, phases=phases, per_phase=per_phase)


# -- histogramming -----------------------------------------------------------

@dataclass
class HistogramResult:
    """Fixed-width histogram of the records near one detector phase."""

    counts: np.ndarray
    edges: np.ndarray
    underflow: int
    overflow: int
    n_selected: int
    empty: bool = field(default=False)


def histogram(data, theta_select, tol, bins, hist_range):
    """Histogram quadrature outcomes of records with |theta - theta_select|
    <= tol into `bins` equal cells over hist_range = (lo, hi).

    Out-of-range outcomes land in the underflow/overflow counters.  An
    empty phase selection is flagged rather than raised.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    lo, hi = float(hist_range[0]), float(hist_range[1])
    if not hi > lo:
        raise ValueError("histogram range must be increasing")
    selected = data.xs[np.abs(data.thetas - theta_select) <= tol]
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(selected, bins=edges)
    return HistogramResult(
        counts=counts.astype(np.int64),
        edges=edges,
        underflow=int(np.sum(selected < lo)),
        overflow=int(np.sum(selected > hi)),
        n_selected=int(selected.size),
        empty=selected.size == 0,
    )
