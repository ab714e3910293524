"""Analytic reference states for homodyne reconstruction experiments.

Provides Fock-basis expansions, ideal and lossy quadrature distributions,
exact Wigner functions and their Gaussian-smeared (s-ordered) relatives for
a small family of pure states: vacuum, Fock states, coherent states and
odd/even superpositions of two coherent amplitudes ("cat" states).

Conventions: the rotated quadrature has vacuum variance 1/2, Wigner
functions integrate to one, and a coherent state alpha is centered at
(sqrt(2) Re alpha, sqrt(2) Im alpha).  The quadrature distribution at
detector phase theta uses the e^{-i n theta} rotation, so a coherent state
produces a Gaussian with mean sqrt(2) Re(alpha e^{-i theta}).
"""

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import eval_genlaguerre, gammaln

from .kernels import DEFAULT_FOCK_CAP, _check_cap, _check_eta, _wavefunction_table

_KINDS = ("vacuum", "fock", "coherent", "cat")
_PARITIES = ("odd", "even")
_SQRT2 = math.sqrt(2.0)


# -- state descriptions ------------------------------------------------------

@dataclass(frozen=True)
class StateSpec:
    """Immutable description of a reference state.

    kind is one of 'vacuum', 'fock', 'coherent', 'cat'.  n is the Fock
    index (fock only), alpha the coherent amplitude (coherent and cat),
    parity selects the odd or even superposition (cat only).
    """

    kind: str
    n: int = 0
    alpha: complex = 0j
    parity: str = ""

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}")
        if self.kind == "fock" and self.n < 0:
            raise ValueError("fock index must be >= 0")
        if self.kind == "cat":
            if abs(self.alpha) == 0.0:
                raise ValueError("cat state requires |alpha| > 0")
            if self.parity not in _PARITIES:
                raise ValueError(f"cat parity must be 'odd' or 'even', got {self.parity!r}")

    @classmethod
    def vacuum(cls):
        return cls("vacuum")

    @classmethod
    def fock(cls, n):
        return cls("fock", n=int(n))

    @classmethod
    def coherent(cls, alpha):
        return cls("coherent", alpha=complex(alpha))

    @classmethod
    def cat(cls, alpha, parity="odd"):
        return cls("cat", alpha=complex(alpha), parity=parity)


def parse_state(text):
    """Parse the plain-text state form used on the command line.

    Grammar: ``vacuum | fock:n | coherent:re,im | cat:re,im,odd|even``.
    """
    head, _, rest = text.strip().partition(":")
    try:
        if head == "vacuum" and not rest:
            return StateSpec.vacuum()
        if head == "fock":
            return StateSpec.fock(int(rest))
        if head == "coherent":
            re, im = (float(tok) for tok in rest.split(","))
            return StateSpec.coherent(complex(re, im))
        if head == "cat":
            re, im, parity = rest.split(",")
            return StateSpec.cat(complex(float(re), float(im)), parity.strip())
    except ValueError as exc:
        raise ValueError(f"cannot parse state {text!r}: {exc}") from exc
    raise ValueError(f"cannot parse state {text!r}")


def format_state(spec):
    """Inverse of parse_state."""
    if spec.kind == "vacuum":
        return "vacuum"
    if spec.kind == "fock":
        return f"fock:{spec.n}"
    if spec.kind == "coherent":
        return f"coherent:{spec.alpha.real!r},{spec.alpha.imag!r}"
    return f"cat:{spec.alpha.real!r},{spec.alpha.imag!r},{spec.parity}"


# -- Fock expansions ---------------------------------------------------------

@dataclass(frozen=True)
class FockExpansion:
    """Truncated Fock-basis coefficient vector of a pure state.

    truncation_tail is the probability weight 1 - sum |c_n|^2 living above
    the truncation; coefficients are not renormalized to hide it.
    """

    coeffs: np.ndarray
    truncation_tail: float

    @property
    def n_max(self):
        return len(self.coeffs)


def _coherent_amplitudes(alpha, n_max):
    """e^{-|a|^2/2} a^n / sqrt(n!) for n = 0..n_max-1, stable at large n."""
    n = np.arange(n_max)
    mod = abs(alpha)
    if mod == 0.0:
        c = np.zeros(n_max, dtype=complex)
        c[0] = 1.0
        return c
    logmag = -0.5 * mod * mod + n * math.log(mod) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * cmath.phase(alpha))


def fock_coefficients(spec, n_max):
    """Expand a state over the first n_max Fock levels.

    Cat states use the analytic normalization of the untruncated
    superposition, so any weight beyond the truncation shows up in
    truncation_tail rather than being silently renormalized away.

    Raises ValueError if a Fock state does not fit below n_max.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    _check_cap(n_max - 1, DEFAULT_FOCK_CAP)
    if spec.kind == "vacuum":
        c = np.zeros(n_max, dtype=complex)
        c[0] = 1.0
    elif spec.kind == "fock":
        if spec.n >= n_max:
            raise ValueError(f"fock:{spec.n} does not fit in a basis truncated at n_max={n_max}")
        c = np.zeros(n_max, dtype=complex)
        c[spec.n] = 1.0
    elif spec.kind == "coherent":
        c = _coherent_amplitudes(spec.alpha, n_max)
    else:
        sgn = -1.0 if spec.parity == "odd" else 1.0
        norm = math.sqrt(2.0 + sgn * 2.0 * math.exp(-2.0 * abs(spec.alpha) ** 2))
        c = 2.0 * _coherent_amplitudes(spec.alpha, n_max) / norm
        keep = np.arange(n_max) % 2 == (1 if spec.parity == "odd" else 0)
        c[~keep] = 0.0
    tail = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    return FockExpansion(coeffs=c, truncation_tail=tail)


# -- quadrature distributions ------------------------------------------------

@lru_cache(maxsize=16)
def _gh_rule(m):
    nodes, weights = hermgauss(m)
    return nodes, weights


def _bare_hermite_table(y, n_max):
    """Hermite functions with the Gaussian stripped: h_n = psi_n e^{y^2/2}."""
    h = np.empty(y.shape + (n_max,))
    h[..., 0] = math.pi ** -0.25
    if n_max > 1:
        h[..., 1] = _SQRT2 * y * h[..., 0]
    for k in range(2, n_max):
        h[..., k] = math.sqrt(2.0 / k) * y * h[..., k - 1] - math.sqrt((k - 1) / k) * h[..., k - 2]
    return h


def quadrature_pdf(spec, theta, x, eta=1.0, n_max=None):
    """Probability density of the quadrature record at detector phase theta.

    For eta = 1 this is |sum_n c_n e^{-i n theta} psi_n(x)|^2; for eta < 1
    the ideal density is smeared with the detection kernel of mean
    sqrt(eta) x' and variance (1-eta)/2.  The smearing integral is a
    Gaussian times a polynomial, so a Gauss-Hermite rule with at least
    n_max points evaluates it exactly (no grid convolution needed).

    x may be a scalar or an array; returns matching shape.
    """
    _check_eta(eta)
    if n_max is None:
        n_max = _auto_n_max(spec)
    phased = fock_coefficients(spec, n_max).coeffs * np.exp(-1j * np.arange(n_max) * theta)
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if not np.all(np.isfinite(arr)):
        raise ValueError("quadrature values must be finite")
    if eta == 1.0:
        amp = _wavefunction_table(arr.ravel(), n_max).astype(complex) @ phased
        out = np.abs(amp) ** 2
    else:
        nodes, weights = _gh_rule(max(n_max, 24))
        shifted = math.sqrt(eta) * arr.ravel()[:, None] + math.sqrt(1.0 - eta) * nodes[None, :]
        amp = _bare_hermite_table(shifted, n_max) @ phased
        out = np.exp(-arr.ravel() ** 2) / math.sqrt(math.pi) * (np.abs(amp) ** 2 @ weights)
    out = out.reshape(np.shape(x)) if not scalar else float(out[0])
    return out


def _auto_n_max(spec):
    """Truncation that keeps the neglected weight far below 1e-10."""
    if spec.kind == "vacuum":
        return 1
    if spec.kind == "fock":
        return spec.n + 1
    mean = abs(spec.alpha) ** 2
    return max(40, int(math.ceil(mean + 12.0 * math.sqrt(mean + 1.0))))


# -- Wigner and s-ordered quasidistributions ---------------------------------

def _broadcast_qp(q, p):
    q_arr = np.asarray(q, dtype=np.float64)
    p_arr = np.asarray(p, dtype=np.float64)
    scalar = q_arr.ndim == 0 and p_arr.ndim == 0
    q_arr, p_arr = np.broadcast_arrays(np.atleast_1d(q_arr), np.atleast_1d(p_arr))
    if not (np.all(np.isfinite(q_arr)) and np.all(np.isfinite(p_arr))):
        raise ValueError("phase-space points must be finite")
    return q_arr, p_arr, scalar


def squasi_true(spec, q, p, s=0.0):
    """s-ordered quasidistribution: the Wigner function convolved with an
    isotropic Gaussian of per-axis variance (-s)/2.  s = 0 is the Wigner
    function itself; s > 0 (deconvolution) is refused.

    All shipped states are finite mixtures of Gaussians, Gaussian-times-
    Laguerre and Gaussian-times-cosine terms, each of which convolves in
    closed form, so no numerical integration is involved.
    """
    if s > 0.0:
        raise ValueError("ordering parameter s must be <= 0")
    q_arr, p_arr, scalar = _broadcast_qp(q, p)
    lam = 1.0 - s
    if spec.kind in ("vacuum", "coherent"):
        q0 = _SQRT2 * spec.alpha.real
        p0 = _SQRT2 * spec.alpha.imag
        out = np.exp(-((q_arr - q0) ** 2 + (p_arr - p0) ** 2) / lam) / (math.pi * lam)
    elif spec.kind == "fock":
        r2 = q_arr * q_arr + p_arr * p_arr
        if s == 0.0:
            out = (-1.0) ** spec.n / math.pi * np.exp(-r2) * eval_genlaguerre(spec.n, 0, 2.0 * r2)
        elif s == -1.0:
            # Laguerre argument diverges exactly at s = -1; the limit is the
            # Husimi form (r^2/2)^n / n!
            out = np.exp(-r2 / lam) / (math.pi * lam) * (r2 / 2.0) ** spec.n / math.factorial(spec.n)
        else:
            out = ((s + 1.0) / (s - 1.0)) ** spec.n / (math.pi * lam) * np.exp(-r2 / lam) \
                * eval_genlaguerre(spec.n, 0, 2.0 * r2 / (1.0 - s * s))
    else:
        a, b = spec.alpha.real, spec.alpha.imag
        sgn = -1.0 if spec.parity == "odd" else 1.0
        n2 = 1.0 / (2.0 + sgn * 2.0 * math.exp(-2.0 * abs(spec.alpha) ** 2))
        lobe_p = np.exp(-((q_arr - _SQRT2 * a) ** 2 + (p_arr - _SQRT2 * b) ** 2) / lam)
        lobe_m = np.exp(-((q_arr + _SQRT2 * a) ** 2 + (p_arr + _SQRT2 * b) ** 2) / lam)
        # interference fringe cos(k.r) with |k|^2 = 8|alpha|^2; the blur
        # damps it by exp(-|k|^2 v / (2 lam)) and stretches its period
        damp = math.exp(-8.0 * abs(spec.alpha) ** 2 * (-s / 2.0) / (2.0 * lam))
        cross = 2.0 * damp * np.exp(-(q_arr**2 + p_arr**2) / lam) \
            * np.cos(2.0 * _SQRT2 * (a * p_arr - b * q_arr) / lam)
        out = n2 / (math.pi * lam) * (lobe_p + lobe_m + sgn * cross)
    return float(out[0]) if scalar else out


def wigner_true(spec, q, p):
    """Exact Wigner function of the state at phase-space point(s) (q, p)."""
    return squasi_true(spec, q, p, 0.0)


def wigner_from_expansion(expansion, q, p):
    """Wigner function assembled term by term from a Fock expansion.

    Uses the Laguerre closed form for the |m><n| cross terms.  Slower than
    the state-specific forms in wigner_true but works for any coefficient
    vector; the two paths agreeing is a strong internal consistency check.
    """
    c = expansion.coeffs
    q_arr, p_arr, scalar = _broadcast_qp(q, p)
    r2 = q_arr * q_arr + p_arr * p_arr
    gauss = np.exp(-r2)
    out = np.zeros_like(q_arr)
    for n in range(len(c)):
        if c[n] == 0.0 and not np.any(c[n:]):
            break
        for m in range(n, len(c)):
            rho = c[m] * np.conj(c[n])
            if rho == 0.0:
                continue
            d = m - n
            pref = (-1.0) ** n * math.exp(0.5 * (d * math.log(2.0) + float(gammaln(n + 1) - gammaln(m + 1))))
            lag = eval_genlaguerre(n, d, 2.0 * r2)
            term = pref * (q_arr - 1j * p_arr) ** d * gauss * lag
            # m > n contributes together with its conjugate partner
            out += (2.0 if d else 1.0) * np.real(rho * term)
    out /= math.pi
    return float(out[0]) if scalar else out


def fbp_expected_limit(spec, q, p, eta):
    """Infinite-data limit of linear back-projection applied to records
    collected at detector efficiency eta: a rescaled s-ordered
    quasidistribution with s = -(1-eta)/eta."""
    _check_eta(eta)
    s = -(1.0 - eta) / eta
    scale = 1.0 / math.sqrt(eta)
    return squasi_true(spec, np.asarray(q) * scale, np.asarray(p) * scale, s) / eta
