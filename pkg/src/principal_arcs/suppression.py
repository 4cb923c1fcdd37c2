"""Small-circle versus great-circle decision from folded-normal radii.

Distances ``r_i = rho(x_i, c)`` from a fitted circle's center behave like
``|mu + xi_i|`` with ``xi_i ~ N(0, sigma^2)``.  A large ``mu / sigma`` means
the data really cluster along the circle; a small one means they cluster
around its center and the small circle is an overfit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np
from numba import njit
from scipy import special
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateDataError, DomainError

# 75% quantile of the standard normal distribution
Q3_STD_NORMAL = 0.6744897501960817
DEFAULT_THRESHOLD = 2.0
# numpy quantile method: linear interpolation between order statistics at
# plotting positions k / (n + 1) (type 6); "linear" gives type 7
DEFAULT_QUANTILE = "weibull"


class Estimator(str, Enum):
    ROBUST = "robust"
    EM = "em"


class CircleKind(str, Enum):
    SMALL = "small-circle"
    GREAT = "great-circle"


@dataclass(frozen=True)
class RatioEstimate:
    mu_hat: float
    sigma_hat: float
    ratio: float
    method: Estimator
    degenerate: bool = False  # sigma_hat == 0, ratio reported as +inf

    def to_dict(self) -> dict:
        return {
            "mu_hat": self.mu_hat,
            "sigma_hat": self.sigma_hat,
            "ratio": self.ratio if np.isfinite(self.ratio) else "inf",
            "method": self.method.value,
            "degenerate": self.degenerate,
        }


@dataclass
class EMTrace:
    """Per-iteration ``(mu, sigma^2, log-likelihood)``; entry 0 is the start."""

    iterations: list = field(default_factory=list)
    responsibilities: np.ndarray | None = None
    converged: bool = False


@dataclass(frozen=True)
class GofReport:
    v_stat: float
    p_value: float
    r_g: float
    r_c: float
    n: int

    def to_dict(self) -> dict:
        return {"v_stat": self.v_stat, "p_value": self.p_value, "r_g": self.r_g, "r_c": self.r_c, "n": self.n}


def _radii(radii, min_n: int) -> np.ndarray:
    r = np.asarray(radii, dtype=float).reshape(-1)
    if r.size < min_n:
        raise ValueError(f"need at least {min_n} radii, got {r.size}")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("radii must be finite and nonnegative")
    return r


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------

def robust_ratio(radii, quantile_method: str = DEFAULT_QUANTILE) -> RatioEstimate:
    """Median and upper-quartile spread, ignoring the folded lower half.

    ``mu = med(r)`` and ``sigma = (Q3(r) - med(r)) / Q3(Phi)``.  Quantiles
    interpolate linearly between order statistics placed at probabilities
    ``k / (n + 1)``; any numpy ``method`` name can be passed instead.
    """
    r = _radii(radii, 4)
    med, q3 = (float(q) for q in np.quantile(r, [0.5, 0.75], method=quantile_method))
    sigma = (q3 - med) / Q3_STD_NORMAL
    if sigma <= 0.0:
        return RatioEstimate(med, 0.0, float("inf"), Estimator.ROBUST, degenerate=True)
    return RatioEstimate(med, sigma, med / sigma, Estimator.ROBUST)


def robust_ratio_batch(samples, quantile_method: str = DEFAULT_QUANTILE) -> np.ndarray:
    """Robust ratio for each row of a ``(reps, n)`` array."""
    R = np.asarray(samples, dtype=float)
    med, q3 = np.quantile(R, [0.5, 0.75], axis=1, method=quantile_method)
    sigma = (q3 - med) / Q3_STD_NORMAL
    with np.errstate(divide="ignore"):
        return np.where(sigma > 0, med / np.where(sigma > 0, sigma, 1.0), np.inf)


def folded_normal_loglik(radii, mu: float, sigma2: float) -> float:
    """Observed-data log-likelihood of the folded normal."""
    r = np.asarray(radii, dtype=float)
    s = np.sqrt(sigma2)
    a = -0.5 * ((r - mu) / s) ** 2
    b = -0.5 * ((r + mu) / s) ** 2
    return float(np.sum(np.logaddexp(a, b)) - r.size * (np.log(s) + 0.5 * np.log(2.0 * np.pi)))


def _tanh_series(n_terms: int) -> np.ndarray:
    """Odd Taylor coefficients of tanh from ``T' = 1 - T^2``, in exact arithmetic."""
    t = [Fraction(0)] * (2 * n_terms + 1)
    t[1] = Fraction(1)
    for n in range(1, 2 * n_terms - 1):
        conv = sum((t[i] * t[n - i] for i in range(n + 1)), Fraction(0))
        t[n + 1] = -conv / (n + 1)
    return np.array([float(t[2 * k + 1]) for k in range(n_terms)])


# |x| bound where the truncated series is exact to rounding: terms shrink like (2/pi)^(2k)
_SERIES_LIMIT = 1.0
_TANH_SERIES = _tanh_series(44)


@njit(cache=True)
def _em_kernel(r, mu, s2, tol, max_iter, coeffs, limit, record):
    """EM iterations for one sample; returns ``(mu, s2, iters, status, history)``.

    The M-step for ``mu`` is ``mean(tanh(mu r / s2) r)``.  While every
    ``mu r / s2`` stays below ``limit`` that mean equals a power series in
    ``mu / s2`` over even moments of ``r``, which makes the slow approach
    to ``mu = 0`` cheap without changing the iterates.
    status: 1 converged, 0 iteration cap, -1 variance collapsed.
    """
    n = r.size
    nc = coeffs.size
    m2 = 0.0
    rmax = 0.0
    for i in range(n):
        m2 += r[i] * r[i]
        if r[i] > rmax:
            rmax = r[i]
    m2 /= n
    # even moments of r / rmax, so high powers cannot overflow
    moments = np.zeros(nc)
    if rmax > 0.0:
        for i in range(n):
            rr = (r[i] / rmax) ** 2
            p = rr
            for k in range(nc):
                moments[k] += p
                p *= rr
        for k in range(nc):
            moments[k] /= n
    hist = np.empty((max_iter + 1 if record else 1, 2))
    hist[0, 0] = mu
    hist[0, 1] = s2
    status = 0
    it = 0
    while it < max_iter:
        gain = mu / s2
        x = gain * rmax
        if abs(x) < limit:
            x2 = x * x
            acc = 0.0
            xp = x
            for k in range(nc):
                acc += coeffs[k] * xp * moments[k]
                xp *= x2
            mu_new = acc * rmax
        else:
            acc = 0.0
            for i in range(n):
                acc += np.tanh(gain * r[i]) * r[i]
            mu_new = acc / n
        s2_new = m2 - mu_new * mu_new
        it += 1
        if s2_new <= 0.0:
            status = -1
            break
        done = abs(mu_new - mu) < tol and abs(s2_new - s2) < tol
        mu = mu_new
        s2 = s2_new
        if record:
            hist[it, 0] = mu
            hist[it, 1] = s2
        if done:
            status = 1
            break
    return mu, s2, it, status, hist[: it + 1] if record else hist


def _em_start(r):
    mu = float(np.mean(r))
    s2 = float(np.var(r, ddof=1))
    if s2 <= 0.0:
        raise DegenerateDataError("radii have zero sample variance")
    return mu, s2


def _run_em(r, tol, max_iter, record):
    mu, s2 = _em_start(r)
    out = _em_kernel(np.ascontiguousarray(r, dtype=np.float64), mu, s2, float(tol), int(max_iter),
                     _TANH_SERIES, _SERIES_LIMIT, record)
    if out[3] == -1:
        raise DegenerateDataError("EM variance estimate collapsed to zero")
    return out


def em_folded_normal(radii, tol: float = 1e-10, max_iter: int = 100_000):
    """Maximum likelihood ``(mu, sigma^2)`` of a folded normal by EM.

    Starts from the sample mean and variance and stops once both parameters
    move by less than ``tol``.  Returns the estimate and an :class:`EMTrace`.
    """
    r = _radii(radii, 2)
    mu, s2, _, status, hist = _run_em(r, tol, max_iter, True)
    ll = np.empty(hist.shape[0])
    for lo in range(0, hist.shape[0], 4096):
        h = hist[lo:lo + 4096]
        sd = np.sqrt(h[:, 1])
        a = -0.5 * ((r[None, :] - h[:, :1]) / sd[:, None]) ** 2
        b = -0.5 * ((r[None, :] + h[:, :1]) / sd[:, None]) ** 2
        ll[lo:lo + 4096] = np.sum(np.logaddexp(a, b), axis=1) - r.size * (np.log(sd) + 0.5 * np.log(2.0 * np.pi))
    trace = EMTrace(
        iterations=[(float(m), float(v), float(l)) for (m, v), l in zip(hist, ll)],
        responsibilities=0.5 * (1.0 + np.tanh(mu * r / s2)),
        converged=status == 1,
    )
    sigma = float(np.sqrt(s2))
    return RatioEstimate(float(mu), sigma, float(mu) / sigma, Estimator.EM), trace


def em_estimate(radii, tol: float = 1e-10, max_iter: int = 100_000) -> RatioEstimate:
    """Same estimate as :func:`em_folded_normal` without recording the trace."""
    r = _radii(radii, 2)
    mu, s2, _, _, _ = _run_em(r, tol, max_iter, False)
    sigma = float(np.sqrt(s2))
    return RatioEstimate(float(mu), sigma, float(mu) / sigma, Estimator.EM)


def em_ratio_batch(samples, tol: float = 1e-10, max_iter: int = 100_000) -> np.ndarray:
    """EM ratio ``mu / sigma`` for each row of a ``(reps, n)`` array."""
    R = np.asarray(samples, dtype=float)
    out = np.empty(R.shape[0])
    for i, row in enumerate(R):
        mu, s2, _, _, _ = _run_em(row, tol, max_iter, False)
        out[i] = mu / np.sqrt(s2)
    return out


def estimate_ratio(radii, method: Estimator | str = Estimator.ROBUST) -> RatioEstimate:
    if Estimator(method) is Estimator.ROBUST:
        return robust_ratio(radii)
    return em_estimate(radii)


def decide_circle_kind(radii, threshold: float = DEFAULT_THRESHOLD,
                       method: Estimator | str = Estimator.ROBUST) -> CircleKind:
    """Keep the small circle when the estimated ``mu / sigma`` reaches ``threshold``."""
    est = estimate_ratio(radii, method)
    return CircleKind.SMALL if est.ratio >= threshold else CircleKind.GREAT


# ---------------------------------------------------------------------------
# radial mode analysis
# ---------------------------------------------------------------------------

def _normal_pdf(z):
    return np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)


def conditional_density_wrapped(r, mu: float, sigma: float, k_max: int = 0,
                                truncated: bool = False):
    """Unnormalized section of the radial density along a ray.

    This is the wrapped radial density divided by ``r`` (length-biased
    sampling), summed over wraps ``k = 0..k_max``.  With ``truncated=True``
    only the single unfolded term ``phi((r - mu)/sigma)`` is kept.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("the radial section has a pole at r = 0")
    if truncated:
        total = _normal_pdf((r - mu) / sigma)
    else:
        total = np.zeros_like(r)
        for k in range(k_max + 1):
            total = total + _normal_pdf((r + 2 * np.pi * k - mu) / sigma) \
                + _normal_pdf((r - 2 * np.pi * k + mu) / sigma)
    return total / r


def _log_slope_gain(r, mu, sigma, k_max, truncated):
    """``r * d/dr log f_R(r)``; the section has a stationary point where this is 1."""
    terms = [(mu, 1.0)] if truncated else []
    if not truncated:
        for k in range(k_max + 1):
            terms += [(mu - 2 * np.pi * k, 1.0), (-mu + 2 * np.pi * k, 1.0)]
    num = 0.0
    den = 0.0
    for shift, w in terms:
        z = (r - shift) / sigma
        p = w * _normal_pdf(z)
        num = num - z / sigma * p
        den = den + p
    return r * num / den


def _max_gain(mu, sigma, k_max, truncated):
    upper = np.pi if not truncated else max(np.pi, 2 * mu)
    grid = np.linspace(upper * 1e-4, upper, 2001)
    vals = _log_slope_gain(grid, mu, sigma, k_max, truncated)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(lambda x: -_log_slope_gain(x, mu, sigma, k_max, truncated),
                          bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(-res.fun, vals[i])


def has_nonzero_mode(ratio: float, mu: float = 1.0, k_max: int = 5, truncated: bool = False) -> bool:
    """Whether the radial section has a local maximum away from ``r = 0``."""
    return _max_gain(mu, mu / ratio, k_max, truncated) > 1.0


def critical_ratio_wrapped(mu: float = 1.0, k_max: int = 5, truncated: bool = False,
                           xtol: float = 1e-10) -> float:
    """Smallest ``mu / sigma`` for which the radial section has a nonzero mode.

    ``mu`` fixes the circle radius (it should lie in ``(0, pi/2)``); the
    answer is essentially independent of it because the wrap terms are
    negligible there.
    """
    f = lambda q: _max_gain(mu, mu / q, k_max, truncated) - 1.0
    return float(brentq(f, 1.2, 4.0, xtol=xtol))


def truncated_modes(mu: float, sigma: float):
    """``(r_plus, r_minus)`` stationary points of the truncated section, or None.

    ``r_plus`` is a local maximum and ``r_minus`` a local minimum whenever
    ``mu > 2 sigma``; they merge at ``mu / 2`` when ``mu == 2 sigma``.
    """
    disc = (mu - 2 * sigma) * (mu + 2 * sigma)
    if disc < 0:
        return None
    root = np.sqrt(disc)
    return (mu + root) / 2.0, (mu - root) / 2.0


# ---------------------------------------------------------------------------
# goodness of fit
# ---------------------------------------------------------------------------

def f_survival(x: float, d1: float, d2: float) -> float:
    """``P(F_{d1,d2} >= x)`` through the regularized incomplete beta function."""
    if x <= 0:
        return 1.0
    return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))


def goodness_of_fit(r_g: float, r_c: float, n: int) -> GofReport:
    """F test of a small-circle fit against a great-circle fit.

    ``r_g`` and ``r_c`` are residual sums of squares of the great and small
    circle fits; ``V = (n - 3)(r_g - r_c) / r_c`` is referred to ``F_{1,n-3}``.
    """
    if n <= 3:
        raise ValueError("goodness of fit needs n > 3")
    if not r_c > 0:
        raise ValueError("small-circle residual sum of squares must be positive")
    if r_g < r_c:
        raise ValueError("great-circle residual sum of squares is below the small-circle one")
    v = (n - 3) * (r_g - r_c) / r_c
    return GofReport(float(v), f_survival(v, 1, n - 3), float(r_g), float(r_c), int(n))
