"""Least-squares circles on S^2 and the principal circle frame.

The fit is doubly iterative: the outer loop maps the data to the tangent
plane at the current center with the log map, the inner loop fits a planar
circle there (Levenberg-Marquardt on the radius-profiled objective), and the
planar center is pushed back to the sphere with the exponential map.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConvergenceError, DegenerateDataError, DomainError
from .manifold import (
    ANTIPODAL_TOL, exp_map_s2, geodesic_mean_s1, log_map_s2, rotation_to_north,
    sphere_distance, unit_vector,
)
from .suppression import (
    DEFAULT_THRESHOLD, CircleKind, Estimator, RatioEstimate, estimate_ratio,
)

HALF_PI = 0.5 * np.pi


class FitMode(str, Enum):
    SMALL = "small"
    GREAT = "great"


class Initializer(str, Enum):
    FIRST_POINT = "first-point"
    COVARIANCE = "covariance"


@dataclass(frozen=True)
class CircleOnSphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", unit_vector(self.center).reshape(3))
        if not 0.0 < self.radius < np.pi:
            raise ValueError(f"circle radius must lie in (0, pi), got {self.radius}")

    def canonical(self) -> "CircleOnSphere":
        """Same point set with radius at most pi/2."""
        if self.radius > HALF_PI:
            return CircleOnSphere(-self.center, np.pi - self.radius)
        return self

    def residuals(self, points) -> np.ndarray:
        """Signed geodesic distances ``rho(x, c) - r`` (positive away from the center)."""
        return np.atleast_1d(sphere_distance(np.atleast_2d(points), self.center)) - self.radius

    def point_at(self, longitude, frame=None) -> np.ndarray:
        """Points on the circle at the given longitudes around the center."""
        R = rotation_to_north(self.center) if frame is None else frame
        lon = np.asarray(longitude, dtype=float)
        s = np.sin(self.radius)
        y = np.stack([s * np.cos(lon), s * np.sin(lon), np.full_like(lon, np.cos(self.radius))], axis=-1)
        return y @ R

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True)
class FitConfig:
    mode: FitMode = FitMode.SMALL
    tol: float = 1e-9
    max_outer: int = 100
    max_inner: int = 100
    damping: float = 1e-3
    init: Initializer = Initializer.FIRST_POINT


@dataclass
class FitReport:
    circle: CircleOnSphere
    residuals: np.ndarray
    sum_sq_residuals: float
    outer_iterations: int
    converged: bool
    mode: FitMode = FitMode.SMALL
    objective_trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "circle": self.circle.to_dict(),
            "residuals": self.residuals.tolist(),
            "sum_sq_residuals": self.sum_sq_residuals,
            "outer_iterations": self.outer_iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class PrincipalCircles:
    """First principal circle, principal circle mean and the decision taken."""

    delta1: CircleOnSphere
    mean_u: np.ndarray
    kind: CircleKind
    ratio: RatioEstimate | None = None

    @property
    def delta2(self) -> CircleOnSphere:
        """Great circle through ``mean_u`` and the center of ``delta1``."""
        n = np.cross(self.delta1.center, self.mean_u)
        return CircleOnSphere(n / np.linalg.norm(n), HALF_PI)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "delta1": self.delta1.to_dict(),
            "mean_u": self.mean_u.tolist(),
            "ratio": None if self.ratio is None else self.ratio.to_dict(),
        }


# ---------------------------------------------------------------------------
# planar subproblem
# ---------------------------------------------------------------------------

def _profiled(pts, v, great):
    d = pts - v
    dist = np.hypot(d[:, 0], d[:, 1])
    safe = np.where(dist > 0, dist, 1.0)
    a = d / safe[:, None]
    a[dist == 0] = 0.0
    r = HALF_PI if great else dist.mean()
    e = dist - r
    J = -a if great else -(a - a.mean(axis=0))
    return e, J, r


def optimal_radius(pts2d, v) -> float:
    """Best radius for a planar circle centered at ``v``: the mean distance."""
    d = np.asarray(pts2d, dtype=float) - np.asarray(v, dtype=float)
    return float(np.hypot(d[:, 0], d[:, 1]).mean())


def planar_circle_fit(pts2d, mode: FitMode | str = FitMode.SMALL, v0=None,
                      damping: float = 1e-3, max_iter: int = 100):
    """Least-squares planar circle ``min sum (|x_i - v| - r)^2``.

    The radius is profiled out as the mean distance to ``v`` (or held at
    ``pi/2`` for great circles) and ``v`` is found by Levenberg-Marquardt
    with Marquardt's diagonal scaling.  Returns ``(v, r)``.
    """
    pts = np.asarray(pts2d, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("planar circle fit needs at least 3 points in the plane")
    great = FitMode(mode) is FitMode.GREAT
    v = np.zeros(2) if v0 is None else np.asarray(v0, dtype=float).copy()
    e, J, r = _profiled(pts, v, great)
    f = float(e @ e)
    f_start = f
    lam = damping
    converged = False
    for _ in range(max_iter):
        g = J.T @ e
        A = J.T @ J
        if f < 1e-30 or np.linalg.norm(g) <= 1e-15 * (1.0 + np.sqrt(f)):
            converged = True
            break
        diag = np.maximum(np.diag(A), 1e-12 * max(np.trace(A), 1e-300))
        while True:
            try:
                step = np.linalg.solve(A + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None:
                v_new = v - step
                e_new, J_new, r_new = _profiled(pts, v_new, great)
                f_new = float(e_new @ e_new)
                if f_new < f:
                    break
            lam *= 10.0
            if lam > 1e16:
                break
        if lam > 1e16:
            # no descent possible along any damped direction: stationary to rounding
            converged = True
            break
        small_step = np.linalg.norm(step) <= 1e-15 * (1.0 + np.linalg.norm(v))
        small_gain = f - f_new <= 1e-16 * f
        v, e, J, r, f = v_new, e_new, J_new, r_new, f_new
        lam = max(lam / 10.0, 1e-12)
        if small_step or small_gain:
            converged = True
            break
    if not converged and not f < f_start:
        raise ConvergenceError("planar circle fit failed to reduce its objective")
    return v, float(r)


# ---------------------------------------------------------------------------
# sphere fit
# ---------------------------------------------------------------------------

def _objective(X, c, great):
    rho = sphere_distance(X, c)
    r = HALF_PI if great else rho.mean()
    e = rho - r
    return float(e @ e)


def _covariance_init(X):
    cov = np.cov(X.T)
    _, vecs = np.linalg.eigh(cov)
    c = vecs[:, 0]
    if c @ X.mean(axis=0) < 0:
        c = -c
    return c / np.linalg.norm(c)


def _outer_loop(X, c, cfg):
    great = cfg.mode is FitMode.GREAT
    f = _objective(X, c, great)
    trace = [f]
    converged = False
    it = 0
    for it in range(1, cfg.max_outer + 1):
        if np.max(sphere_distance(X, c)) > np.pi - ANTIPODAL_TOL:
            raise DomainError("a data point is antipodal to the current center")
        v, _ = planar_circle_fit(log_map_s2(c, X), cfg.mode, damping=cfg.damping, max_iter=cfg.max_inner)
        if np.linalg.norm(v) < cfg.tol:
            converged = True
            break
        step = v
        while True:
            c_new = exp_map_s2(c, step)
            c_new = c_new / np.linalg.norm(c_new)
            f_new = _objective(X, c_new, great)
            if f_new <= f:
                break
            step = 0.5 * step
            if np.linalg.norm(step) < cfg.tol:
                c_new = None
                break
        if c_new is None:
            # no decrease along the planar step: a local minimum to tolerance
            converged = True
            break
        c, f = c_new, f_new
        trace.append(f)
    return c, trace, it, converged


def fit_circle(points, mode: FitMode | str | None = None, cfg: FitConfig | None = None,
               init_center=None) -> FitReport:
    """Least-squares small or great circle through points on S^2.

    The outer loop starts from the first data point unless ``cfg.init``
    selects the smallest-eigenvalue eigenvector of the sample covariance,
    or ``init_center`` is given.  Small-circle results are returned with
    radius at most ``pi/2``.
    """
    cfg = cfg or FitConfig()
    if mode is not None:
        cfg = replace(cfg, mode=FitMode(mode))
    X = unit_vector(np.atleast_2d(points))
    if X.shape[0] < 3:
        raise ValueError(f"circle fit needs at least 3 points, got {X.shape[0]}")
    if np.max(sphere_distance(X, X[0])) < 1e-12:
        raise DegenerateDataError("all points coincide")

    if init_center is not None:
        c0 = unit_vector(init_center)
    elif cfg.init is Initializer.COVARIANCE:
        c0 = _covariance_init(X)
    else:
        c0 = X[0]
    try:
        c, trace, iters, converged = _outer_loop(X, c0, cfg)
    except DomainError:
        if cfg.init is Initializer.COVARIANCE and init_center is None:
            raise
        c, trace, iters, converged = _outer_loop(X, _covariance_init(X), cfg)

    rho = sphere_distance(X, c)
    if cfg.mode is FitMode.GREAT:
        circle = CircleOnSphere(c, HALF_PI)
    else:
        circle = CircleOnSphere(c, float(np.clip(rho.mean(), 1e-15, np.pi - 1e-15))).canonical()
    res = circle.residuals(X)
    return FitReport(circle, res, float(res @ res), iters, converged, cfg.mode, trace)


def project_to_circle(x, circle: CircleOnSphere) -> np.ndarray:
    """Nearest point of ``circle`` to ``x``; undefined at ``x = +-c``."""
    x = unit_vector(x)
    c, r = circle.center, circle.radius
    rho = np.atleast_1d(sphere_distance(np.atleast_2d(x), c))
    s = np.sin(rho)
    if np.any(s < 1e-12):
        raise DomainError("projection onto a circle is undefined at its center or antipode")
    out = (np.atleast_2d(x) * np.sin(r) + np.outer(np.sin(rho - r), c)) / s[:, None]
    out = out / np.linalg.norm(out, axis=1, keepdims=True)
    return out.reshape(x.shape)


def circle_longitudes(points, circle: CircleOnSphere, frame=None) -> np.ndarray:
    """Longitudes of points about the circle's center (the projection keeps them)."""
    R = rotation_to_north(circle.center) if frame is None else frame
    y = np.atleast_2d(unit_vector(points)) @ R.T
    if np.any(np.hypot(y[:, 0], y[:, 1]) < 1e-12):
        raise DomainError("projection onto a circle is undefined at its center or antipode")
    return np.arctan2(y[:, 1], y[:, 0])


def principal_circle_mean(points, circle: CircleOnSphere) -> np.ndarray:
    """Point of ``circle`` minimizing squared arc length to the projected data."""
    R = rotation_to_north(circle.center)
    lon = geodesic_mean_s1(circle_longitudes(points, circle, R))
    return circle.point_at(lon, R)


def fit_principal_circles(points, cfg: FitConfig | None = None,
                          threshold: float = DEFAULT_THRESHOLD,
                          estimator: Estimator | str = Estimator.ROBUST,
                          force: CircleKind | str | None = None) -> PrincipalCircles:
    """Principal circles with data-driven suppression of overfitted small circles.

    A small circle is fitted first; radii to its center give the
    ``mu / sigma`` estimate, and a ratio below ``threshold`` swaps in the
    best great circle.  ``force`` skips the decision.
    """
    cfg = cfg or FitConfig()
    X = unit_vector(np.atleast_2d(points))
    small = fit_circle(X, FitMode.SMALL, cfg)
    ratio = estimate_ratio(sphere_distance(X, small.circle.center), estimator)
    if force is not None:
        kind = CircleKind(force)
    else:
        kind = CircleKind.SMALL if ratio.ratio >= threshold else CircleKind.GREAT
    circle = small.circle if kind is CircleKind.SMALL else fit_circle(X, FitMode.GREAT, cfg).circle
    return PrincipalCircles(circle, principal_circle_mean(X, circle), kind, ratio)
