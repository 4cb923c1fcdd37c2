"""Flattening maps from each manifold component into a Euclidean block.

S^2 components are flattened with the principal circles as axes, either by
the projection map (signed arc length along ``delta1`` against the residual)
or by a conformal map (stereographic projection followed by a Moebius
transformation).  Every other component, and S^2 under PGA, uses the log map
at the component's geodesic mean.

Every map sends its anchor to the origin.  For the S^2 maps ``delta1`` lands
on the first axis and ``delta2`` on the second.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .circles import CircleOnSphere, PrincipalCircles
from .errors import DomainError, SchemaError
from .manifold import (
    Component, Kind, exp_north, geodesic_mean_s2, log_north, rotation_to_north,
    signed_angle, sphere_distance, unit_vector, wrap_angle,
)
from .suppression import CircleKind

POLE_TOL = 1e-12


class MapKind(str, Enum):
    PROJECTION = "projection"
    CONFORMAL = "conformal"
    TANGENT = "tangent"


def frame_rotation(center, u) -> np.ndarray:
    """Rotation taking ``center`` to ``e3`` and ``u`` onto the prime meridian (x > 0)."""
    R = rotation_to_north(center)
    y = R @ unit_vector(u)
    phi = np.arctan2(y[1], y[0])
    cz, sz = np.cos(phi), np.sin(phi)
    Rz = np.array([[cz, sz, 0.0], [-sz, cz, 0.0], [0.0, 0.0, 1.0]])
    return Rz @ R


def _as_points(x):
    arr = unit_vector(x)
    return np.atleast_2d(arr), arr.ndim == 1


class _CircleFrame:
    """Shared state of the two principal-circle maps."""

    kind: MapKind
    dim = 2

    def __init__(self, circles: PrincipalCircles):
        self.circles = circles
        self.radius = float(circles.delta1.radius)
        self.rotation = frame_rotation(circles.delta1.center, circles.mean_u)

    @property
    def anchor(self) -> np.ndarray:
        return self.circles.mean_u

    def _rotated(self, x):
        pts, single = _as_points(x)
        return pts @ self.rotation.T, single

    def _unrotate(self, y, single):
        out = y @ self.rotation
        out = out / np.linalg.norm(out, axis=-1, keepdims=True)
        return out[0] if single else out

    def _base_dict(self) -> dict:
        c = self.circles
        return {
            "kind": self.kind.value,
            "center": c.delta1.center.tolist(),
            "radius": c.delta1.radius,
            "mean_u": c.mean_u.tolist(),
            "circle_kind": c.kind.value,
            "ratio": None if c.ratio is None else c.ratio.to_dict(),
        }


class ProjectionMap(_CircleFrame):
    """``x -> (sin(r) * longitude from u, colatitude - r)`` about the circle center."""

    kind = MapKind.PROJECTION

    def forward(self, x) -> np.ndarray:
        y, single = self._rotated(x)
        s = np.hypot(y[:, 0], y[:, 1])
        if np.any(s < POLE_TOL):
            raise DomainError("projection map is undefined at the circle center and its antipode")
        lon = np.arctan2(y[:, 1], y[:, 0])
        colat = np.arctan2(s, y[:, 2])
        out = np.stack([np.sin(self.radius) * lon, colat - self.radius], axis=1)
        return out[0] if single else out

    def inverse(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        lon = p[:, 0] / np.sin(self.radius)
        colat = p[:, 1] + self.radius
        if np.any(np.abs(lon) > np.pi) or np.any(colat <= 0.0) or np.any(colat >= np.pi):
            raise DomainError("point lies outside the image of the projection map")
        sc = np.sin(colat)
        y = np.stack([sc * np.cos(lon), sc * np.sin(lon), np.cos(colat)], axis=1)
        return self._unrotate(y, single)

    def to_dict(self) -> dict:
        return self._base_dict()


class ConformalMap(_CircleFrame):
    """Stereographic projection from ``-c`` then ``alpha*i*(z - u*)/(-z - u*)``.

    ``u*`` is the image of the principal circle mean, a positive real number
    once the frame is rotated.  ``alpha`` is a free scale, usually set by
    :meth:`calibrated` so the mapped sample's total variance equals the
    sample's geodesic variance.
    """

    kind = MapKind.CONFORMAL

    def __init__(self, circles: PrincipalCircles, alpha: float = 1.0):
        super().__init__(circles)
        if not alpha > 0:
            raise ValueError("conformal scale must be positive")
        self.alpha = float(alpha)
        self.u_star = np.tan(self.radius / 2.0)

    def forward(self, x) -> np.ndarray:
        y, single = self._rotated(x)
        den = 1.0 + y[:, 2]
        if np.any(den < POLE_TOL):
            raise DomainError("conformal map is undefined at the stereographic pole")
        z = (y[:, 0] + 1j * y[:, 1]) / den
        mob = -z - self.u_star
        if np.any(np.abs(mob) < POLE_TOL):
            raise DomainError("point is sent to infinity by the conformal map")
        w = self.alpha * 1j * (z - self.u_star) / mob
        out = np.stack([w.real, w.imag], axis=1)
        return out[0] if single else out

    def inverse(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        if not np.all(np.isfinite(p)):
            raise DomainError("conformal inverse needs finite coordinates")
        q = p[:, 0] + 1j * p[:, 1]
        # z = num / den in homogeneous form so den -> 0 lands on the pole
        num = self.u_star * (1j * self.alpha - q)
        den = q + 1j * self.alpha
        nn = np.abs(num) ** 2
        dd = np.abs(den) ** 2
        cross = num * np.conj(den)
        y = np.stack([2.0 * cross.real, 2.0 * cross.imag, dd - nn], axis=1) / (dd + nn)[:, None]
        return self._unrotate(y, single)

    def calibrated(self, points) -> "ConformalMap":
        """Copy with ``alpha`` set so total variance matches geodesic variance."""
        pts = unit_vector(np.atleast_2d(points))
        unit = ConformalMap(self.circles, 1.0).forward(pts)
        tv = float(np.sum(unit.var(axis=0)))
        gm = geodesic_mean_s2(pts)
        gv = float(np.mean(sphere_distance(pts, gm) ** 2))
        if tv <= 0 or gv <= 0:
            return ConformalMap(self.circles, 1.0)
        return ConformalMap(self.circles, np.sqrt(gv / tv))

    def to_dict(self) -> dict:
        d = self._base_dict()
        d["alpha"] = self.alpha
        return d


class TangentMap:
    """Log map at a component's geodesic mean."""

    kind = MapKind.TANGENT

    def __init__(self, component: Component, mean):
        self.component = component
        self.mean = component.validate(mean)
        self.dim = component.intrinsic_dim
        if component.kind is Kind.SPHERE:
            self.rotation = rotation_to_north(self.mean)

    @property
    def anchor(self):
        return self.mean

    def forward(self, value) -> np.ndarray:
        k = self.component.kind
        if k is Kind.SPHERE:
            pts, single = _as_points(value)
            out = log_north(pts @ self.rotation.T)
            return out[0] if single else out
        v = np.asarray(value, dtype=float)
        if k is Kind.CIRCLE:
            d = signed_angle(v - self.mean)
            if np.any(np.abs(d) > np.pi - POLE_TOL):
                raise DomainError("S1 log map is undefined at the antipode of the mean")
            return np.asarray(d, dtype=float)[..., None]
        if k is Kind.POSITIVE:
            if np.any(v <= 0):
                raise DomainError("Rplus values must be positive")
            return np.log(v / self.mean)[..., None]
        return v - self.mean

    def inverse(self, p):
        k = self.component.kind
        p = np.asarray(p, dtype=float)
        if k is Kind.SPHERE:
            if np.any(np.linalg.norm(p, axis=-1) >= np.pi):
                raise DomainError("S2 exponential map is not invertible beyond radius pi")
            y = exp_north(p)
            out = y @ self.rotation
            return out / np.linalg.norm(out, axis=-1, keepdims=True)
        if k is Kind.CIRCLE:
            t = p[..., 0]
            if np.any(np.abs(t) >= np.pi):
                raise DomainError("S1 exponential map is not invertible beyond half a turn")
            return wrap_angle(self.mean + t)
        if k is Kind.POSITIVE:
            out = self.mean * np.exp(p[..., 0])
            return float(out) if np.ndim(out) == 0 else out
        return self.mean + p

    def to_dict(self) -> dict:
        m = self.mean
        return {
            "kind": self.kind.value,
            "component": self.component.tag,
            "mean": m.tolist() if isinstance(m, np.ndarray) else m,
        }


def frame_from_dict(d: dict):
    kind = MapKind(d["kind"])
    if kind is MapKind.TANGENT:
        return TangentMap(Component.parse(d["component"]), d["mean"])
    from .suppression import Estimator, RatioEstimate

    ratio = None
    if d.get("ratio") is not None:
        rd = d["ratio"]
        ratio = RatioEstimate(rd["mu_hat"], rd["sigma_hat"], float(rd["ratio"]),
                              Estimator(rd["method"]), rd.get("degenerate", False))
    unit_vector(d["mean_u"])  # validates; the stored value is kept bit-for-bit
    circles = PrincipalCircles(CircleOnSphere(np.asarray(d["center"]), float(d["radius"])),
                               np.asarray(d["mean_u"], dtype=float), CircleKind(d["circle_kind"]), ratio)
    if kind is MapKind.PROJECTION:
        return ProjectionMap(circles)
    if "alpha" not in d:
        raise SchemaError("conformal frame is missing 'alpha'")
    return ConformalMap(circles, float(d["alpha"]))
