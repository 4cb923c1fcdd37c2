"""Geodesic geometry of S^1, S^2, R_+ and R^p and their direct products.

Points on S^2 are unit 3-vectors stored as ``(3,)`` arrays (or ``(n, 3)``
stacks), S^1 points are angles in radians on ``[0, 2*pi)``, positive reals
are floats and Euclidean points are ``(p,)`` arrays.  Tangent vectors on S^2
are 2-vectors expressed in the frame obtained by rotating the base point to
the north pole ``e3``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, SchemaError

TWO_PI = 2.0 * np.pi
E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

UNIT_TOL = 1e-6
ANTIPODAL_TOL = 1e-9


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def unit_vector(x, tol: float = UNIT_TOL) -> np.ndarray:
    """Return ``x`` as a unit 3-vector (or stack), renormalizing small drift.

    Inputs whose norm is further than ``tol`` from one are rejected rather
    than silently projected.
    """
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (3,):
        raise SchemaError(f"expected 3-vectors, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise SchemaError("non-finite coordinates in unit vector")
    norms = np.linalg.norm(arr, axis=-1, keepdims=True)
    if np.any(np.abs(norms - 1.0) > tol):
        raise SchemaError(f"vector norm {float(np.max(np.abs(norms - 1.0)) + 1.0):.9g} is not within {tol} of 1")
    return arr / norms


def wrap_angle(theta):
    """Reduce angles to ``[0, 2*pi)``."""
    out = np.mod(np.asarray(theta, dtype=float), TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    out = np.where(out >= TWO_PI, 0.0, out)
    return float(out) if out.ndim == 0 else out


def signed_angle(theta):
    """Reduce angles to ``(-pi, pi]``."""
    out = np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), TWO_PI)
    return float(out) if out.ndim == 0 else out


def sphere_distance(x, y):
    """Great-circle distance ``arccos(x . y)``, evaluated stably via atan2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cross = np.linalg.norm(np.cross(x, y), axis=-1)
    dot = np.sum(x * y, axis=-1)
    out = np.arctan2(cross, dot)
    return float(out) if out.ndim == 0 else out


def circle_distance(a, b):
    """Shortest-arc distance between angles."""
    out = np.abs(signed_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def rotation_to_north(c) -> np.ndarray:
    """Rotation matrix ``R`` with ``R @ c == e3``.

    Rotates through ``arccos(c_z)`` about the axis ``(c_y, -c_x, 0)``
    normalized; at the poles the axis is ``e1``, so ``-e3`` maps through a
    half-turn about ``e1``.  A stack of centers ``(..., 3)`` gives a stack
    of matrices ``(..., 3, 3)``.
    """
    c = unit_vector(c)
    s = np.hypot(c[..., 0], c[..., 1])
    theta = np.arctan2(s, c[..., 2])
    pole = s == 0.0
    safe = np.where(pole, 1.0, s)
    ux = np.where(pole, 1.0, c[..., 1] / safe)
    uy = np.where(pole, 0.0, -c[..., 0] / safe)
    cs, sn = np.cos(theta), np.sin(theta)
    v = 1.0 - cs
    # Rodrigues formula with a horizontal axis (u_z = 0)
    R = np.stack([
        np.stack([cs + ux * ux * v, ux * uy * v, uy * sn], axis=-1),
        np.stack([ux * uy * v, cs + uy * uy * v, -ux * sn], axis=-1),
        np.stack([-uy * sn, ux * sn, cs], axis=-1),
    ], axis=-2)
    return R


def exp_north(v) -> np.ndarray:
    """Exponential map at ``e3``; ``v`` has shape ``(2,)`` or ``(n, 2)``."""
    v = np.asarray(v, dtype=float)
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    # sin(t)/t with the removable singularity at 0
    sinc = np.sinc(nv / np.pi)
    return np.concatenate([v * sinc, np.cos(nv)], axis=-1)


def log_north(y) -> np.ndarray:
    """Log map at ``e3`` for points in north-pole coordinates."""
    y = np.asarray(y, dtype=float)
    s = np.hypot(y[..., 0], y[..., 1])
    theta = np.arctan2(s, y[..., 2])
    if np.any(theta > np.pi - ANTIPODAL_TOL):
        raise DomainError("log map is undefined at the antipode of the base point")
    scale = np.where(s > 0.0, theta / np.where(s > 0.0, s, 1.0), 1.0)
    return y[..., :2] * scale[..., None]


def exp_map_s2(c, v) -> np.ndarray:
    """Exponential map ``Exp_c(v)``; ``c`` and ``v`` broadcast over leading axes."""
    R = rotation_to_north(c)
    return np.einsum("...i,...ij->...j", exp_north(v), R)


def log_map_s2(c, x) -> np.ndarray:
    """Log map ``Log_c(x)``; inverse of :func:`exp_map_s2` away from ``-c``."""
    R = rotation_to_north(c)
    return log_north(np.einsum("...ij,...j->...i", R, np.asarray(x, dtype=float)))


# ---------------------------------------------------------------------------
# means
# ---------------------------------------------------------------------------

def _s1_frechet(candidates, angles):
    d = circle_distance(candidates[:, None], angles[None, :])
    return np.sum(d * d, axis=1)


def geodesic_mean_s1(angles: Sequence[float]) -> float:
    """Geodesic mean on the circle.

    Evaluates the ``n`` candidates ``(sum(theta) + 2*pi*j) / n`` and returns
    the one with the smallest sum of squared arc distances.  Exact ties are
    broken toward the smallest angle in ``[0, 2*pi)``.
    """
    theta = wrap_angle(np.atleast_1d(np.asarray(angles, dtype=float)))
    n = theta.size
    if n == 0:
        raise ValueError("geodesic mean of an empty sample")
    candidates = wrap_angle((theta.sum() + TWO_PI * np.arange(n)) / n)
    f = _s1_frechet(candidates, theta)
    best = f.min()
    tied = candidates[f <= best + 1e-10 * (1.0 + best)]
    return float(tied.min())


def geodesic_mean_s2(points, tol: float = 1e-10, max_iter: int = 1000) -> np.ndarray:
    """Intrinsic mean on S^2 by the fixed-point iteration ``m <- Exp_m(mean Log_m(x))``."""
    x = unit_vector(np.atleast_2d(points))
    if x.shape[0] == 0:
        raise ValueError("geodesic mean of an empty sample")
    m = x.mean(axis=0)
    nm = np.linalg.norm(m)
    m = m / nm if nm > 1e-8 else x[0].copy()
    for _ in range(max_iter):
        g = log_map_s2(m, x).mean(axis=0)
        if np.linalg.norm(g) < tol:
            return m
        m = exp_map_s2(m, g)
        m = m / np.linalg.norm(m)
    raise ConvergenceError(f"S^2 geodesic mean did not converge in {max_iter} iterations")


# ---------------------------------------------------------------------------
# product manifolds
# ---------------------------------------------------------------------------

class Kind(str, Enum):
    CIRCLE = "S1"
    SPHERE = "S2"
    POSITIVE = "Rplus"
    EUCLIDEAN = "R"


@dataclass(frozen=True)
class Component:
    kind: Kind
    dim: int = 1  # only meaningful for Euclidean blocks

    @property
    def intrinsic_dim(self) -> int:
        if self.kind is Kind.SPHERE:
            return 2
        if self.kind is Kind.EUCLIDEAN:
            return self.dim
        return 1

    @property
    def tag(self) -> str:
        return f"R{self.dim}" if self.kind is Kind.EUCLIDEAN else self.kind.value

    @classmethod
    def parse(cls, tag: str) -> "Component":
        if tag in ("S1", "S2", "Rplus"):
            return cls(Kind(tag))
        m = re.fullmatch(r"R(\d+)", tag)
        if m and int(m.group(1)) >= 1:
            return cls(Kind.EUCLIDEAN, int(m.group(1)))
        raise SchemaError(f"unknown manifold component {tag!r}")

    def validate(self, value):
        """Coerce one component value to its canonical representation."""
        if self.kind is Kind.SPHERE:
            return unit_vector(value).reshape(3)
        if self.kind is Kind.EUCLIDEAN:
            arr = np.asarray(value, dtype=float).reshape(-1)
            if arr.shape != (self.dim,) or not np.all(np.isfinite(arr)):
                raise SchemaError(f"expected a finite length-{self.dim} vector, got {value!r}")
            return arr
        try:
            val = float(value)
        except (TypeError, ValueError):
            raise SchemaError(f"expected a scalar for {self.tag}, got {value!r}") from None
        if not np.isfinite(val):
            raise SchemaError(f"non-finite {self.tag} value")
        if self.kind is Kind.POSITIVE:
            if val <= 0.0:
                raise SchemaError(f"Rplus value must be > 0, got {val}")
            return val
        return wrap_angle(val)

    def distance(self, a, b):
        """Vectorized geodesic distance within this component."""
        if self.kind is Kind.SPHERE:
            return sphere_distance(a, b)
        if self.kind is Kind.CIRCLE:
            return circle_distance(a, b)
        if self.kind is Kind.POSITIVE:
            out = np.abs(np.log(np.asarray(a, dtype=float) / np.asarray(b, dtype=float)))
            return float(out) if np.ndim(out) == 0 else out
        out = np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def mean(self, values):
        """Geodesic mean of a column of values for this component."""
        if self.kind is Kind.SPHERE:
            return geodesic_mean_s2(values)
        if self.kind is Kind.CIRCLE:
            return geodesic_mean_s1(values)
        if self.kind is Kind.POSITIVE:
            return float(np.exp(np.mean(np.log(values))))
        return np.mean(np.asarray(values, dtype=float), axis=0)


@dataclass(frozen=True)
class Signature:
    """Ordered list of simple manifolds making up a direct product."""

    components: tuple

    def __post_init__(self):
        if len(self.components) == 0:
            raise SchemaError("a manifold signature needs at least one component")

    @classmethod
    def parse(cls, tags) -> "Signature":
        if isinstance(tags, str):
            tags = [t.strip() for t in tags.split(",") if t.strip()]
        return cls(tuple(Component.parse(t) for t in tags))

    @property
    def tags(self) -> list:
        return [c.tag for c in self.components]

    @property
    def intrinsic_dim(self) -> int:
        return sum(c.intrinsic_dim for c in self.components)

    def __len__(self):
        return len(self.components)

    def blocks(self) -> list:
        """Column slices of each component inside the flattened ``R^d0`` vector."""
        out, start = [], 0
        for c in self.components:
            out.append(slice(start, start + c.intrinsic_dim))
            start += c.intrinsic_dim
        return out

    def validate_point(self, point, row=None) -> tuple:
        where = "" if row is None else f"row {row}: "
        if len(point) != len(self.components):
            raise SchemaError(f"{where}expected {len(self.components)} components, got {len(point)}")
        out = []
        for j, (comp, value) in enumerate(zip(self.components, point)):
            try:
                out.append(comp.validate(value))
            except SchemaError as exc:
                raise SchemaError(f"{where}component {j} ({comp.tag}): {exc}") from None
        return tuple(out)

    def columns(self, data) -> list:
        """Stack validated points into one array per component."""
        pts = [self.validate_point(p, i) for i, p in enumerate(data)]
        if not pts:
            raise ValueError("empty dataset")
        return [np.array([p[j] for p in pts]) for j in range(len(self.components))]


def geodesic_distance(a, b, sig: Signature) -> float:
    """Product distance: root-sum-square of the component distances."""
    a = sig.validate_point(a)
    b = sig.validate_point(b)
    return float(np.sqrt(sum(c.distance(x, y) ** 2 for c, x, y in zip(sig.components, a, b))))


def geodesic_mean_product(data, sig: Signature) -> tuple:
    """Componentwise geodesic mean of product-manifold data."""
    return tuple(c.mean(col) for c, col in zip(sig.components, sig.columns(data)))


def geodesic_variance(data, mean, sig: Signature) -> float:
    """Mean squared product distance from ``mean`` to the data."""
    mean = sig.validate_point(mean)
    cols = sig.columns(data)
    n = cols[0].shape[0]
    total = np.zeros(n)
    for c, col, m in zip(sig.components, cols, mean):
        total += np.asarray(c.distance(col, m), dtype=float) ** 2
    return float(total.mean())
