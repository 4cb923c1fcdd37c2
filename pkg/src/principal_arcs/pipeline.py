"""Principal arc analysis and the principal geodesic baseline.

Each component is flattened into its own block of ``R^d0``, the stacked
sample is centered and decomposed by SVD, and principal arcs are the
images of lines along the singular directions under the inverse flattening.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .circles import FitConfig, fit_principal_circles
from .errors import DomainError
from .manifold import Kind, Signature
from .suppression import DEFAULT_THRESHOLD, CircleKind, Estimator
from .transforms import ConformalMap, MapKind, ProjectionMap, TangentMap, frame_from_dict


class Method(str, Enum):
    PAA = "PAA"
    PGA = "PGA"


@dataclass(frozen=True)
class PaaConfig:
    map: MapKind = MapKind.PROJECTION
    threshold: float = DEFAULT_THRESHOLD
    estimator: Estimator = Estimator.ROBUST
    n_components: int | None = None
    force: CircleKind | None = None  # skip suppression and use this circle kind everywhere
    fit: FitConfig = field(default_factory=FitConfig)


@dataclass
class PaaModel:
    signature: Signature
    frames: list
    directions: np.ndarray  # (m, d0), rows orthonormal
    singular_values: np.ndarray
    center_offset: np.ndarray
    total_ss: float  # squared Frobenius norm of the centered data matrix
    n_samples: int
    method: Method = Method.PAA

    @property
    def n_components(self) -> int:
        return self.directions.shape[0]

    def flatten(self, data) -> np.ndarray:
        """Stack ``h(x_i)`` into an ``(n, d0)`` matrix."""
        cols = self.signature.columns(data)
        blocks = []
        for j, (frame, col) in enumerate(zip(self.frames, cols)):
            try:
                blocks.append(np.asarray(frame.forward(col), dtype=float).reshape(col.shape[0], frame.dim))
            except DomainError as exc:
                raise DomainError(f"component {j} ({self.signature.components[j].tag}): {exc}") from None
        return np.hstack(blocks)

    def transform_point(self, x) -> np.ndarray:
        return self.flatten([x])[0]

    def scores(self, data) -> np.ndarray:
        return (self.flatten(data) - self.center_offset) @ self.directions.T

    def unflatten(self, y) -> tuple:
        """Componentwise inverse of the flattening for one ``R^d0`` vector."""
        y = np.asarray(y, dtype=float)
        out = []
        for j, (frame, sl) in enumerate(zip(self.frames, self.signature.blocks())):
            try:
                out.append(frame.inverse(y[sl]))
            except DomainError as exc:
                raise DomainError(f"component {j} ({self.signature.components[j].tag}): {exc}") from None
        return tuple(out)

    def variance_proportions(self) -> np.ndarray:
        if self.total_ss <= 0:
            return np.zeros_like(self.singular_values)
        return self.singular_values ** 2 / self.total_ss


def _decompose(X, n_components):
    center = X.mean(axis=0)
    Xc = X - center
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    n, d0 = X.shape
    m = min(n - 1, d0) if n_components is None else n_components
    m = max(1, min(m, vt.shape[0]))
    vt = vt[:m].copy()
    # deterministic signs: largest-magnitude entry positive
    idx = np.argmax(np.abs(vt), axis=1)
    vt *= np.sign(vt[np.arange(m), idx])[:, None]
    return center, vt, s[:m].copy(), float(np.sum(Xc * Xc))


def _fit(data, sig, frames, method, n_components):
    model = PaaModel(sig, frames, np.zeros((0, sig.intrinsic_dim)), np.zeros(0),
                     np.zeros(sig.intrinsic_dim), 0.0, len(data), method)
    X = model.flatten(data)
    model.center_offset, model.directions, model.singular_values, model.total_ss = _decompose(X, n_components)
    return model


def fit_paa(data, sig: Signature, cfg: PaaConfig | None = None) -> PaaModel:
    """Principal arc analysis of product-manifold data.

    S^2 components get principal circles (with small-circle suppression)
    and the configured flattening map; other components use the log map at
    their geodesic mean.
    """
    cfg = cfg or PaaConfig()
    if len(data) < 3:
        raise ValueError("principal arc analysis needs at least 3 points")
    cols = sig.columns(data)
    frames = []
    for comp, col in zip(sig.components, cols):
        if comp.kind is Kind.SPHERE:
            circles = fit_principal_circles(col, cfg.fit, cfg.threshold, cfg.estimator, cfg.force)
            if MapKind(cfg.map) is MapKind.CONFORMAL:
                frames.append(ConformalMap(circles).calibrated(col))
            else:
                frames.append(ProjectionMap(circles))
        else:
            frames.append(TangentMap(comp, comp.mean(col)))
    return _fit(data, sig, frames, Method.PAA, cfg.n_components)


def fit_pga(data, sig: Signature, cfg: PaaConfig | None = None) -> PaaModel:
    """Principal geodesic analysis: log map at the geodesic mean for every component."""
    cfg = cfg or PaaConfig()
    if len(data) < 3:
        raise ValueError("principal geodesic analysis needs at least 3 points")
    cols = sig.columns(data)
    frames = [TangentMap(comp, comp.mean(col)) for comp, col in zip(sig.components, cols)]
    return _fit(data, sig, frames, Method.PGA, cfg.n_components)


def principal_arc(model: PaaModel, k: int, t_values) -> list:
    """Points ``h^-1(center + t v_k)`` along the ``k``-th principal arc (1-based)."""
    if not 1 <= k <= model.n_components:
        raise ValueError(f"component index {k} outside 1..{model.n_components}")
    v = model.directions[k - 1]
    return [model.unflatten(model.center_offset + t * v) for t in np.atleast_1d(t_values)]


def project_to_submanifold(x, model: PaaModel, k: int) -> tuple:
    """Project a point onto the ``k``-dimensional principal submanifold."""
    if not 1 <= k <= model.n_components:
        raise ValueError(f"submanifold dimension {k} outside 1..{model.n_components}")
    V = model.directions[:k]
    y = model.transform_point(x) - model.center_offset
    return model.unflatten(model.center_offset + V.T @ (V @ y))


def variance_report(model: PaaModel) -> list:
    """``(component, proportion, cumulative)`` rows, components numbered from 1."""
    prop = model.variance_proportions()
    cum = np.cumsum(prop)
    return [(i + 1, float(p), float(c)) for i, (p, c) in enumerate(zip(prop, cum))]


def model_to_dict(model: PaaModel) -> dict:
    return {
        "method": model.method.value,
        "signature": model.signature.tags,
        "frames": [f.to_dict() for f in model.frames],
        "directions": model.directions.tolist(),
        "singular_values": model.singular_values.tolist(),
        "center_offset": model.center_offset.tolist(),
        "total_ss": model.total_ss,
        "n_samples": model.n_samples,
    }


def model_from_dict(d: dict) -> PaaModel:
    sig = Signature.parse(d["signature"])
    d0 = sig.intrinsic_dim
    return PaaModel(
        signature=sig,
        frames=[frame_from_dict(f) for f in d["frames"]],
        directions=np.asarray(d["directions"], dtype=float).reshape(-1, d0),
        singular_values=np.asarray(d["singular_values"], dtype=float),
        center_offset=np.asarray(d["center_offset"], dtype=float),
        total_ss=float(d["total_ss"]),
        n_samples=int(d["n_samples"]),
        method=Method(d["method"]),
    )
