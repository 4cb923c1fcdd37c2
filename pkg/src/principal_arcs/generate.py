"""Seeded synthetic data.

All randomness comes from numpy's PCG64 bit generator via
``numpy.random.default_rng(seed)``.  A fixed seed reproduces a dataset bit
for bit on the same numpy version.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .io import DatasetFile
from .manifold import rotation_to_north, unit_vector


class GeneratorKind(str, Enum):
    SMALL_CIRCLE = "small-circle"
    VMF = "vmf"
    PRODUCT = "product"


@dataclass
class GeneratorConfig:
    kind: GeneratorKind = GeneratorKind.SMALL_CIRCLE
    n: int = 50
    center: tuple = (0.0, 0.0, 1.0)
    mu: float = 0.6  # circle radius (small-circle) or S2 circle radius (product)
    sigma: float = 0.05
    kappa: float = 10.0
    arc: float = 2.0 * np.pi  # longitude span, centered on longitude 0
    positive_scale: float = 0.2  # product: log-scale slope of the Rplus block
    euclidean_dim: int = 0  # product: optional R^p block
    seed: int | None = None

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.kind is GeneratorKind.VMF and not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not 0 < self.arc <= 2 * np.pi:
            raise ValueError("arc span must lie in (0, 2*pi]")
        if self.kind is not GeneratorKind.VMF and not 0 < self.mu < np.pi:
            raise ValueError("circle radius must lie in (0, pi)")
        unit_vector(self.center)


def _rng(rng_or_seed):
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.default_rng(rng_or_seed)


def small_circle_noise(n, center, mu, sigma, rng=None, arc=2 * np.pi) -> np.ndarray:
    """Points with longitude uniform over ``arc`` and distance ``|mu + xi|`` from ``center``.

    A negative ``mu + xi`` lands on the opposite meridian, so the distance
    to the center is exactly the folded value.
    """
    rng = _rng(rng)
    lon = (rng.random(n) - 0.5) * arc if arc < 2 * np.pi else rng.random(n) * arc
    rad = mu + sigma * rng.standard_normal(n)
    lon = np.where(rad < 0, lon + np.pi, lon)
    rad = np.abs(rad)
    s = np.sin(rad)
    y = np.stack([s * np.cos(lon), s * np.sin(lon), np.cos(rad)], axis=1)
    return y @ rotation_to_north(unit_vector(center))


def von_mises_fisher(n, mean, kappa, rng=None) -> np.ndarray:
    """Samples from the von Mises-Fisher distribution on S2 by inversion."""
    rng = _rng(rng)
    u = rng.random(n)
    # cos of the angle from the mean; log1p form stays accurate for large kappa
    w = 1.0 + np.log1p(u * np.expm1(-2.0 * kappa)) / kappa
    w = np.clip(w, -1.0, 1.0)
    lon = rng.random(n) * 2 * np.pi
    s = np.sqrt(1.0 - w * w)
    y = np.stack([s * np.cos(lon), s * np.sin(lon), w], axis=1)
    return y @ rotation_to_north(unit_vector(mean))


_PRODUCT_CENTERS = (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0]))


def product_shapes(n, mu, sigma, rng=None, arc=np.pi, positive_scale=0.2, euclidean_dim=0):
    """m-rep-like tuples driven by one latent position along an arc.

    Each S2 block sits on a small circle of radius ``mu`` at a longitude
    set by the shared latent value, with independent radial noise ``sigma``.
    The Rplus block is ``exp(positive_scale * t)`` with small noise.
    """
    rng = _rng(rng)
    t = (rng.random(n) - 0.5) * arc
    blocks = []
    for k, c in enumerate(_PRODUCT_CENTERS):
        lon = t if k == 0 else -t
        rad = np.abs(mu + sigma * rng.standard_normal(n))
        R = rotation_to_north(c)
        s = np.sin(rad)
        y = np.stack([s * np.cos(lon), s * np.sin(lon), np.cos(rad)], axis=1)
        blocks.append(y @ R)
    pos = np.exp(positive_scale * t + 0.1 * sigma * rng.standard_normal(n))
    cols = [*blocks, pos]
    sig = ["S2", "S2", "Rplus"]
    if euclidean_dim:
        cols.append(sigma * rng.standard_normal((n, euclidean_dim)) + t[:, None])
        sig.append(f"R{euclidean_dim}")
    points = [tuple(col[i] for col in cols) for i in range(n)]
    return sig, points


def generate(cfg: GeneratorConfig) -> DatasetFile:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    meta = {"generator": cfg.kind.value, "seed": cfg.seed, "n": cfg.n}
    if cfg.kind is GeneratorKind.SMALL_CIRCLE:
        X = small_circle_noise(cfg.n, cfg.center, cfg.mu, cfg.sigma, rng, cfg.arc)
        meta.update(center=list(map(float, cfg.center)), mu=cfg.mu, sigma=cfg.sigma, arc=cfg.arc)
        return DatasetFile(["S2"], [(x,) for x in X], metadata=meta)
    if cfg.kind is GeneratorKind.VMF:
        X = von_mises_fisher(cfg.n, cfg.center, cfg.kappa, rng)
        meta.update(center=list(map(float, cfg.center)), kappa=cfg.kappa)
        return DatasetFile(["S2"], [(x,) for x in X], metadata=meta)
    sig, pts = product_shapes(cfg.n, cfg.mu, cfg.sigma, rng, min(cfg.arc, np.pi),
                              cfg.positive_scale, cfg.euclidean_dim)
    meta.update(mu=cfg.mu, sigma=cfg.sigma, arc=min(cfg.arc, np.pi), positive_scale=cfg.positive_scale)
    return DatasetFile(sig, pts, metadata=meta)

