import numpy as np
import pytest

# acceptance outcomes, filled in by test_acceptance.py and printed at the end
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit(rng, n=None):
    shape = (3,) if n is None else (n, 3)
    x = rng.standard_normal(shape)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def circle_points(center, radius, lon):
    from principal_arcs.manifold import rotation_to_north

    lon = np.asarray(lon, dtype=float)
    s = np.sin(radius)
    y = np.stack([s * np.cos(lon), s * np.sin(lon), np.full_like(lon, np.cos(radius))], axis=-1)
    return y @ rotation_to_north(center)


def grid_objective(X, n_colat=200, n_lon=400):
    """Brute-force min over a center grid with the per-center optimal radius."""
    t = (np.arange(n_colat) + 0.5) * np.pi / n_colat
    p = np.arange(n_lon) * 2 * np.pi / n_lon
    T, P = np.meshgrid(t, p, indexing="ij")
    C = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], -1).reshape(-1, 3)
    rho = np.arccos(np.clip(C @ X.T, -1, 1))
    e = rho - rho.mean(axis=1, keepdims=True)
    return float((e * e).sum(axis=1).min())
