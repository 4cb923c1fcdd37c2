"""Monte Carlo harnesses for the suppression rule.

Every replicate draws from its own generator spawned from a master
``SeedSequence``, so results depend only on the seed and never on how the
replicates are split across worker processes.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circles import FitConfig, FitMode, fit_circle
from .generate import small_circle_noise
from .suppression import DEFAULT_QUANTILE, Estimator, em_estimate, goodness_of_fit, robust_ratio

TABLE1_SIZES = (50, 1000)
TABLE1_RATIOS = (0, 1, 2, 3)
METHOD_LABELS = {Estimator.EM: "MLE", Estimator.ROBUST: "Robust"}


@dataclass(frozen=True)
class Table1Cell:
    method: str
    n: int
    ratio: float
    proportion: float  # percent of replicates with estimate > 2


def _replicate_seeds(seed, n_cells, reps):
    master = np.random.SeedSequence(seed)
    return [cell.spawn(reps) for cell in master.spawn(n_cells)]


def _table1_chunk(args):
    n, ratio, seeds, threshold, quantile = args
    hits = {Estimator.EM: 0, Estimator.ROBUST: 0}
    for ss in seeds:
        r = np.abs(ratio + np.random.default_rng(ss).standard_normal(n))
        if robust_ratio(r, quantile).ratio > threshold:
            hits[Estimator.ROBUST] += 1
        if em_estimate(r).ratio > threshold:
            hits[Estimator.EM] += 1
    return hits


def _chunks(seq, k):
    step = -(-len(seq) // k)
    return [seq[i:i + step] for i in range(0, len(seq), step)]


def _run(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def simulate_table1(reps: int = 1000, seed: int = 7, sizes=TABLE1_SIZES, ratios=TABLE1_RATIOS,
                    threshold: float = 2.0, workers: int = 1, quantile: str = DEFAULT_QUANTILE) -> list:
    """Percent of ``mu / sigma`` estimates above ``threshold`` for ``|N(ratio, 1)|`` samples.

    Both estimators see the same samples.  Cells come back ordered by
    method (MLE first), then sample size, then true ratio.
    """
    cells = [(n, q) for n in sizes for q in ratios]
    seeds = _replicate_seeds(seed, len(cells), reps)
    jobs, owner = [], []
    for idx, ((n, q), ss) in enumerate(zip(cells, seeds)):
        for chunk in _chunks(ss, max(1, workers)):
            jobs.append((n, float(q), chunk, threshold, quantile))
            owner.append(idx)
    totals = [{Estimator.EM: 0, Estimator.ROBUST: 0} for _ in cells]
    for idx, hits in zip(owner, _run(_table1_chunk, jobs, workers)):
        for k, v in hits.items():
            totals[idx][k] += v
    out = []
    for est in (Estimator.EM, Estimator.ROBUST):
        for (n, q), tot in zip(cells, totals):
            out.append(Table1Cell(METHOD_LABELS[est], n, float(q), 100.0 * tot[est] / reps))
    return out


def table1_rows(cells) -> list:
    return [(c.method, c.n, c.ratio, c.proportion) for c in cells]


TABLE1_HEADER = ("method", "n", "ratio", "proportion")


# ---------------------------------------------------------------------------
# goodness-of-fit calibration
# ---------------------------------------------------------------------------

def gof_statistic(points, cfg: FitConfig | None = None):
    """Great-circle versus small-circle ``V`` test for one sample.

    The small-circle fit starts at the great-circle center so it is nested
    in the great-circle solution and ``r_c <= r_g``.
    """
    cfg = cfg or FitConfig()
    g = fit_circle(points, FitMode.GREAT, cfg)
    s = fit_circle(points, FitMode.SMALL, cfg, init_center=g.circle.center)
    r_g, r_c = g.sum_sq_residuals, min(s.sum_sq_residuals, g.sum_sq_residuals)
    return goodness_of_fit(r_g, r_c, len(points))


def _gof_chunk(args):
    n, sigma, arc, seeds, level = args
    rejected = 0
    for ss in seeds:
        X = small_circle_noise(n, (0.0, 0.0, 1.0), np.pi / 2, sigma, np.random.default_rng(ss), arc)
        if gof_statistic(X).p_value < level:
            rejected += 1
    return rejected


def gof_null_rejection_rate(reps: int = 2000, n: int = 50, sigma: float = 0.05, arc: float = 2.5,
                            level: float = 0.05, seed: int = 7, workers: int = 1) -> float:
    """Fraction of great-circle-truth samples the ``V`` test rejects at ``level``."""
    seeds = np.random.SeedSequence(seed).spawn(reps)
    jobs = [(n, sigma, arc, chunk, level) for chunk in _chunks(seeds, max(1, workers))]
    return sum(_run(_gof_chunk, jobs, workers)) / reps
