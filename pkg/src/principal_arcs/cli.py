"""Command-line interface.

Every command reads and writes JSON (datasets, fits, models), CSV (tables)
or SVG (plots).  Failures print ``{"error": ..., "message": ...}`` on
stderr and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as pio
from .circles import FitConfig, FitMode, Initializer, fit_circle, fit_principal_circles
from .errors import ConvergenceError, DegenerateDataError, DomainError, SchemaError
from .generate import GeneratorConfig, GeneratorKind, generate
from .manifold import Kind, geodesic_mean_product, geodesic_variance
from .pipeline import (
    PaaConfig, fit_paa, fit_pga, principal_arc, project_to_submanifold, variance_report,
)
from .plotting import plot_scores, plot_scree, plot_table1
from .simulate import TABLE1_HEADER, Table1Cell, simulate_table1, table1_rows
from .suppression import (
    DEFAULT_QUANTILE, CircleKind, Estimator, critical_ratio_wrapped,
)
from .transforms import MapKind

EXIT_CODES = {SchemaError: 2, DomainError: 3, DegenerateDataError: 4, ConvergenceError: 5}


def _emit(obj, out) -> None:
    text = pio.dumps(obj)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _sphere_column(ds, j):
    sig = ds.signature
    if j is None:
        hits = [i for i, c in enumerate(sig.components) if c.kind is Kind.SPHERE]
        if not hits:
            raise SchemaError("dataset has no S2 component")
        j = hits[0]
    if not 0 <= j < len(sig) or sig.components[j].kind is not Kind.SPHERE:
        raise SchemaError(f"component {j} is not an S2 component")
    return ds.column(j)


def _fit_cfg(args) -> FitConfig:
    return FitConfig(mode=FitMode(getattr(args, "mode", "small") or "small"), init=Initializer(args.init))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fit_circle(args):
    ds = pio.read_dataset(args.inp)
    rep = fit_circle(_sphere_column(ds, args.component), cfg=_fit_cfg(args))
    _emit(rep.to_dict(), args.out)


def cmd_mean(args):
    ds = pio.read_dataset(args.inp)
    mean = geodesic_mean_product(ds.points, ds.signature)
    _emit({"signature": ds.signature.tags,
           "mean": pio.product_point_to_json(mean, ds.signature),
           "geodesic_variance": geodesic_variance(ds.points, mean, ds.signature)}, args.out)


def cmd_suppress(args):
    ds = pio.read_dataset(args.inp)
    X = _sphere_column(ds, args.component)
    pc = fit_principal_circles(X, _fit_cfg(args), args.threshold, Estimator(args.estimator))
    d = pc.to_dict()
    d["threshold"] = args.threshold
    if len(X) > 3:
        from .simulate import gof_statistic

        try:
            d["goodness_of_fit"] = gof_statistic(X).to_dict()
        except ValueError:
            d["goodness_of_fit"] = None
    _emit(d, args.out)


def cmd_critical_ratio(args):
    val = critical_ratio_wrapped(mu=args.mu, k_max=args.k_max, truncated=args.truncated)
    _emit({"critical_ratio": val, "mu": args.mu, "k_max": args.k_max, "truncated": args.truncated}, args.out)


def _paa_cfg(args) -> PaaConfig:
    return PaaConfig(
        map=MapKind(args.map), threshold=args.threshold, estimator=Estimator(args.estimator),
        n_components=args.components, force=None if args.force is None else CircleKind(args.force),
        fit=FitConfig(init=Initializer(args.init)),
    )


def _run_decomposition(args, fitter):
    ds = pio.read_dataset(args.inp)
    model = fitter(ds.points, ds.signature, _paa_cfg(args))
    pio.write_model(args.out, model)
    report = variance_report(model)
    if args.plot:
        plot_scree(report, args.plot, title=f"{model.method.value} variance explained")
    if args.scores:
        Z = model.scores(ds.points)
        pio.write_csv(args.scores, [f"pc{k + 1}" for k in range(Z.shape[1])], Z.tolist())
    sys.stdout.write(pio.dumps({"model": args.out,
                                "variance": [{"component": k, "proportion": p, "cumulative": c}
                                             for k, p, c in report]}))


def cmd_paa(args):
    _run_decomposition(args, fit_paa)


def cmd_pga(args):
    _run_decomposition(args, fit_pga)


def cmd_project(args):
    model = pio.read_model(args.model)
    ds = pio.read_dataset(args.inp)
    if ds.signature.tags != model.signature.tags:
        raise SchemaError(f"dataset signature {ds.signature.tags} does not match model {model.signature.tags}")
    pts = []
    for i, p in enumerate(ds.points):
        try:
            pts.append(project_to_submanifold(p, model, args.k))
        except DomainError as exc:
            raise DomainError(f"row {i}: {exc}") from None
    out = pio.DatasetFile(model.signature, pts, ds.labels, {"projected_k": args.k})
    _emit(out.to_dict(), args.out)


def cmd_arc(args):
    model = pio.read_model(args.model)
    if args.t is not None:
        t = np.asarray(args.t, dtype=float)
    else:
        t = np.linspace(args.t_min, args.t_max, args.steps)
    pts = principal_arc(model, args.k, t)
    out = pio.DatasetFile(model.signature, pts, None, {"arc": args.k, "t": t.tolist()})
    _emit(out.to_dict(), args.out)


def cmd_gen(args):
    center = tuple(args.center) if args.center else (0.0, 0.0, 1.0)
    cfg = GeneratorConfig(kind=GeneratorKind(args.kind), n=args.n, center=center, mu=args.mu,
                          sigma=args.sigma, kappa=args.kappa, arc=args.arc, seed=args.seed,
                          euclidean_dim=args.euclidean_dim)
    _emit(generate(cfg).to_dict(), args.out)


def cmd_simulate_table1(args):
    cells = simulate_table1(reps=args.reps, seed=args.seed, threshold=args.threshold,
                            workers=args.workers, quantile=args.quantile)
    rows = table1_rows(cells)
    if args.out:
        pio.write_csv(args.out, TABLE1_HEADER, rows)
    else:
        import csv

        w = csv.writer(sys.stdout)
        w.writerow(TABLE1_HEADER)
        w.writerows(rows)
    if args.plot:
        plot_table1(cells, args.plot)


def cmd_plot(args):
    if args.table1:
        cells = [Table1Cell(r["method"], int(r["n"]), float(r["ratio"]), float(r["proportion"]))
                 for r in pio.read_csv(args.table1)]
        plot_table1(cells, args.out)
        return
    if not args.model:
        raise SchemaError("plot needs --model or --table1")
    model = pio.read_model(args.model)
    if args.what == "scree":
        plot_scree(variance_report(model), args.out, title=f"{model.method.value} variance explained")
    else:
        if not args.inp:
            raise SchemaError("score plots need --in with the data")
        ds = pio.read_dataset(args.inp)
        plot_scores(model.scores(ds.points), args.out, ds.labels, (args.pair[0] - 1, args.pair[1] - 1),
                    title=f"{model.method.value} scores")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_fit_opts(p, mode=True):
    if mode:
        p.add_argument("--mode", choices=[m.value for m in FitMode], default="small")
    p.add_argument("--init", choices=[i.value for i in Initializer], default=Initializer.FIRST_POINT.value,
                   help="outer-loop starting center")


def _add_component(p):
    p.add_argument("--component", type=int, default=None,
                   help="index of the S2 component to use (default: first S2)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="principal-arcs", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-circle", help="least-squares small or great circle")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out")
    _add_component(p)
    _add_fit_opts(p)
    p.set_defaults(func=cmd_fit_circle)

    p = sub.add_parser("mean", help="componentwise geodesic mean and geodesic variance")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mean)

    p = sub.add_parser("suppress", help="principal circles with the small/great decision")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out")
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--estimator", choices=[e.value for e in Estimator], default="robust")
    _add_component(p)
    _add_fit_opts(p, mode=False)
    p.set_defaults(func=cmd_suppress)

    p = sub.add_parser("critical-ratio", help="smallest mu/sigma giving a nonzero radial mode")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--k-max", type=int, default=5)
    p.add_argument("--truncated", action="store_true", help="single unwrapped normal term")
    p.add_argument("--out")
    p.set_defaults(func=cmd_critical_ratio)

    for name, func, hlp in (("paa", cmd_paa, "principal arc analysis"),
                            ("pga", cmd_pga, "principal geodesic analysis")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("--in", dest="inp", required=True)
        p.add_argument("--out", required=True, help="model JSON")
        p.add_argument("--map", choices=[MapKind.PROJECTION.value, MapKind.CONFORMAL.value],
                       default=MapKind.PROJECTION.value)
        p.add_argument("--threshold", type=float, default=2.0)
        p.add_argument("--estimator", choices=[e.value for e in Estimator], default="robust")
        p.add_argument("--force", choices=[k.value for k in CircleKind], default=None,
                       help="skip the decision and use this circle kind")
        p.add_argument("--components", type=int, default=None)
        p.add_argument("--plot", help="scree plot SVG")
        p.add_argument("--scores", help="score matrix CSV")
        _add_fit_opts(p, mode=False)
        p.set_defaults(func=func)

    p = sub.add_parser("project", help="project points onto the k-dimensional principal submanifold")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("arc", help="sample points along a principal arc")
    p.add_argument("--model", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--t", type=float, nargs="+", help="explicit arc parameters")
    p.add_argument("--t-min", type=float, default=-1.0)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--out")
    p.set_defaults(func=cmd_arc)

    p = sub.add_parser("gen", help="seeded synthetic dataset")
    p.add_argument("--kind", choices=[k.value for k in GeneratorKind], default="small-circle")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--center", type=float, nargs=3)
    p.add_argument("--mu", type=float, default=0.6)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--kappa", type=float, default=10.0)
    p.add_argument("--arc", type=float, default=2 * np.pi)
    p.add_argument("--euclidean-dim", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("simulate-table1", help="Monte Carlo of the ratio estimators")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quantile", default=DEFAULT_QUANTILE, help="numpy quantile method for the robust estimator")
    p.add_argument("--out", help="CSV (default: stdout)")
    p.add_argument("--plot", help="SVG of the table")
    p.set_defaults(func=cmd_simulate_table1)

    p = sub.add_parser("plot", help="scree or score plot from a model, or a Table 1 plot from CSV")
    p.add_argument("--model")
    p.add_argument("--in", dest="inp")
    p.add_argument("--table1", help="CSV written by simulate-table1")
    p.add_argument("--what", choices=["scree", "scores"], default="scree")
    p.add_argument("--pair", type=int, nargs=2, default=[1, 2])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        code = next((c for t, c in EXIT_CODES.items() if isinstance(exc, t)), 1)
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
