"""Static SVG figures that carry their own source data.

Each SVG gets an XML comment ``<!-- principal-arcs-data {...} -->`` holding
the plotted series as JSON, so :func:`read_svg_data` can recover them
without rerunning anything.
"""
from __future__ import annotations

import io
import json
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_TAG = "principal-arcs-data"
_COMMENT = re.compile(r"<!-- " + _TAG + r" (.*?) -->", re.S)


def _save(fig, path, data: dict) -> None:
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": _TAG, "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    svg = buf.getvalue()
    # "--" may not appear inside an XML comment; outside strings JSON never has it
    payload = json.dumps(data, sort_keys=True).replace("--", "-\\u002d")
    head, sep, rest = svg.partition("?>")
    svg = f"{head}{sep}\n<!-- {_TAG} {payload} -->{rest}" if sep else f"<!-- {_TAG} {payload} -->\n{svg}"
    Path(path).write_text(svg)


def read_svg_data(path) -> dict:
    """Recover the data embedded by this module's plot functions."""
    m = _COMMENT.search(Path(path).read_text())
    if m is None:
        raise ValueError(f"{path} has no embedded plot data")
    return json.loads(m.group(1))


def plot_scree(report, path, title: str = "Variance explained") -> None:
    """Bar chart of per-component proportions with the cumulative curve."""
    k = [int(r[0]) for r in report]
    prop = [float(r[1]) for r in report]
    cum = [float(r[2]) for r in report]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(k, prop, color="0.6", label="component")
    ax.plot(k, cum, "o-", color="k", label="cumulative")
    ax.set_xlabel("component")
    ax.set_ylabel("proportion of variance")
    ax.set_ylim(0, 1.05)
    ax.set_xticks(k)
    ax.set_title(title)
    ax.legend(loc="center right", frameon=False)
    fig.tight_layout()
    _save(fig, path, {"kind": "scree", "component": k, "proportion": prop, "cumulative": cum})


def plot_scores(scores, path, labels=None, pair=(0, 1), title: str = "Principal component scores") -> None:
    """Scatter of two score columns."""
    Z = np.asarray(scores, dtype=float)
    i, j = pair
    x = Z[:, i].tolist()
    y = (Z[:, j] if Z.shape[1] > j else np.zeros(Z.shape[0])).tolist()
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter(x, y, s=12, color="k")
    ax.axhline(0, color="0.8", lw=0.8)
    ax.axvline(0, color="0.8", lw=0.8)
    ax.set_xlabel(f"PC{i + 1}")
    ax.set_ylabel(f"PC{j + 1}")
    ax.set_title(title)
    fig.tight_layout()
    data = {"kind": "scores", "pair": [i + 1, j + 1], "x": x, "y": y}
    if labels is not None:
        data["labels"] = list(labels)
    _save(fig, path, data)


def plot_table1(cells, path) -> None:
    """Proportion of estimates above the threshold against the true ratio."""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    rows = [(c.method, c.n, c.ratio, c.proportion) for c in cells]
    for method, n in sorted({(m, n) for m, n, _, _ in rows}):
        pts = sorted((q, p) for m, nn, q, p in rows if m == method and nn == n)
        ax.plot([q for q, _ in pts], [p for _, p in pts], "o-" if method == "MLE" else "s--",
                label=f"{method}, n={n}")
    ax.set_xlabel("true ratio")
    ax.set_ylabel("% of estimates > threshold")
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path, {"kind": "table1", "rows": [list(r) for r in rows]})
