"""Static figures for experiment reports (Agg backend only)."""
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0

STYLE = {
    "font.size": 8,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "figure.dpi": 150,
}


def figsize(width=4.5, height=None):
    """Width and height in inches; height defaults to width times the golden mean."""
    return (width, width * GOLDEN if height is None else height)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_loglog(path, x, ys, xlabel, ylabel="", title="", ref_slope=None):
    """Log-log plot of named series against x, with an optional reference slope."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        x = np.asarray(x, dtype=float)
        for name, y in ys.items():
            y = np.abs(np.asarray(y, dtype=float))
            ax.loglog(x, np.where(y > 0, y, np.nan), "o-", label=name)
        if ref_slope is not None and ys:
            y0 = max(np.abs(np.asarray(v, dtype=float))[0] for v in ys.values())
            ax.loglog(x, y0 * (x / x[0]) ** ref_slope, "k--", lw=0.8, label=f"slope {ref_slope:g}")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        _save(fig, path)


def plot_series(path, x, ys, xlabel, ylabel="", title=""):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize())
        for name, y in ys.items():
            ax.plot(x, y, "o-", label=name)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend()
        _save(fig, path)


def plot_metrics(path, metrics, title=""):
    """Numeric metric values against their tolerances on a log axis."""
    names = [k for k, m in metrics.items() if not isinstance(m["value"], bool) and m["value"] is not None]
    if not names:
        return False
    vals = np.array([abs(float(metrics[k]["value"])) for k in names])
    tols = np.array([abs(float(metrics[k]["tolerance"])) for k in names])
    floor = 1e-17
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(6.0, max(2.0, 0.3 * len(names) + 1.0)))
        pos = np.arange(len(names))
        colors = ["tab:green" if metrics[k]["pass"] else "tab:red" for k in names]
        ax.barh(pos, np.maximum(vals, floor), color=colors, left=floor)
        ax.scatter(np.maximum(tols, floor), pos, marker="|", s=200, color="k", label="tolerance")
        ax.set_xscale("log")
        ax.set_yticks(pos)
        ax.set_yticklabels(names)
        ax.invert_yaxis()
        ax.legend(loc="best")
        if title:
            ax.set_title(title)
        _save(fig, path)
    return True
