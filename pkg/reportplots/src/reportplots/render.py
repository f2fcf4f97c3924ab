"""Render static figures from degenbranch JSON outputs.

Four figures per run: a log-log variance-versus-scale plot with the
fitted slope line and the predicted growth, a histogram of the largest
scale's samples with the fitted normal overlay, a QQ plot against normal
quantiles, and the cross-time correlation heatmap.

Figures display what the primary tool computed: slopes, variances,
moments and correlations are read from the summary document, never
recomputed from the raw samples.  Every figure is annotated with the
run's config digest and master seed.
"""

import json
import math
import os

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.fonttype"] = "none"  # keep text as text in the SVGs

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

FIGURE_NAMES = (
    "variance_vs_n.svg",
    "samples_histogram.svg",
    "qq_plot.svg",
    "correlation_heatmap.svg",
)


class RenderError(Exception):
    """Raised with the offending path when an input is missing or corrupt."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _load_summary(path):
    if not os.path.exists(path):
        raise RenderError(path, "summary file does not exist")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RenderError(path, f"cannot parse summary: {exc}") from exc
    if "results" not in doc:
        raise RenderError(path, "summary has no 'results' object")
    return doc["results"]


def _load_samples(path):
    if not os.path.exists(path):
        raise RenderError(path, "samples file does not exist")
    records = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise RenderError(path, f"bad JSON on line {i + 1}: {exc}") from exc
    except OSError as exc:
        raise RenderError(path, f"cannot read samples: {exc}") from exc
    if not records:
        raise RenderError(path, "samples file is empty")
    return records


def _annotate(fig, results):
    digest = results.get("config_digest", "")
    seed = results.get("master_seed", "")
    fig.text(0.99, 0.01, f"config {digest[:12]}…  seed {seed}",
             ha="right", va="bottom", fontsize=7, color="0.45")


def _largest_cell(results, records):
    """Samples at the largest scale / latest time / primary box."""
    n_max = max(int(n) for n in results["n_schedule"])
    t_max = max(float(t) for t in results["t_grid"])
    primary = None
    boxes = results.get("boxes", {})
    if str(n_max) in boxes:
        primary = boxes[str(n_max)]["primary"]
    values = []
    for rec in records:
        if rec["n"] != n_max or rec["t"] != t_max:
            continue
        if primary is not None and abs(rec["L"][0] - primary) > 1e-9 * max(1.0, primary):
            continue
        values.append(rec["value"])
    if not values:
        raise RenderError("samples", f"no samples at n={n_max}, t={t_max}")
    return n_max, t_max, np.asarray(values, dtype=float)


def _moments(results, n_max, t_max):
    row = results["mean_zero"][str(n_max)][str(t_max)]
    return row["mean"], row["sd"]


def plot_variance_vs_n(results, out_path):
    ns = [int(n) for n in results["n_schedule"]]
    var = results["unnormalized_variances"]
    points = [(n, var[str(n)]) for n in ns if str(n) in var]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    ax.loglog(xs, ys, "o", color="tab:blue", label="measured Var")
    scaling = results.get("scaling", {})
    if "slope" in scaling and xs.size >= 2:
        slope = scaling["slope"]
        stderr = scaling.get("stderr", 0.0)
        # line through the geometric midpoint with the reported slope
        x0 = math.exp(np.log(xs).mean())
        y0 = math.exp(np.log(ys).mean())
        grid = np.linspace(xs.min(), xs.max(), 50)
        ax.loglog(grid, y0 * (grid / x0) ** slope, "-", color="tab:blue",
                  label=f"fitted slope {slope:.2f} ± {stderr:.2f}")
        predicted = scaling.get("predicted")
        if predicted is not None:
            limit = results.get("predicted_limit_variance")
            if limit:
                ax.loglog(grid, limit * grid**predicted, "--", color="tab:red",
                          label=f"predicted slope {predicted:.2f} asymptote")
            else:
                ax.loglog(grid, y0 * (grid / x0) ** predicted, "--",
                          color="tab:red", label=f"predicted slope {predicted:.2f}")
    elif xs.size == 1:
        ax.annotate(f"single point: Var = {ys[0]:.4g}", (xs[0], ys[0]),
                    textcoords="offset points", xytext=(10, 10))
    ax.set_xlabel("scale n")
    ax.set_ylabel("unnormalized variance")
    ax.set_title("Occupation-fluctuation variance growth")
    ax.legend(loc="best", fontsize=8)
    _annotate(fig, results)
    fig.savefig(out_path, format="svg", bbox_inches="tight")
    plt.close(fig)


def plot_histogram(results, records, out_path):
    n_max, t_max, values = _largest_cell(results, records)
    mean, sd = _moments(results, n_max, t_max)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.hist(values, bins=max(10, min(60, values.size // 20)), density=True,
            color="tab:blue", alpha=0.6, label=f"samples (M={values.size})")
    if sd > 0:
        grid = np.linspace(values.min(), values.max(), 300)
        pdf = np.exp(-0.5 * ((grid - mean) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        ax.plot(grid, pdf, "-", color="tab:red",
                label=f"normal fit (mean {mean:.3f}, sd {sd:.3f})")
    normality = results.get("normality", {})
    if normality:
        ax.set_title(f"Samples at n={n_max}, t={t_max} "
                     f"(skew {normality.get('skewness', float('nan')):.2f}, "
                     f"KS {normality.get('ks_statistic', float('nan')):.3f})")
    else:
        ax.set_title(f"Samples at n={n_max}, t={t_max}")
    ax.set_xlabel("fluctuation value")
    ax.set_ylabel("density")
    ax.legend(loc="best", fontsize=8)
    _annotate(fig, results)
    fig.savefig(out_path, format="svg", bbox_inches="tight")
    plt.close(fig)


def _normal_quantiles(p):
    # Acklam/Moro-style rational approximation of the normal quantile,
    # good to ~1e-9; display-grade only
    p = np.asarray(p, dtype=float)
    a = [-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00]
    b = [-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01]
    c = [-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00]
    d = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00]
    out = np.empty_like(p)
    lo = p < 0.02425
    hi = p > 1 - 0.02425
    mid = ~(lo | hi)
    if lo.any():
        q = np.sqrt(-2 * np.log(p[lo]))
        out[lo] = ((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                   / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1))
    if hi.any():
        q = np.sqrt(-2 * np.log(1 - p[hi]))
        out[hi] = -((((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                    / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1))
    if mid.any():
        q = p[mid] - 0.5
        r = q * q
        out[mid] = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
                    / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1))
    return out


def plot_qq(results, records, out_path):
    n_max, t_max, values = _largest_cell(results, records)
    mean, sd = _moments(results, n_max, t_max)
    ordered = np.sort(values)
    m = ordered.size
    probs = (np.arange(1, m + 1) - 0.5) / m
    theory = _normal_quantiles(probs)
    standardized = (ordered - mean) / sd if sd > 0 else ordered - mean
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    ax.plot(theory, standardized, ".", markersize=3, color="tab:blue",
            label="sample quantiles")
    lim = max(abs(theory[0]), abs(theory[-1]),
              abs(standardized[0]), abs(standardized[-1])) * 1.05
    ax.plot([-lim, lim], [-lim, lim], "-", color="tab:red", linewidth=1,
            label="reference diagonal")
    ax.set_xlabel("normal quantiles")
    ax.set_ylabel("standardized sample quantiles")
    ax.set_title(f"QQ plot at n={n_max}, t={t_max}")
    ax.legend(loc="best", fontsize=8)
    _annotate(fig, results)
    fig.savefig(out_path, format="svg", bbox_inches="tight")
    plt.close(fig)


def plot_correlation_heatmap(results, out_path):
    n_max = max(int(n) for n in results["n_schedule"])
    t_grid = [float(t) for t in results["t_grid"]]
    corr = results.get("correlations", {}).get(str(n_max))
    fig, ax = plt.subplots(figsize=(5.4, 4.6))
    if corr:
        matrix = np.asarray(corr, dtype=float)
        image = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis",
                          origin="lower")
        for i in range(matrix.shape[0]):
            for j in range(matrix.shape[1]):
                ax.text(j, i, f"{matrix[i, j]:.3f}", ha="center", va="center",
                        fontsize=8,
                        color="white" if matrix[i, j] < 0.7 else "black")
        ax.set_xticks(range(len(t_grid)), [f"t={t}" for t in t_grid])
        ax.set_yticks(range(len(t_grid)), [f"t={t}" for t in t_grid])
        fig.colorbar(image, ax=ax, label="Pearson correlation")
    else:
        ax.text(0.5, 0.5, "correlation matrix unavailable\n(single time point "
                "or degenerate input)", ha="center", va="center",
                transform=ax.transAxes)
        ax.set_xticks([])
        ax.set_yticks([])
    ax.set_title(f"Cross-time correlation at n={n_max}")
    _annotate(fig, results)
    fig.savefig(out_path, format="svg", bbox_inches="tight")
    plt.close(fig)


def render(summary_path, samples_path, out_dir):
    """Write the four figures; returns the list of written file paths.

    Re-running overwrites the identically named files (idempotent).
    """
    results = _load_summary(summary_path)
    records = _load_samples(samples_path)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    targets = {
        "variance_vs_n.svg": lambda p: plot_variance_vs_n(results, p),
        "samples_histogram.svg": lambda p: plot_histogram(results, records, p),
        "qq_plot.svg": lambda p: plot_qq(results, records, p),
        "correlation_heatmap.svg": lambda p: plot_correlation_heatmap(results, p),
    }
    for name in FIGURE_NAMES:
        path = os.path.join(out_dir, name)
        targets[name](path)
        written.append(path)
    return written
