"""Scaling experiments, concentration probes, and report persistence."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import batch
from .dyadic_lb import sample_constructions
from .greedy_chain import chain_lengths
from .stats import Aggregate, ExponentFit, loglog_fit
from .walkgen import StepLaw

__all__ = [
    "Aggregate",
    "ExperimentSpec",
    "ExponentFit",
    "STATISTICS",
    "ScalingResult",
    "dumps",
    "fit_exponent",
    "load_report",
    "max_concentration_probe",
    "persist_report",
    "petrov_probe",
    "render_plots",
    "report_dict",
    "rows_csv",
    "run_scaling",
    "trial_values",
]

STATISTICS = ("exact-lis", "record-count", "level-set", "dyadic-A", "greedy-chain")


@dataclass(frozen=True)
class ExperimentSpec:
    law: StepLaw
    sizes: tuple
    trials: int
    statistic: str
    seed: int
    cap: int = 10**6  # step cap for stopped walks (dyadic-A)

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(n) for n in self.sizes))
        if self.statistic not in STATISTICS:
            raise ValueError(f"unknown statistic {self.statistic!r}; choose from {', '.join(STATISTICS)}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be strictly increasing")
        if any(n < 1 for n in self.sizes):
            raise ValueError("sizes must be positive")
        if self.statistic in ("record-count", "level-set", "dyadic-A") and self.law.d != 1:
            raise ValueError(f"{self.statistic} is defined for one-dimensional walks")
        if self.statistic == "level-set" and not self.law.lattice:
            raise ValueError("level-set needs a lattice law")
        if self.statistic == "dyadic-A":
            if self.law.kind != "simple":
                raise ValueError("dyadic-A needs the simple law")
            if any(n < 2 or n & (n - 1) for n in self.sizes):
                raise ValueError("dyadic-A sizes are target levels and must be powers of two >= 2")

    def to_dict(self) -> dict:
        return {"law": str(self.law), "d": self.law.d, "sizes": list(self.sizes), "trials": self.trials,
                "statistic": self.statistic, "seed": str(self.seed), "cap": self.cap}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        return cls(StepLaw.parse(d["law"], d["d"]), tuple(d["sizes"]), d["trials"], d["statistic"],
                   int(d["seed"]), d["cap"])


def _work(spec: ExperimentSpec, n: int) -> int:
    if spec.statistic == "exact-lis" and spec.law.d > 1:
        return spec.trials * n * n
    if spec.statistic == "dyadic-A":
        return spec.trials * n * n  # expected stopped length after the last zero is O(level^2)
    return spec.trials * n


def trial_values(spec: ExperimentSpec, n: int, threads: int = 1):
    """Per-trial statistic at size n, the trial ids that produced it, and the censored count.

    Trial t of size n reads the stream (seed, n, t), whatever the statistic,
    so different statistics at the same size see the same walks.
    """
    law, T = spec.law, spec.trials
    base = batch.base_key(spec.seed, n)
    ids = np.arange(T)
    if spec.statistic == "exact-lis":
        return batch.lnds_lengths(law, n, T, base, threads=threads), ids, 0
    if spec.statistic == "record-count":
        return batch.record_counts(law, n, T, base, threads), ids, 0
    if spec.statistic == "level-set":
        return batch.level_set_sizes(law, n, T, base, threads), ids, 0
    if spec.statistic == "greedy-chain":
        return chain_lengths(law, n + 1, T, spec.seed, threads, stream=(n,)), ids, 0
    sample = sample_constructions(n.bit_length() - 1, T, spec.seed, cap=spec.cap, stream=(n,))
    return sample.sizes, sample.trial_ids, sample.censored


@dataclass
class ScalingRow:
    n: int
    aggregate: Aggregate
    censored: int = 0


@dataclass
class ScalingResult:
    spec: ExperimentSpec
    rows: list = field(default_factory=list)
    partial: bool = False

    @property
    def table(self) -> dict:
        return {r.n: r.aggregate for r in self.rows}

    def fit(self, window=None) -> ExponentFit:
        return fit_exponent(self.table, window)


def run_scaling(spec: ExperimentSpec, threads: int = 1, budget: int | None = None) -> ScalingResult:
    """Aggregate the statistic at each size; stop early once ``budget`` steps would be exceeded."""
    result = ScalingResult(spec)
    spent = 0
    for n in spec.sizes:
        cost = _work(spec, n)
        if budget is not None and spent + cost > budget:
            result.partial = True
            break
        spent += cost
        values, ids, censored = trial_values(spec, n, threads)
        result.rows.append(ScalingRow(n, Aggregate.of(values, n=n, trial_ids=ids.tolist()), censored))
    return result


def fit_exponent(table, window=None) -> ExponentFit:
    """Least-squares slope of log2 mean against log2 n.

    ``table`` maps n to an Aggregate or to a plain mean.
    """
    ns = sorted(table)
    means = [table[n].mean if isinstance(table[n], Aggregate) else float(table[n]) for n in ns]
    keep = [i for i, m in enumerate(means) if math.isfinite(m)]
    return loglog_fit([ns[i] for i in keep], [means[i] for i in keep], window)


# -- probes ----------------------------------------------------------------

@dataclass(frozen=True)
class PetrovProbe:
    n: int
    lam: float
    trials: int
    sup: float
    argsup: float
    c_hat: float  # sup * sqrt(n) / (lam + 1)


def petrov_probe(law: StepLaw, n: int, lam: float, trials: int, seed: int, x_grid=None,
                 threads: int = 1) -> PetrovProbe:
    """Grid supremum of the empirical P(x <= S(n) <= x + lam)."""
    finals = np.sort(batch.final_positions(law, n, trials, batch.base_key(seed, n), threads))
    if x_grid is None:
        step = law.spacing / 2 if law.lattice else max(lam, 1.0) / 8
        lo = math.floor(finals[0] - lam) - 1
        x_grid = np.arange(lo, finals[-1] + step, step)
    x_grid = np.asarray(x_grid, dtype=float)
    # small tolerance so lattice points on the interval ends count despite rounding
    tol = 1e-9 * max(1.0, float(np.abs(finals).max(initial=0.0)))
    hits = (np.searchsorted(finals, x_grid + lam + tol, side="right")
            - np.searchsorted(finals, x_grid - tol, side="left"))
    i = int(np.argmax(hits))
    sup = hits[i] / trials
    return PetrovProbe(n, lam, trials, float(sup), float(x_grid[i]), float(sup * math.sqrt(n) / (lam + 1)))


@dataclass(frozen=True)
class MaxRow:
    lam: float
    tail: float
    stderr: float
    chebyshev: float  # 1 / lam^2


@dataclass(frozen=True)
class MaxProbe:
    n: int
    trials: int
    rows: tuple
    exp_slope: float | None  # slope of -log(tail) on lam^2
    exp_r2: float | None


def max_concentration_probe(law: StepLaw, n: int, lambda_grid, trials: int, seed: int,
                            threads: int = 1) -> MaxProbe:
    """Empirical P(max_{i<=n} |S(i)| >= lam sqrt(n)) next to 1/lam^2 and a Gaussian-tail fit."""
    m = batch.max_abs(law, n, trials, batch.base_key(seed, n), threads)
    rows = []
    for lam in lambda_grid:
        p = float(np.mean(m >= lam * math.sqrt(n)))
        rows.append(MaxRow(float(lam), p, math.sqrt(p * (1 - p) / trials),
                           1 / lam**2 if lam > 0 else math.inf))
    usable = [r for r in rows if 0 < r.tail < 1]
    slope = r2 = None
    if len(usable) >= 3:
        x = np.array([r.lam**2 for r in usable])
        y = -np.log([r.tail for r in usable])
        coef = np.polyfit(x, y, 1)
        resid = y - np.polyval(coef, x)
        slope = float(coef[0])
        r2 = float(1 - resid.var() / y.var()) if y.var() > 0 else 1.0
    return MaxProbe(n, trials, tuple(rows), slope, r2)


# -- reports ---------------------------------------------------------------

def _exact_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _finite(x):
    """JSON has no NaN; statistics of an empty row become null."""
    return None if isinstance(x, float) and not math.isfinite(x) else x


def _row_dict(spec: ExperimentSpec, row: ScalingRow) -> dict:
    a = row.aggregate
    return {k: _finite(v) for k, v in {
        "statistic": spec.statistic, "law": str(spec.law), "n": row.n, "trials": spec.trials,
        "count": a.count, "censored": row.censored,
        "mean": a.mean, "var": a.variance, "stderr": a.stderr,
        "min": a.min, "max": a.max,
        "q50": a.quantile(0.5), "q90": a.quantile(0.9), "q99": a.quantile(0.99),
        "quantiles_exact": a.quantiles_exact,
        "sum": _exact_str(a.total), "sum_sq": _exact_str(a.total_sq),
    }.items()}


def report_dict(results, window=None) -> dict:
    """JSON-ready report for one or more scaling results."""
    if isinstance(results, ScalingResult):
        results = [results]
    out = {"experiments": []}
    for res in results:
        fits = []
        if sum(r.aggregate.count > 0 for r in res.rows) >= 3:
            fit = res.fit(window)
            fits.append({"statistic": res.spec.statistic, **fit.to_dict()})
        out["experiments"].append({
            "spec": res.spec.to_dict(),
            "partial": res.partial,
            "rows": [_row_dict(res.spec, r) for r in res.rows],
            "fits": fits,
        })
    return out


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def persist_report(results, path) -> Path:
    """Write the JSON report; scaling results are converted first."""
    report = results if isinstance(results, dict) else report_dict(results)
    path = Path(path)
    try:
        path.write_text(dumps(report))
    except OSError as err:
        raise OSError(f"cannot write report to {path}: {err}") from err
    return path


def load_report(path) -> dict:
    return json.loads(Path(path).read_text())


CSV_COLUMNS = ["statistic", "law", "n", "trials", "mean", "var", "q50", "q90", "q99", "stderr"]


def rows_csv(results) -> str:
    report = results if isinstance(results, dict) else report_dict(results)
    buf = io.StringIO()
    w = csv.DictWriter(buf, CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for exp in report["experiments"]:
        for row in exp["rows"]:
            w.writerow(row)
    return buf.getvalue()


_W, _H, _PAD = 640, 420, 60
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def render_plots(results, path=None) -> str:
    """Log-log SVG chart: one series per experiment, points plus fitted line.

    Data coordinates (log2 n, log2 mean) are carried in ``data-*`` attributes.
    """
    report = results if isinstance(results, dict) else report_dict(results)
    series = []
    for exp in report["experiments"]:
        pts = [(math.log2(r["n"]), math.log2(r["mean"])) for r in exp["rows"]
               if r["mean"] is not None and r["mean"] > 0]
        fit = exp["fits"][0] if exp["fits"] else None
        series.append((exp["spec"]["statistic"], pts, fit))
    allpts = [p for _, pts, _ in series for p in pts]
    if allpts:
        x0, x1 = min(p[0] for p in allpts), max(p[0] for p in allpts)
        y0, y1 = min(p[1] for p in allpts), max(p[1] for p in allpts)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def sy(y):
        return _H - _PAD - (y - y0) / (y1 - y0) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text class="xlabel" x="{_W / 2}" y="{_H - 15}" text-anchor="middle">log₂ n</text>',
        f'<text class="ylabel" x="18" y="{_H / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {_H / 2})">log₂ mean</text>',
    ]
    for i, (name, pts, fit) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        parts.append(f'<g class="series" data-statistic="{name}">')
        for x, y in pts:
            parts.append(f'<circle class="point" cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}" '
                         f'data-x="{x!r}" data-y="{y!r}"/>')
        if fit is not None and pts:
            xa, xb = pts[0][0], pts[-1][0]
            ya = fit["intercept"] + fit["slope"] * xa
            yb = fit["intercept"] + fit["slope"] * xb
            parts.append(f'<line class="fit" x1="{sx(xa):.2f}" y1="{sy(ya):.2f}" x2="{sx(xb):.2f}" '
                         f'y2="{sy(yb):.2f}" stroke="{color}" data-slope="{fit["slope"]!r}" '
                         f'data-x1="{xa!r}" data-y1="{ya!r}" data-x2="{xb!r}" data-y2="{yb!r}"/>')
        parts.append(f'<text x="{_W - _PAD}" y="{_PAD + 16 * i}" text-anchor="end" fill="{color}">{name}</text>')
        parts.append("</g>")
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        try:
            Path(path).write_text(svg)
        except OSError as err:
            raise OSError(f"cannot write plot to {path}: {err}") from err
    return svg
