"""Desk-scale experiments: noise sweep, method comparison, model validation,
composition estimation, and their CSV/SVG reporting.

Every sweep cell is a pure function of (scenario, method, noise sd, seed,
method config), so cells can run in any order or in parallel and the
aggregated tables are byte-identical across runs.  Wall-clock timings are
kept out of the metric tables and written separately.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .baselines import nmf_signatures, spa
from .composition import estimate_compositions
from .core import AbundanceMatrix, SignatureSet, StandardizedData, atomic_write_text
from .hyperion import HyperionConfig, fcls, hyperion_unmix
from .metrics import align_signatures, pca_project_2d, rmse, sam_degrees
from .preprocess import standardize
from .synth import NoiseSpec, Scenario, build_dataset

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "MethodConfig",
    "UnmixOutput",
    "unmix",
    "CellResult",
    "SweepResult",
    "run_cell",
    "run_noise_sweep",
    "run_method_comparison",
    "comparison_table",
    "run_model_validation",
    "run_composition_experiment",
    "format_table",
    "write_table",
    "read_table",
    "plot_sweep",
    "plot_spectra_overlay",
    "plot_pca",
    "plot_metrics_csv",
    "SWEEP_COLUMNS",
    "METRIC_COLUMNS",
    "SUMMARY_COLUMNS",
]

METHODS = ("hyperion", "nmf", "spa")


# ---------------------------------------------------------------------------
# one-call unmixing for any method

@dataclass(frozen=True)
class MethodConfig:
    lam: float = 1.0
    max_iters: int = 500
    rel_tol: float = 1e-8
    nmf_trials: int = 10
    nmf_max_iter: int = 1000

    def hash(self, method: str, q: int) -> str:
        keys = {"hyperion": ("lam", "max_iters", "rel_tol"), "nmf": ("nmf_trials", "nmf_max_iter"), "spa": ()}[method]
        payload = {"method": method, "q": q, **{k: getattr(self, k) for k in keys}}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class UnmixOutput:
    signatures: SignatureSet
    abundances: AbundanceMatrix
    info: dict = field(default_factory=dict)


def _stochastic(T: np.ndarray) -> np.ndarray:
    T = np.maximum(T, 0.0)
    s = T.sum(axis=0)
    s[s == 0] = 1.0
    return T / s


def unmix(X: StandardizedData, method: str, q: int, seed: int = 0, cfg: MethodConfig = MethodConfig()) -> UnmixOutput:
    """Unmix standardized data with ``hyperion``, ``nmf`` or ``spa``."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if q > X.n_samples:
        raise ValueError(f"q={q} exceeds the number of samples ({X.n_samples})")
    labels = tuple(f"m{i + 1}" for i in range(q))
    if method == "hyperion":
        res = hyperion_unmix(X, HyperionConfig(q=q, lam=cfg.lam, max_iters=cfg.max_iters, rel_tol=cfg.rel_tol, seed=seed))
        info = {"objective_trace": res.objective_trace, "iterations": res.iterations, "rejected_steps": res.rejected_steps}
        return UnmixOutput(res.signatures, res.abundances, info)
    if method == "nmf":
        W, H, res = nmf_signatures(X.X, q, cfg.nmf_trials, seed, cfg.nmf_max_iter)
        info = {"D": res.D, "best_trial": res.trial, "D_trace": res.D_trace}
        return UnmixOutput(SignatureSet(X.grid, W, labels), AbundanceMatrix(_stochastic(H), labels, X.labels), info)
    idx = spa(X.X, q)
    S = X.X[:, idx]
    T = fcls(S, X.X)
    info = {"selected": [X.labels[i] for i in idx]}
    return UnmixOutput(SignatureSet(X.grid, S, labels), AbundanceMatrix(_stochastic(T), labels, X.labels), info)


# ---------------------------------------------------------------------------
# sweep cells

SWEEP_COLUMNS = ("scenario", "scenario_hash", "method", "config_hash", "sd_percent", "seed",
                 "status", "mean_sam_deg", "mean_rmse_cm")
METRIC_COLUMNS = ("scenario", "scenario_hash", "method", "config_hash", "material", "sd_percent", "seed",
                  "status", "sam_deg", "rmse_cm")
SUMMARY_COLUMNS = ("method", "sd_percent", "n_ok", "n_failed", "median_sam_deg", "q1_sam_deg", "q3_sam_deg",
                   "median_rmse_cm", "q1_rmse_cm", "q3_rmse_cm")


@dataclass
class CellResult:
    row: dict
    materials: list[dict]
    seconds: float


def run_cell(scenario: Scenario, method: str, sd_percent: float, seed: int, cfg: MethodConfig = MethodConfig()) -> CellResult:
    """Generate, standardize, unmix and score one (method, sd, seed) cell.

    Solver failures are caught and reported in ``status``.
    """
    base = {
        "scenario": scenario.name,
        "scenario_hash": scenario.hash(),
        "method": method,
        "config_hash": cfg.hash(method, scenario.q),
        "sd_percent": float(sd_percent),
        "seed": int(seed),
    }
    start = time.perf_counter()
    try:
        ds = build_dataset(scenario, NoiseSpec(sd_percent, scenario.noise.traces_averaged), seed)
        X = standardize(ds.spectra)
        out = unmix(X, method, scenario.q, seed, cfg)
        al = align_signatures(out.signatures, ds.signatures)
        row = dict(base, status="ok", mean_sam_deg=al.mean_sam, mean_rmse_cm=al.mean_rmse)
        mats = [dict(base, material=lb, status="ok", sam_deg=float(s), rmse_cm=float(r))
                for lb, s, r in zip(al.labels, al.sam, al.rmse)]
    except Exception as exc:  # failure isolation: record, never abort the sweep
        msg = f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")
        row = dict(base, status=msg, mean_sam_deg=float("nan"), mean_rmse_cm=float("nan"))
        mats = [dict(base, material=m.label, status=msg, sam_deg=float("nan"), rmse_cm=float("nan"))
                for m in scenario.materials]
    return CellResult(row, mats, time.perf_counter() - start)


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class SweepResult:
    rows: list[dict]
    materials: list[dict]
    summary: list[dict]
    timings: list[dict]

    @property
    def ok(self) -> bool:
        return all(r["status"] == "ok" for r in self.rows)

    def values(self, method: str, sd: float, key: str = "mean_rmse_cm") -> np.ndarray:
        return np.array([r[key] for r in self.rows
                         if r["method"] == method and r["sd_percent"] == sd and r["status"] == "ok"])

    def median(self, method: str, sd: float, key: str = "mean_rmse_cm") -> float:
        v = self.values(method, sd, key)
        return float(np.median(v)) if v.size else float("nan")


def _summarize(rows: list[dict]) -> list[dict]:
    keys = sorted({(r["method"], r["sd_percent"]) for r in rows}, key=lambda k: (METHODS.index(k[0]) if k[0] in METHODS else 99, k[1]))
    out = []
    for method, sd in keys:
        cell = [r for r in rows if r["method"] == method and r["sd_percent"] == sd]
        ok = [r for r in cell if r["status"] == "ok"]
        entry = {"method": method, "sd_percent": sd, "n_ok": len(ok), "n_failed": len(cell) - len(ok)}
        for key, name in (("mean_sam_deg", "sam_deg"), ("mean_rmse_cm", "rmse_cm")):
            v = np.array([r[key] for r in ok])
            q1, med, q3 = np.percentile(v, [25, 50, 75]) if v.size else (np.nan,) * 3
            entry.update({f"median_{name}": float(med), f"q1_{name}": float(q1), f"q3_{name}": float(q3)})
        out.append(entry)
    return out


def run_noise_sweep(
    scenario: Scenario,
    sd_grid: Sequence[float],
    seeds: Sequence[int],
    methods: Sequence[str] = ("hyperion",),
    cfg: MethodConfig = MethodConfig(),
    jobs: int = 1,
) -> SweepResult:
    """Score every (sd, seed, method) cell; medians and quartiles per (sd, method)."""
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    if not sd_grid or not seeds:
        raise ValueError("need at least one noise level and one seed")
    if len(seeds) < 3:
        warnings.warn(f"noise sweep with only {len(seeds)} seed(s); quartiles are not meaningful", stacklevel=2)
    tasks = [(scenario, m, float(sd), int(s), cfg) for sd in sd_grid for s in seeds for m in methods]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_args, tasks))
    else:
        results = [_run_cell_args(t) for t in tasks]
    order = sorted(range(len(tasks)), key=lambda i: (tasks[i][2], tasks[i][3], METHODS.index(tasks[i][1])))
    rows = [results[i].row for i in order]
    mats = [m for i in order for m in results[i].materials]
    timings = [{"method": tasks[i][1], "sd_percent": tasks[i][2], "seed": tasks[i][3], "seconds": results[i].seconds}
               for i in order]
    return SweepResult(rows, mats, _summarize(rows), timings)


def run_method_comparison(scenario: Scenario, sd_grid, seeds, cfg: MethodConfig = MethodConfig(), jobs: int = 1) -> SweepResult:
    return run_noise_sweep(scenario, sd_grid, seeds, METHODS, cfg, jobs)


def comparison_table(result: SweepResult, materials: Sequence[str], methods: Sequence[str] = METHODS) -> list[dict]:
    """Rows per sd level; one median-RMSE column per (material, method)."""
    sds = sorted({r["sd_percent"] for r in result.rows})
    table = []
    for sd in sds:
        entry = {"sd_percent": sd}
        for mat in materials:
            for m in methods:
                v = [r["rmse_cm"] for r in result.materials
                     if r["sd_percent"] == sd and r["method"] == m and r["material"] == mat and r["status"] == "ok"]
                entry[f"{mat}_{m}"] = float(np.median(v)) if v else float("nan")
        table.append(entry)
    return table


# ---------------------------------------------------------------------------
# linear-model validation and composition

def _pure_indices(scenario: Scenario) -> list[int]:
    idx = []
    for i in range(scenario.q):
        hits = [j for j, r in enumerate(scenario.samples) if r.weights[i] == 1.0]
        if not hits:
            raise ValueError(f"model validation needs a pure sample of {scenario.materials[i].label!r}")
        idx.append(hits[0])
    return idx


def run_model_validation(scenario: Scenario, sd_percent: float | None = None, seed: int | None = None) -> dict:
    """Compare each mixture with the weighted sum of the measured pure columns.

    Returns ``rows`` (sample, SAM, RMSE) and ``pca`` (2-D coordinates of every
    column on the plane fitted to the pure columns).
    """
    noise = scenario.noise if sd_percent is None else NoiseSpec(sd_percent, scenario.noise.traces_averaged)
    ds = build_dataset(scenario, noise, seed)
    X = standardize(ds.spectra)
    pures = _pure_indices(scenario)
    P = X.X[:, pures]
    rows = []
    for j, row in enumerate(scenario.samples):
        if j in pures:
            continue
        sim = P @ np.asarray(row.weights)
        rows.append({"sample": row.label, "sam_deg": sam_degrees(sim, X.X[:, j]), "rmse_cm": rmse(sim, X.X[:, j])})
    fit_on = pures if len(pures) >= 3 else list(range(X.n_samples))
    coords = pca_project_2d(X, fit_on)
    pca = [{"sample": lb, "pure": j in pures, "pc1": float(coords[0, j]), "pc2": float(coords[1, j])}
           for j, lb in enumerate(X.labels)]
    return {"rows": rows, "pca": pca}


def run_composition_experiment(train: Scenario, test: Scenario, sd_percent: float, seed: int = 0,
                               cfg: MethodConfig = MethodConfig()) -> dict:
    """Blind library from ``train`` (HYPERION), then L1 proportions of every ``test`` sample.

    The library columns are matched to the true materials only to name them.
    """
    if [m.label for m in train.materials] != [m.label for m in test.materials]:
        raise ValueError("training and test scenarios must share the material list")
    dtr = build_dataset(train, NoiseSpec(sd_percent, train.noise.traces_averaged), seed)
    dte = build_dataset(test, NoiseSpec(sd_percent, test.noise.traces_averaged), seed + 1)
    out = unmix(standardize(dtr.spectra), "hyperion", train.q, seed, cfg)
    al = align_signatures(out.signatures, dtr.signatures)
    lib = SignatureSet(out.signatures.grid, out.signatures.S[:, list(al.permutation)], dtr.signatures.labels)
    R = estimate_compositions(standardize(dte.spectra), lib)
    truth = dte.abundances.T
    rows = []
    for j, lb in enumerate(dte.abundances.samples):
        entry = {"sample": lb}
        for i, m in enumerate(lib.labels):
            entry[f"{m}_true"] = float(truth[i, j])
            entry[f"{m}_est"] = float(R[i, j])
            entry[f"{m}_abs_err"] = float(abs(R[i, j] - truth[i, j]))
        rows.append(entry)
    return {"rows": rows, "library": lib, "estimates": R, "truth": truth,
            "max_abs_error": float(np.abs(R - truth).max())}


# ---------------------------------------------------------------------------
# tables

def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_table(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    columns = list(columns if columns is not None else (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def write_table(rows: Sequence[dict], path, columns: Sequence[str] | None = None):
    atomic_write_text(path, format_table(rows, columns))


def read_table(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k, v in r.items():
            try:
                r[k] = float(v)
            except (TypeError, ValueError):
                pass
    return rows


# ---------------------------------------------------------------------------
# SVG plots (matplotlib with fixed hash salt and no timestamp, so reruns diff clean)

def _figure():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "thzunmix"
    return plt


def _save_svg(fig, path):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    atomic_write_text(path, buf.getvalue())


def plot_sweep(summary: Sequence[dict], path, metric: str = "rmse_cm"):
    """Median (with interquartile bars) of ``metric`` against noise sd per method."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for m in [m for m in METHODS if any(r["method"] == m for r in summary)]:
        rs = sorted((r for r in summary if r["method"] == m), key=lambda r: r["sd_percent"])
        x = np.array([r["sd_percent"] for r in rs])
        med = np.array([r[f"median_{metric}"] for r in rs])
        lo = med - np.array([r[f"q1_{metric}"] for r in rs])
        hi = np.array([r[f"q3_{metric}"] for r in rs]) - med
        ax.errorbar(x, med, yerr=np.vstack([lo, hi]), marker="o", capsize=3, label=m)
    if all(r["sd_percent"] > 0 for r in summary):
        ax.set_xscale("log")
    ax.set_xlabel("noise sd (% of peak-to-peak)")
    ax.set_ylabel({"rmse_cm": "RMSE (cm$^{-1}$)", "sam_deg": "SAM (deg)"}[metric])
    ax.legend()
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_spectra_overlay(estimate: SignatureSet, truth: SignatureSet, path_for_label, permutation=None):
    """One SVG per material: matched estimate over ground truth."""
    plt = _figure()
    perm = permutation if permutation is not None else align_signatures(estimate, truth).permutation
    f = truth.grid.frequencies
    paths = []
    for i, lb in enumerate(truth.labels):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(f, truth.S[:, i], "k-", label="ground truth")
        ax.plot(f, estimate.S[:, perm[i]], "r--", label="unmixed")
        ax.set_xlabel("frequency (THz)")
        ax.set_ylabel("absorption (cm$^{-1}$)")
        ax.set_title(lb)
        ax.legend()
        fig.tight_layout()
        p = path_for_label(lb)
        _save_svg(fig, p)
        plt.close(fig)
        paths.append(p)
    return paths


def plot_pca(pca_rows: Sequence[dict], path):
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 4))
    for r in pca_rows:
        pure = r["pure"] in (True, "true", 1.0)
        ax.plot(r["pc1"], r["pc2"], "s" if pure else "o", color="k" if pure else "tab:blue")
        ax.annotate(str(r["sample"]), (r["pc1"], r["pc2"]), fontsize=7)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    fig.tight_layout()
    _save_svg(fig, path)
    plt.close(fig)


def plot_metrics_csv(rows: Sequence[dict], path_for_label, metric: str = "rmse_cm") -> list:
    """From a per-material metrics table: one SVG per material of median ``metric`` vs sd."""
    plt = _figure()
    paths = []
    materials = sorted({r["material"] for r in rows}, key=lambda m: [r["material"] for r in rows].index(m))
    for mat in materials:
        fig, ax = plt.subplots(figsize=(6, 4))
        sub = [r for r in rows if r["material"] == mat and r["status"] == "ok"]
        for m in [m for m in METHODS if any(r["method"] == m for r in sub)]:
            sds = sorted({r["sd_percent"] for r in sub if r["method"] == m})
            med = [float(np.median([r[metric] for r in sub if r["method"] == m and r["sd_percent"] == sd])) for sd in sds]
            ax.plot(sds, med, marker="o", label=m)
        ax.set_xlabel("noise sd (% of peak-to-peak)")
        ax.set_ylabel(metric)
        ax.set_title(str(mat))
        ax.legend()
        fig.tight_layout()
        p = path_for_label(str(mat))
        _save_svg(fig, p)
        plt.close(fig)
        paths.append(p)
    return paths
