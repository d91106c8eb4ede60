"""Command-line front end: ``thzunmix <subcommand> ...``.

Subcommands mirror the pipeline stages (generate, preprocess, unmix,
sweep-noise, compare, estimate-composition, validate-model, plot).  Outputs
go to ``--out`` or, by default, to ``$HYPERION_DATA_DIR/<subcommand>``
(``./hyperion_out`` when the variable is unset).  Each run writes a
``manifest.json`` with the arguments, output hashes and status; files are
written atomically.  Exit status is 0 only when everything requested
succeeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    DEFAULT_BAND,
    DatasetFormatError,
    SignatureSet,
    StandardizedData,
    atomic_write_text,
    read_abundances,
    read_dataset,
    read_signatures,
    restrict_band,
    spectra_from_csv,
    spectra_to_csv,
    write_abundances,
    write_dataset,
    write_signatures,
)
from .composition import estimate_composition
from .experiments import (
    METHODS,
    METRIC_COLUMNS,
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    MethodConfig,
    comparison_table,
    plot_metrics_csv,
    plot_pca,
    plot_spectra_overlay,
    plot_sweep,
    read_table,
    run_model_validation,
    run_noise_sweep,
    unmix,
    write_table,
)
from .metrics import align_signatures
from .preprocess import standardize
from .synth import NoiseSpec, ScenarioError, build_dataset, load_scenario

log = logging.getLogger("thzunmix")

ENV_DATA_DIR = "HYPERION_DATA_DIR"


class CLIError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers

def parse_band(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"band must be 'lo:hi' in THz, got {text!r}") from None
    if not 0 <= lo < hi:
        raise argparse.ArgumentTypeError(f"band needs 0 <= lo < hi, got {text!r}")
    return lo, hi


def parse_floats(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("noise levels must be a nonempty list of nonnegative numbers")
    return vals


def parse_seeds(text: str) -> list[int]:
    """``0-9``, ``1,4,7`` or a mix such as ``0-2,10``."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part[1:]:
                a, b = part.split("-", 1) if not part.startswith("-") else (part, None)
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"cannot parse seeds {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty seed list")
    return out


def parse_methods(text: str) -> list[str]:
    ms = [t.strip() for t in text.split(",") if t.strip()]
    bad = [m for m in ms if m not in METHODS]
    if bad or not ms:
        raise argparse.ArgumentTypeError(f"methods must be from {', '.join(METHODS)}; got {text!r}")
    return ms


def _out_dir(args, name: str) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(ENV_DATA_DIR) or "hyperion_out"
    return Path(root) / name


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(out: Path, command: str, args, outputs: list[Path], status: str, extra: dict | None = None):
    skip = {"func", "out"}
    arg_dump = {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(vars(args).items()) if k not in skip}
    arg_dump = json.loads(json.dumps(arg_dump, default=str))
    data = {
        "tool": "thzunmix",
        "version": __version__,
        "command": command,
        "args": arg_dump,
        "status": status,
        "outputs": {p.name: _sha(p) for p in outputs if p.exists()},
    }
    if extra:
        data.update(extra)
    atomic_write_text(out / "manifest.json", json.dumps(data, indent=2, sort_keys=True) + "\n")


def _load_scenario(args):
    try:
        sc = load_scenario(args.scenario)
    except KeyError as exc:
        raise CLIError(str(exc.args[0])) from None
    if getattr(args, "band", None) is not None:
        from dataclasses import replace

        sc = replace(sc, band=tuple(args.band))
    return sc


def _standardized(path: Path, band) -> StandardizedData:
    """A dataset file (standardized here) or a spectra CSV of absorption columns."""
    if not path.exists():
        raise CLIError(f"input file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("#grid"):
        spectra = read_dataset(path)
        if band is not None:
            spectra = restrict_band(spectra, *band)
        return standardize(spectra)
    labels, grid, M = spectra_from_csv(text)
    X = StandardizedData(grid, M, np.ones(M.shape[1]), tuple(labels))
    if band is not None:
        idx = grid.band_indices(*band)
        if idx.size < 2:
            raise CLIError(f"band {band} leaves fewer than 2 bands")
        X = StandardizedData(grid.subgrid(idx), M[idx], X.half_thicknesses, X.labels)
    return X


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    sc = _load_scenario(args)
    noise = sc.noise if args.sd is None else NoiseSpec(args.sd, sc.noise.traces_averaged)
    seed = args.seed if args.seed is not None else sc.seed
    ds = build_dataset(sc, noise, seed)
    out = _out_dir(args, "generate")
    files = [out / "dataset.dat", out / "truth_signatures.csv", out / "truth_abundances.csv", out / "scenario.txt"]
    write_dataset(ds.spectra, files[0])
    write_signatures(ds.signatures, files[1])
    write_abundances(ds.abundances, files[2])
    atomic_write_text(files[3], sc.to_text())
    _manifest(out, "generate", args, files, "ok", {"scenario_hash": sc.hash(), "n_samples": len(sc.samples)})
    print(f"wrote {len(sc.samples)} samples to {out}")
    return 0


def cmd_preprocess(args) -> int:
    X = _standardized(Path(args.dataset), args.band)
    out = _out_dir(args, "preprocess")
    f = out / "standardized.csv"
    atomic_write_text(f, spectra_to_csv(X.labels, X.grid, X.X))
    _manifest(out, "preprocess", args, [f], "ok")
    print(f"wrote {X.n_samples} standardized spectra ({X.grid.k} bands) to {f}")
    return 0


def _truth_for(dataset: Path, explicit):
    if explicit:
        return read_signatures(explicit)
    sib = dataset.parent / "truth_signatures.csv"
    return read_signatures(sib) if sib.exists() else None


def cmd_unmix(args) -> int:
    path = Path(args.dataset)
    X = _standardized(path, args.band)
    q = args.q
    if q is None:
        raise CLIError("--q (number of materials) is required for unmixing")
    cfg = MethodConfig(lam=args.lam)
    res = unmix(X, args.method, q, args.seed or 0, cfg)
    out = _out_dir(args, "unmix")
    files = [out / "signatures.csv", out / "abundances.csv", out / "run_log.json"]
    write_signatures(res.signatures, files[0])
    write_abundances(res.abundances, files[1])
    log_data = {"method": args.method, "q": q, "lambda": args.lam, "seed": args.seed or 0}
    log_data.update({k: (list(map(float, v)) if isinstance(v, list) and v and isinstance(v[0], float) else v)
                     for k, v in res.info.items()})
    atomic_write_text(files[2], json.dumps(log_data, indent=2, sort_keys=True, default=float) + "\n")
    truth = _truth_for(path, args.truth)
    if truth is not None:
        if not truth.grid.same_as(X.grid):
            idx = truth.grid.band_indices(X.grid.f_start, X.grid.f_stop)
            truth = SignatureSet(truth.grid.subgrid(idx), truth.S[idx], truth.labels)
        al = align_signatures(res.signatures, truth)
        rows = [{"method": args.method, "material": lb, "estimate": res.signatures.labels[p],
                 "sam_deg": float(s), "rmse_cm": float(r)}
                for lb, p, s, r in zip(al.labels, al.permutation, al.sam, al.rmse)]
        files.append(out / "metrics.csv")
        write_table(rows, files[-1])
        for r in rows:
            print(f"{r['material']:>12s}  SAM {r['sam_deg']:8.4f} deg  RMSE {r['rmse_cm']:8.4f} cm^-1")
    _manifest(out, "unmix", args, files, "ok")
    print(f"wrote {args.method} results to {out}")
    return 0


def _sweep_common(args, methods, name: str) -> int:
    sc = _load_scenario(args)
    base = args.seed if args.seed is not None else sc.seed
    seeds = args.seeds or list(sc.seeds) or list(range(base, base + 10))
    cfg = MethodConfig(lam=args.lam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_noise_sweep(sc, args.sd, seeds, methods, cfg, jobs=args.jobs)
    out = _out_dir(args, name)
    files = [out / "sweep.csv", out / "metrics.csv", out / "summary.csv"]
    write_table(res.rows, files[0], SWEEP_COLUMNS)
    write_table(res.materials, files[1], METRIC_COLUMNS)
    write_table(res.summary, files[2], SUMMARY_COLUMNS)
    if name == "compare":
        files.append(out / "comparison.csv")
        write_table(comparison_table(res, [m.label for m in sc.materials], methods), files[-1])
    files.append(out / f"{name}_rmse.svg")
    plot_sweep(res.summary, files[-1])
    # wall times are machine-dependent; kept out of the manifest hashes
    write_table(res.timings, out / "timings.csv")
    status = "ok" if res.ok else "failed"
    _manifest(out, name, args, files, status, {"scenario_hash": sc.hash(), "cells": len(res.rows),
                                               "failed_cells": sum(r["status"] != "ok" for r in res.rows)})
    for r in res.summary:
        print(f"{r['method']:>9s} sd={r['sd_percent']:<7g} median RMSE {r['median_rmse_cm']:.4g} cm^-1  "
              f"median SAM {r['median_sam_deg']:.4g} deg  ({r['n_ok']} ok, {r['n_failed']} failed)")
    return 0 if res.ok else 1


def cmd_sweep(args) -> int:
    return _sweep_common(args, args.methods, "sweep-noise")


def cmd_compare(args) -> int:
    return _sweep_common(args, list(METHODS), "compare")


def cmd_estimate(args) -> int:
    lib = read_signatures(args.library)
    X = _standardized(Path(args.samples), args.band)
    if not lib.grid.same_as(X.grid):
        idx = X.grid.band_indices(lib.grid.f_start, lib.grid.f_stop)
        if idx.size != lib.grid.k:
            raise CLIError("sample grid does not cover the library grid")
        X = StandardizedData(X.grid.subgrid(idx), X.X[idx], X.half_thicknesses, X.labels)
    R = np.column_stack([estimate_composition(X.X[:, j], lib, X.grid).r for j in range(X.n_samples)])
    out = _out_dir(args, "estimate-composition")
    rows = [{"sample": lb, **{m: float(R[i, j]) for i, m in enumerate(lib.labels)}} for j, lb in enumerate(X.labels)]
    files = [out / "composition.csv"]
    write_table(rows, files[0], ["sample", *lib.labels])
    if args.truth:
        truth = read_abundances(args.truth)
        order = [truth.samples.index(lb) for lb in X.labels]
        mat = [truth.materials.index(m) for m in lib.labels]
        cmp_rows = []
        for j, lb in enumerate(X.labels):
            e = {"sample": lb}
            for i, m in enumerate(lib.labels):
                t = float(truth.T[mat[i], order[j]])
                e.update({f"{m}_true": t, f"{m}_est": float(R[i, j]), f"{m}_abs_err": abs(float(R[i, j]) - t)})
            cmp_rows.append(e)
        files.append(out / "comparison.csv")
        write_table(cmp_rows, files[-1])
        worst = max(r[f"{m}_abs_err"] for r in cmp_rows for m in lib.labels)
        print(f"max absolute proportion error {100 * worst:.2f}%")
    _manifest(out, "estimate-composition", args, files, "ok")
    print(f"wrote proportions for {X.n_samples} samples to {files[0]}")
    return 0


def cmd_validate(args) -> int:
    sc = _load_scenario(args)
    res = run_model_validation(sc, args.sd, args.seed)
    out = _out_dir(args, "validate-model")
    files = [out / "validation.csv", out / "pca.csv", out / "pca.svg"]
    write_table(res["rows"], files[0], ["sample", "sam_deg", "rmse_cm"])
    write_table(res["pca"], files[1], ["sample", "pure", "pc1", "pc2"])
    plot_pca(res["pca"], files[2])
    _manifest(out, "validate-model", args, files, "ok", {"scenario_hash": sc.hash()})
    for r in res["rows"]:
        print(f"{r['sample']:>14s}  SAM {r['sam_deg']:.4g} deg  RMSE {r['rmse_cm']:.4g} cm^-1")
    return 0


def cmd_plot(args) -> int:
    path = Path(args.csv)
    if not path.exists():
        raise CLIError(f"input file not found: {path}")
    out = _out_dir(args, "plot")
    header = path.read_text(encoding="utf-8").split("\n", 1)[0].split(",")
    files = []
    if header[0] == "label":
        if not args.truth:
            raise CLIError("plotting signatures needs --truth signatures to overlay")
        est, truth = read_signatures(path), read_signatures(args.truth)
        files = plot_spectra_overlay(est, truth, lambda lb: out / f"overlay_{lb}.svg")
    elif "material" in header and "rmse_cm" in header:
        rows = read_table(path)
        files = plot_metrics_csv(rows, lambda lb: out / f"rmse_{lb}.svg")
    elif "median_rmse_cm" in header:
        files = [out / "summary_rmse.svg"]
        plot_sweep(read_table(path), files[0])
    elif "pc1" in header:
        files = [out / "pca.svg"]
        plot_pca(read_table(path), files[0])
    else:
        raise CLIError(f"do not know how to plot {path.name}: unrecognized header")
    _manifest(out, "plot", args, files, "ok")
    print(f"wrote {len(files)} SVG file(s) to {out}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base random seed")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common.add_argument("--band", type=parse_band, default=None, metavar="LO:HI",
                        help=f"analysis band in THz (default {DEFAULT_BAND[0]}:{DEFAULT_BAND[1]})")
    common.add_argument("--lambda", dest="lam", type=float, default=1.0, help="HYPERION regularization weight")
    common.add_argument("--q", type=int, default=None, help="number of materials")
    common.add_argument("--out", default=None, help=f"output directory (default ${ENV_DATA_DIR}/<command>)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="thzunmix", description="Blind THz spectral unmixing toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="synthesize a dataset from a scenario")
    g.add_argument("scenario", help="built-in scenario name or scenario file")
    g.add_argument("--sd", type=float, default=None, help="noise sd in %% (overrides the scenario)")
    g.set_defaults(func=cmd_generate)

    pp = sub.add_parser("preprocess", parents=[common], help="dataset -> standardized absorption CSV")
    pp.add_argument("dataset")
    pp.set_defaults(func=cmd_preprocess)

    u = sub.add_parser("unmix", parents=[common], help="blind unmixing of a dataset")
    u.add_argument("dataset")
    u.add_argument("--method", choices=METHODS, default="hyperion")
    u.add_argument("--truth", default=None, help="ground-truth signatures CSV for metrics")
    u.set_defaults(func=cmd_unmix)

    for name, func, helptext in (("sweep-noise", cmd_sweep, "noise sweep"), ("compare", cmd_compare, "method comparison")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("scenario")
        s.add_argument("--sd", type=parse_floats, default=[0.001, 0.01, 0.04, 0.1], help="comma list of sd %%")
        s.add_argument("--seeds", type=parse_seeds, default=None, help="e.g. 0-9 or 1,2,3 (default: --seed .. --seed+9)")
        if name == "sweep-noise":
            s.add_argument("--methods", type=parse_methods, default=["hyperion"], help="comma list of methods")
        s.set_defaults(func=func)

    e = sub.add_parser("estimate-composition", parents=[common], help="L1 proportions against a signature library")
    e.add_argument("--library", required=True, help="signature CSV")
    e.add_argument("--samples", required=True, help="dataset file or standardized spectra CSV")
    e.add_argument("--truth", default=None, help="ground-truth abundance CSV")
    e.set_defaults(func=cmd_estimate)

    v = sub.add_parser("validate-model", parents=[common], help="linear mixing model check on a scenario with pures")
    v.add_argument("scenario")
    v.add_argument("--sd", type=float, default=None, help="noise sd in %%")
    v.set_defaults(func=cmd_validate)

    pl = sub.add_parser("plot", parents=[common], help="render a result CSV to SVG")
    pl.add_argument("csv")
    pl.add_argument("--truth", default=None, help="ground-truth signatures for overlay plots")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CLIError, ScenarioError, DatasetFormatError, FileNotFoundError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"thzunmix {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
