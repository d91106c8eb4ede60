import warnings

import numpy as np
import pytest

from thzunmix import experiments as ex
from thzunmix.experiments import (
    MethodConfig,
    comparison_table,
    format_table,
    plot_metrics_csv,
    plot_spectra_overlay,
    plot_sweep,
    read_table,
    run_cell,
    run_model_validation,
    run_noise_sweep,
    unmix,
    write_table,
)
from thzunmix.synth import builtin_scenario

from conftest import dataset, standardized

SD_GRID = [0.001, 0.01, 0.04, 0.1]


def test_sweep_table_shape():
    res = run_noise_sweep(builtin_scenario("ternary"), SD_GRID, [0, 1, 2], ["spa"])
    assert len(res.rows) == 4 * 3 * 1
    assert len(res.summary) == 4
    assert res.ok
    assert all(r["scenario_hash"] and r["config_hash"] for r in res.rows)
    assert len(res.timings) == len(res.rows) and all(t["seconds"] >= 0 for t in res.timings)
    s = res.summary[0]
    assert s["q1_rmse_cm"] <= s["median_rmse_cm"] <= s["q3_rmse_cm"]


def test_sd_zero_equals_noiseless_run():
    sc = builtin_scenario("ternary")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_noise_sweep(sc, [0.0], [0], ["hyperion"])
    direct = unmix(standardized("ternary"), "hyperion", 3)
    from thzunmix.metrics import align_signatures

    al = align_signatures(direct.signatures, dataset("ternary").signatures)
    assert res.rows[0]["mean_rmse_cm"] == al.mean_rmse
    assert res.rows[0]["mean_sam_deg"] == al.mean_sam


def test_few_seeds_warn():
    with pytest.warns(UserWarning, match="seed"):
        run_noise_sweep(builtin_scenario("ternary"), [0.01], [0], ["spa"])


def test_failed_cell_is_recorded(monkeypatch):
    real = ex.unmix

    def flaky(X, method, q, seed=0, cfg=MethodConfig()):
        if seed == 1:
            raise np.linalg.LinAlgError("synthetic failure")
        return real(X, method, q, seed, cfg)

    monkeypatch.setattr(ex, "unmix", flaky)
    res = run_noise_sweep(builtin_scenario("ternary"), [0.01], [0, 1, 2], ["spa"])
    status = [r["status"] for r in res.rows]
    assert status.count("ok") == 2 and "synthetic failure" in status[1]
    assert not res.ok
    assert res.summary[0]["n_failed"] == 1


def test_cell_rerun_is_bit_identical():
    sc = builtin_scenario("quinary55")
    a = run_cell(sc, "hyperion", 0.04, 5, MethodConfig(max_iters=50))
    b = run_cell(sc, "hyperion", 0.04, 5, MethodConfig(max_iters=50))
    assert a.row == b.row and a.materials == b.materials


def test_model_validation():
    sc = builtin_scenario("ternary")
    clean = run_model_validation(sc, 0.0, 0)
    assert len(clean["rows"]) == 6
    assert max(r["sam_deg"] for r in clean["rows"]) < 1e-9
    assert max(r["rmse_cm"] for r in clean["rows"]) < 1e-9
    noisy = run_model_validation(sc, 0.015, 0)
    assert all(r["sam_deg"] < 5 and r["rmse_cm"] < 6 for r in noisy["rows"])
    with pytest.raises(ValueError, match="pure sample"):
        run_model_validation(builtin_scenario("quinary55"))


def _midpoint_error(sd):
    sc = builtin_scenario("quinary_pures")
    pca = run_model_validation(sc, sd, 0)["pca"]
    pos = {r["sample"]: np.array([r["pc1"], r["pc2"]]) for r in pca}
    labels = [m.label for m in sc.materials]
    errs, scale = [], max(np.linalg.norm(pos[a] - pos[b]) for a in labels for b in labels)
    for row in sc.samples:
        w = np.asarray(row.weights)
        if w.max() == 0.5:
            i, j = np.flatnonzero(w)
            errs.append(np.linalg.norm(pos[row.label] - 0.5 * (pos[labels[i]] + pos[labels[j]])))
    return max(errs), scale


def test_pca_midpoints():
    err, _ = _midpoint_error(0.0)
    assert err < 1e-9
    err, scale = _midpoint_error(0.015)
    assert err < 0.02 * scale


def test_separable_noiseless_spa_matches_hyperion():
    sc = builtin_scenario("ternary")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_noise_sweep(sc, [0.0], [0], ["hyperion", "spa"])
    h, s = (res.median(m, 0.0) for m in ("hyperion", "spa"))
    assert h < 1e-3 and s < 1e-3 and abs(h - s) < 1e-3


def test_comparison_table_layout():
    res = run_noise_sweep(builtin_scenario("ternary"), [0.01, 0.1], [0, 1, 2], ["spa"])
    tab = comparison_table(res, ["glucose", "lactose", "tyrosine"], ["spa"])
    assert [r["sd_percent"] for r in tab] == [0.01, 0.1]
    assert set(tab[0]) == {"sd_percent", "glucose_spa", "lactose_spa", "tyrosine_spa"}


def test_tables_and_plots(tmp_path):
    res = run_noise_sweep(builtin_scenario("ternary"), [0.01, 0.1], [0, 1, 2], ["spa"])
    write_table(res.rows, tmp_path / "rows.csv", ex.SWEEP_COLUMNS)
    back = read_table(tmp_path / "rows.csv")
    assert back[0]["mean_rmse_cm"] == res.rows[0]["mean_rmse_cm"]
    assert format_table(res.rows, ex.SWEEP_COLUMNS) == (tmp_path / "rows.csv").read_text()
    p1, p2 = tmp_path / "a.svg", tmp_path / "b.svg"
    plot_sweep(res.summary, p1)
    plot_sweep(res.summary, p2)
    assert p1.read_bytes() == p2.read_bytes() and b"<svg" in p1.read_bytes()
    files = plot_metrics_csv(res.materials, lambda lb: tmp_path / f"m_{lb}.svg")
    assert len(files) == 3
    ds = dataset("ternary")
    est = unmix(standardized("ternary"), "hyperion", 3).signatures
    over = plot_spectra_overlay(est, ds.signatures, lambda lb: tmp_path / f"o_{lb}.svg")
    assert len(over) == 3 and all(f.exists() for f in over)
