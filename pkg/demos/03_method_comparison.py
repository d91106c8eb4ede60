"""HYPERION against NMF and SPA on the same noisy tablets.

NMF only knows the data are nonnegative, and its factorization is far from
unique.  SPA needs each material to appear pure somewhere, which this design
never supplies.  Both therefore return blends of the true spectra.

Run:  python3 demos/03_method_comparison.py [outdir]   (about 90 s on 1 CPU)
"""

import sys
from pathlib import Path

from thzunmix.experiments import comparison_table, plot_metrics_csv, run_method_comparison, write_table
from thzunmix.synth import builtin_scenario

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/compare")
out.mkdir(parents=True, exist_ok=True)

scenario = builtin_scenario("quinary55")
result = run_method_comparison(scenario, sd_grid=[0.1], seeds=range(3))
mats = [m.label for m in scenario.materials]
table = comparison_table(result, mats)
for row in table:
    for mat in mats:
        cells = "  ".join(f"{m} {row[f'{mat}_{m}']:7.3f}" for m in ("hyperion", "nmf", "spa"))
        print(f"{mat:10s} {cells}")

write_table(table, out / "comparison.csv")
write_table(result.materials, out / "metrics.csv")
plot_metrics_csv(result.materials, lambda lab: out / f"{lab}_rmse.svg")
print(f"\ntables and plots in {out}/")
