"""How signature error grows with measurement noise.

Each cell draws an independent noise realization (seeded per sample trace),
unmixes, and scores the matched signatures.  Expect the median RMSE to grow
roughly in proportion to the noise sd.

Run:  python3 demos/02_noise_sweep.py [outdir]      (about a minute on 1 CPU)
"""

import sys
from pathlib import Path

from thzunmix.experiments import SUMMARY_COLUMNS, format_table, plot_sweep, run_noise_sweep, write_table
from thzunmix.synth import builtin_scenario

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/sweep")
out.mkdir(parents=True, exist_ok=True)

sds = [0.001, 0.01, 0.04, 0.1]
result = run_noise_sweep(builtin_scenario("quinary55"), sds, seeds=range(5), methods=["hyperion"])
print(format_table(result.summary, ["method", "sd_percent", "n_ok", "median_rmse_cm", "q1_rmse_cm", "q3_rmse_cm"]))

write_table(result.summary, out / "summary.csv", SUMMARY_COLUMNS)
plot_sweep(result.summary, out / "summary_rmse.svg")

# ratio of successive medians vs ratio of noise levels
med = [result.median("hyperion", sd) for sd in sds]
for (a, ma), (b, mb) in zip(zip(sds, med), zip(sds[1:], med[1:])):
    print(f"sd x{b / a:5.1f}  ->  RMSE x{mb / ma:5.2f}")
