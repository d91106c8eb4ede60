"""Is the linear mixing model adequate for these tablets?

With pure tablets available, a mixture should match the weighted sum of the
measured pure spectra.  The SAM and RMSE columns show how close it is; the
PCA plane fitted to the pures shows the mixtures inside their triangle.

Run:  python3 demos/05_model_validation.py [outdir]
"""

import sys
from pathlib import Path

from thzunmix.experiments import format_table, plot_pca, run_model_validation
from thzunmix.synth import builtin_scenario

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/validate")
out.mkdir(parents=True, exist_ok=True)

for sd in (0.0, 0.015):
    res = run_model_validation(builtin_scenario("ternary"), sd_percent=sd, seed=0)
    print(f"\nnoise sd {sd}%")
    print(format_table(res["rows"]))
plot_pca(res["pca"], out / "pca.svg")
print(f"\nPCA view in {out}/pca.svg")
