"""Proportions of unseen tablets from a blindly learned library.

The library comes from HYPERION on the ternary training tablets; every test
tablet (15 compositions on a quarter-step lattice) is then fitted by least
absolute deviations under the sum-to-one and nonnegativity constraints.

Run:  python3 demos/04_composition.py [sd_percent]
"""

import sys

from thzunmix.experiments import format_table, run_composition_experiment
from thzunmix.synth import builtin_scenario

sd = float(sys.argv[1]) if len(sys.argv) > 1 else 0.015
res = run_composition_experiment(builtin_scenario("ternary"), builtin_scenario("ternary_test"), sd, seed=0)
cols = ["sample"] + [f"{m}_{k}" for m in res["library"].labels for k in ("true", "est")]
print(format_table(res["rows"], cols))
print(f"\nnoise sd {sd}%: largest absolute proportion error {100 * res['max_abs_error']:.3f} %")
