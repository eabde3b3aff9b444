# %% [markdown]
# # Error-aware simulated annealing
#
# Early on the temperature is high and acceptance is loose, so noisy
# estimates are cheap to tolerate. The error-aware schedule asks for MSE
# `eta^2 T^2 / 2` and spends shots only as the search cools.

# %%
import numpy as np

from shotfrugal.harness import run_experiment, value_at_budget

tables = run_experiment({"experiment": "sa_compare", "trials": 100, "shot_budget": 7000,
                         "master_seed": 0, "output_dir": "out/sa_compare"})
for variant, rows in tables.items():
    vals = np.array(list(value_at_budget(rows, 7000).values()))
    print(f"{variant:12s} median f at 7000 shots {np.median(vals):+.3f}  "
          f"10th/90th pct {np.percentile(vals, 10):+.3f}/{np.percentile(vals, 90):+.3f}")

# %% [markdown]
# The same run as figures:
#
#     shotfrugal plot --kind loss_vs_shots --in out/sa_compare/*.csv --out out/sa_loss.svg --budget 7000
#     shotfrugal plot --kind dist_at_budget --in out/sa_compare/*.csv --out out/sa_dist.svg --budget 7000

# %%
from pathlib import Path

from shotfrugal.harness import read_csv
from shotfrugal.plots import emit_plot

rows = read_csv(sorted(Path("out/sa_compare").glob("*.csv")))
emit_plot(rows, "loss_vs_shots", "out/sa_loss.svg", budget=7000)
emit_plot(rows, "dist_at_budget", "out/sa_dist.svg", budget=7000)
