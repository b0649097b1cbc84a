"""A small coverage experiment.

Runs the simulation harness at one standardized-mean-difference setting
and reports, for each interval method, how often the interval covered
the true measure.  Desk-scale replication counts; the shipped configs
under cvmeta/data/configs run the full grids.
"""

import time

from cvmeta.measures import cv_measures
from cvmeta.simulator import Scenario, run_scenario

scenario = Scenario(
    beta=0.5,
    tau=0.4,
    arm_sizes=((30, 30),) * 10,
    reps=500,
    methods=("WALD", "ALPHA_ADJ", "PROPIMP"),
    seed=2024,
)

start = time.time()
result = run_scenario(scenario, threads=2)
true_m1 = cv_measures(scenario.tau, scenario.beta).m1
print(f"{scenario.reps} replications in {time.time() - start:.1f}s")
print(f"true M1 {true_m1:.4f},"
      f" tau-hat truncated to zero in {100 * result.truncation_rate:.1f}%")

print(f"\n{'method':<12}{'coverage':>9}{'median width (M1)':>19}")
for mc in result.per_method:
    print(f"{mc.method:<12}{mc.coverage:>9.3f}{mc.widths['M1'].median:>19.3f}")

# The Wald interval leans on a symmetric-normal approximation for
# logit(M1) and tends to run wide at small K; the propagating
# imprecision envelope stays close to nominal while remaining narrower
# than stacking two marginal 95% component intervals would be.
