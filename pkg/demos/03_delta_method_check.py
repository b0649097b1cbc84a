"""Does the plug-in variance of logit(M1) track the truth?

Simulates many meta-analyses at one setting, fits each, and compares
the average delta-method variance against the Monte Carlo variance of
the logit-scale estimates.  Also shows the exact scale relations that
tie the M2 moments to the M1 moments.
"""

import math

import numpy as np

from cvmeta import fit_rem
from cvmeta.measures import logit, logit_m1_moments
from cvmeta.numerics import RngState
from cvmeta.simulator import Scenario, generate_smd_dataset

scenario = Scenario(beta=0.8, tau=0.8, arm_sizes=((30, 30),) * 50,
                    reps=2000, seed=11)
master = RngState(scenario.seed)

plug_in, observed = [], []
for rep in range(scenario.reps):
    data = generate_smd_dataset(scenario, master.stream(rep))
    fit = fit_rem(data)
    if fit.tau2_hat <= 0.0 or fit.beta_hat == 0.0:
        continue  # moments are undefined at the boundary
    mom = logit_m1_moments(fit)
    plug_in.append(mom.var_logit_m1)
    tau_hat = math.sqrt(fit.tau2_hat)
    observed.append(logit(tau_hat / (tau_hat + abs(fit.beta_hat))))

mc_var = np.var(observed, ddof=1)
print(f"usable replications:     {len(plug_in)}")
print(f"mean plug-in variance:   {np.mean(plug_in):.4f}")
print(f"Monte Carlo variance:    {mc_var:.4f}")
print(f"ratio:                   {np.mean(plug_in) / mc_var:.3f}")

# M2 moments never need their own derivation: logit(M2) = 2 logit(M1),
# so the variance scales by 4 and the bias by 2, exactly.
mom = logit_m1_moments(fit)
print(f"\nvar logit M2 / var logit M1:   {mom.var_logit_m2 / mom.var_logit_m1}")
print(f"bias logit M2 / bias logit M1: {mom.bias_logit_m2 / mom.bias_logit_m1}")
