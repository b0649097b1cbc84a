"""Point estimates on a real dataset.

Loads the bundled hypertension stroke-prevention meta-analysis and walks
from the random-effects fit to the heterogeneity measures, showing how
the ratio family relates to I2 and to each other.
"""

import math

from cvmeta import fit_rem, het_measures, load_hssp
from cvmeta.measures import cv_measures, logit

data = load_hssp()
fit = fit_rem(data)

print(f"studies:            {data.k}")
print(f"pooled effect:      {fit.beta_hat:.4f} (log odds ratio)")
print(f"tau-squared (DL):   {fit.tau2_hat:.4f}")

hm = het_measures(data, fit)
print(f"\nI2:                 {100 * hm.i2:.3f}%")
print(f"CV_B = tau/|beta|:  {hm.cv_b:.4f}")
print(f"M1 = tau/(tau+|b|): {hm.m1:.4f}")
print(f"M2 = t2/(t2+b2):    {hm.m2:.4f}")

# I2 says nearly all observed variation is between studies, but that is
# a statement about precision of the included studies as much as about
# the effect.  The ratio family compares the spread directly against
# the pooled effect size: here the between-study standard deviation is
# about 1.4 times the effect itself.

# The three measures are one number in three scales.  Given any one of
# them the others follow:
m = cv_measures(math.sqrt(fit.tau2_hat), fit.beta_hat)
print(f"\nlogit(M1)           {logit(m.m1):+.4f}")
print(f"log(CV_B)           {math.log(m.cv_b):+.4f}")
print(f"logit(M2)           {logit(m.m2):+.4f}  (= 2 log CV_B)")
