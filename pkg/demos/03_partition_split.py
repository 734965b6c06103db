# Splitting the budget across partitions
#
# Each partition other than the reference one gets a weight sigma^2 / gap^2
# to the reference design. The reference partition's weight balances
# all of them at once. At the split, the reduced rates are equal and the
# derivative ratios sum to one.

import numpy as np

from ocbamr import verify
from ocbamr.allocation import theta_star_t5

rng = np.random.default_rng(3)
inst = verify.split_instance(5, rng)
theta = theta_star_t5(inst.gaps, inst.sigma2, inst.b, inst.eta[inst.b], inst.alphas[inst.b])
print("reference partition:", inst.b)
print("gaps   :", inst.gaps.round(3))
print("sigma^2:", inst.sigma2.round(3))
print("theta  :", theta.thetas.round(4))

spread, balance = verify.split_residuals(inst)
print(f"relative spread of reduced rates: {spread:.2e}")
print(f"|sum of derivative ratios - 1|  : {balance:.2e}")
