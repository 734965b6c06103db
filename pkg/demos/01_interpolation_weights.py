# Interpolation weights and the variance of a predicted difference
#
# A quadratic fitted to three support designs is the Lagrange interpolant of
# their sample means. Every prediction is therefore a weighted sum of three
# node means, and its variance follows from the weights alone.

import numpy as np

from ocbamr.design_space import lagrange_eta, rho_coeffs
from ocbamr.metamodel import SampleStore, diff_var_within, fit_ols

nodes = np.array([0.0, 5.0, 10.0])

# Weights at x = 2.5. They reproduce 1, x and x^2 exactly.
eta = lagrange_eta(nodes, 2.5)
print("eta(2.5) =", eta)
print("reproduces monomials:", [float(eta @ nodes ** p) for p in range(3)])

# The weights of a difference f(xi) - f(xj) sum to zero.
rho = rho_coeffs(nodes, 2.0, 4.5)
print("rho(2, 4.5) =", rho, " sum =", rho.sum())

# Simulate a few replications at each node and fit by least squares.
rng = np.random.default_rng(0)
store = SampleStore(3)
counts = [12, 30, 8]
for i, n in enumerate(counts):
    store.add(i, 0.1 * nodes[i] ** 2 + rng.normal(0.0, 1.0, n))
fit = fit_ols(store, nodes)
print("beta =", fit.beta.round(3), " sigma2_hat =", round(fit.sigma2_hat, 3))

# Same variance two ways: weights over counts, and the full information matrix.
print("rho form   :", diff_var_within(1.0, np.array(counts, float), nodes, 2.0, 4.5))
print("matrix form:", fit.diff_variance(2.0, 4.5, 1.0))
