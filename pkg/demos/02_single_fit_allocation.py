# Where to sample when one quadratic covers the whole domain
#
# For one comparison between the m-th best design and a key design, the
# node split that maximizes the large-deviations rate is proportional to
# |rho|. The middle support design then has a closed-form best location.

import numpy as np

from ocbamr.allocation import alpha_star_t1, support_location_t2
from ocbamr.design_space import rho_coeffs
from ocbamr.rate import rate_single
from ocbamr.verify import simplex_grid

x1, xt, x_key, x_m = 0.0, 10.0, 2.0, 4.0
x_s = support_location_t2(x1, xt, x_key, x_m)
print("best middle support design:", x_s)

rho = rho_coeffs((x1, x_s, xt), x_m, x_key)
alpha = alpha_star_t1(rho).alphas
print("rho =", rho.round(4), " alpha* =", alpha.round(4))

# Brute-force check over the simplex.
grid = simplex_grid(0.01)
rates = np.array([rate_single(1.0, 1.0, rho, a) for a in grid])
print("rate at alpha*   :", rate_single(1.0, 1.0, rho, alpha))
print("best grid rate   :", rates.max(), "at", grid[rates.argmax()])

# Sliding the middle node shows the peak at x_s.
for xs in (3.0, 5.0, 6.0, 7.0, 9.0):
    r = rho_coeffs((x1, xs, xt), x_m, x_key)
    print(f"  x_s={xs:4.1f}  rate={rate_single(1.0, 1.0, r, alpha_star_t1(r).alphas):.5f}")
