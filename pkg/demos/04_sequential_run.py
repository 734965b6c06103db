# One sequential run of OCBA-mrp on the quadratic test problem
#
# The policy spends n0 replications at the D-optimal trio of every partition
# and then repeats: refit, find the key designs, move the support designs
# and spend the next increment of budget.

import numpy as np

from ocbamr.harness import make_config
from ocbamr.oracles import builtin_experiment
from ocbamr.policies import get_policy, run_policy

spec = builtin_experiment("exp1")
config = make_config(spec, budget=2000)
policy = get_policy("ocba-mrp")
state = run_policy(policy, spec.space, spec.oracle, config, np.random.default_rng(1), record=True)

for rec in state.trace[1:6]:
    print(f"step {rec['kappa']}: m_index={rec['m_index']} keys={rec['keys']} "
          f"theta={np.round(rec['thetas'], 3)}")

counts = state.store.counts
print("designs simulated:", np.flatnonzero(counts).tolist())
print("largest counts   :", sorted(counts[counts > 0].tolist())[-5:])
print("selected:", policy.select(state, config).tolist(), " truth:", spec.true_top.tolist())
