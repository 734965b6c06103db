# Probability of correct selection against budget
#
# Each point is the fraction of independent macro-replications whose
# selected set equals the true top-m. The command line produces the same
# table:
#   ocbamr run --experiment exp1 --budgets 500,1500 --reps 100 --seed 0

from ocbamr.harness import estimate_pcs
from ocbamr.oracles import builtin_experiment

spec = builtin_experiment("exp1")
curve = estimate_pcs(spec, spec.policies, budgets=[500, 1500], reps=100, master_seed=0)
print(curve.to_csv())

for p in curve.points:
    print(f"{p.policy:10s} budget={p.budget:5d}  PCS={p.pcs:.2f} +/- {p.stderr:.2f}")
