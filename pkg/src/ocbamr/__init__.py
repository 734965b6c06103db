"""Regression-metamodel budget allocation for selecting the top-m designs."""

from .allocation import (
    ThetaAllocation,
    TrioAllocation,
    alpha_star_t1,
    alpha_star_t3,
    support_location_t2,
    support_location_t4,
    theta_star_t5,
)
from .design_space import (
    DegenerateGeometryError,
    DesignSpace,
    PartitionedSpace,
    SupportTrio,
    lagrange_eta,
    nearest_design,
    rho_coeffs,
)
from .harness import PcsCurve, estimate_pcs, run_replication
from .metamodel import QuadraticFit, SampleStore, diff_var_cross, diff_var_within, fit_ols, predict
from .oracles import ExperimentSpec, Oracle, builtin_experiment, experiment_from_config, sample
from .policies import (
    AllocationState,
    PolicyConfig,
    get_policy,
    run_policy,
    step_equal,
    step_ocba_mr,
    step_ocba_mr_equal_partition,
    step_ocba_mrp,
)
from .rate import RateReport, identify, pfs_rate, rate_cross, rate_single, rate_tilde

__version__ = "0.1.0"
