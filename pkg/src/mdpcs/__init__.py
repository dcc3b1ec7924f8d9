"""Finite discounted decision problems on grids: optimal policies,
forward distribution dynamics, and machine-checked monotone comparative
statics, including four ready-made application models."""

__version__ = "0.1.0"

from .core import (
    DiscreteDistribution,
    Grid,
    InducedKernel,
    Kernel,
    MdpModel,
    PolicyFunction,
    allocate_offgrid,
    distribution_from_points,
    kernel_from_map,
    make_uniform_grid,
    point_mass,
    product_grid,
)
from .solver import (
    PolicyCorrespondence,
    ValueFunction,
    bellman_T,
    bellman_h,
    induced_kernel,
    policy_correspondence,
    policy_function,
    solve,
    value_iterate,
)
from .orders import (
    OrderVerdict,
    Witness,
    convexity_preserving_check,
    cx_compare,
    d_preserving_check,
    distribution_compare,
    fosd_compare,
    icx_compare,
    kernel_compare,
    monotone_kernel_check,
)
from .structure import (
    ConditionReport,
    ascending_check,
    expanding_check,
    increasing_differences_check,
    monotone_policy_conditions_check,
    stochastically_increasing_differences_check,
    supermodularity_check_3,
    transition_map_conditions_check,
)
from .dynamics import (
    CheckReport,
    Trajectory,
    check_distribution_dominance,
    check_initial_state_monotonicity,
    check_parameter_monotonicity,
    check_transition_monotonicity,
    default_initial_states,
    expected_decision,
    propagate,
    trajectory,
)
from .stationary import (
    StationaryPair,
    check_stationary_dominance,
    is_irreducible,
    stationary_extremes,
)
from .models import (
    HaraUtility,
    ModelSpec,
    build_capital,
    build_pricing,
    build_randomwalk,
    build_savings,
    cara_utility,
    clamped_additive_map_table,
    crra_utility,
    demand_shape_report,
    linear_demand_table,
    quadratic_utility,
)

__all__ = [name for name in dir() if not name.startswith("_")]
