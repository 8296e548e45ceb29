"""Scheduling adaptive users around uncooperative legacy users on collision channels."""

__version__ = "0.1.0"

from .core import (Action, ArrivalKind, NetworkConfig, NetworkTopology, TernaryFeedback,
                   four_user_config, two_user_config, validate_config)
from .bounds import (bounds_result, lower_bound_throughput, optimal_transmit_prob,
                     pi_lb_steady_state, sigma_star, solve_bellman_linear, upper_bound_throughput,
                     v1_closed_form, value_iteration_oracle)
from .policies import PolicyKind, compute_rho, gate_decide, schedule_lqf, schedule_priority, schedule_randomized
from .simulator import SimMetrics, estimate_saturated_throughput, resolve_slot, run_simulation
from .stability import check_necessary, check_sufficient, max_flow, sweep_region
from .assignment import (AssignmentProblem, SetCoverInstance, reduce_set_cover, solve_exact,
                         solve_greedy)
