# %% [markdown]
# # Throughput bounds next to a legacy user
#
# One adaptive user shares a collision channel with a legacy user whose
# packets arrive at rate `lam`. The randomized back-off gate gives a lower
# bound on what the adaptive user can push through; the shortest-path
# analysis over the largest possible legacy backlog gives an upper bound.

# %%
import numpy as np

from uncoopsched import bounds

lams = np.round(np.arange(0.05, 1.0, 0.05), 2)
print(f"{'lam':>5} {'mu_lb':>8} {'p*':>6} {'sigma*':>10} {'Y*':>3} {'mu_ub':>8} {'1-lam':>6}")
for lam in lams:
    r = bounds.bounds_result(lam)
    print(f"{lam:5.2f} {r.mu_lb:8.4f} {r.p_star:6.3f} {r.sigma_star:10.4f} {r.y_star:3d} {r.mu_ub:8.4f} {1 - lam:6.2f}")

# %% [markdown]
# The lower bound can be checked against the Markov chain of the gate and the
# legacy queue. Its stationary law gives the same throughput.

# %%
for lam in (0.2, 0.5, 0.8):
    p = bounds.optimal_transmit_prob(lam)
    chain = bounds.pi_lb_steady_state(lam, p, truncation=500)
    print(f"lam={lam}: closed form {bounds.lower_bound_throughput(lam):.6f}, "
          f"chain {chain.throughput:.6f}, E[legacy backlog] {chain.expected_backlog:.3f}")

# %% [markdown]
# Value iteration on the truncated shortest-path model finds the same optimum
# as the search over threshold policies.

# %%
for lam in (0.1, 0.5, 0.9):
    s, y = bounds.sigma_star(lam)
    print(f"lam={lam}: threshold search {s:.6f} (Y*={y}), value iteration {bounds.value_iteration_oracle(lam):.6f}")
