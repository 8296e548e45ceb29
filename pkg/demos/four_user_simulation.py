# %% [markdown]
# # LQF against a fixed-priority scheduler
#
# Four adaptive users, two channels. Users 1 to 3 may use either channel,
# user 4 only channel 2. Each channel also carries a legacy user at rate 0.2,
# so each channel offers 0.6 to the adaptive users and the sufficient
# condition allows 0.3 per user.

# %%
import numpy as np

from uncoopsched import four_user_config, run_simulation
from uncoopsched.stability import check_sufficient

for rate in (0.25, 0.28, 0.29, 0.30, 0.32):
    cfg = four_user_config(rate, horizon=1_000_000, seed=1)
    lqf = run_simulation(cfg, "lqf")
    prio = run_simulation(cfg, "priority")
    print(f"rate {rate:.2f}  sufficient={check_sufficient(cfg).feasible!s:5}  "
          f"max Q/T lqf={lqf.backlog_growth.max():.2e}  priority={prio.backlog_growth.max():.2e}")

# %% [markdown]
# The backlog trace shows where priority falls behind: user 4 can only use
# channel 2, which users 1 to 3 claim first.

# %%
cfg = four_user_config(0.28, horizon=1_000_000, seed=1)
prio = run_simulation(cfg, "priority", sample_every=100_000)
lqf = run_simulation(cfg, "lqf", sample_every=100_000)
for t, a, b in zip(prio.sample_slots, lqf.sample_backlogs, prio.sample_backlogs):
    print(f"t={t:>8}  lqf {np.array2string(a):>16}  priority {np.array2string(b)}")
