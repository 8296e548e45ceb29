# %% [markdown]
# # Sufficient and necessary stability regions
#
# Both conditions are bipartite flow problems: adaptive demand flows to the
# channels a user can reach, and each channel absorbs at most its throughput
# bound (lower bound for the sufficient test, upper bound for the necessary one).

# %%
from uncoopsched import four_user_config, two_user_config
from uncoopsched.stability import boundary_brackets, check_sufficient, sweep_region

rows = sweep_region(two_user_config(0.5), "a1,u1", 0.05)
suff = boundary_brackets(rows, "sufficient")
nec = boundary_brackets(rows, "necessary")
print("legacy rate  sufficient up to  necessary up to")
for key in sorted(suff):
    print(f"{key[0]:11.2f}  {suff[key][0]!s:>16}  {nec[key][0]!s:>15}")

# %% [markdown]
# On the four-user network a symmetric sweep finds the sufficient boundary
# between 0.30 and 0.31.

# %%
rows = sweep_region(four_user_config(0.0), "1,2,3,4", 0.01, symmetric=True, upper=0.5)
print(boundary_brackets(rows)[(0.2, 0.2)])
verdict = check_sufficient(four_user_config(0.3))
print("split at 0.3:\n", verdict.rho.round(3))
