# %% [markdown]
# # Placing legacy users on channels
#
# Deciding whether legacy users can be placed so the network stays stable is
# as hard as set cover. A set-cover instance maps onto a placement problem:
# busy legacy users kill a channel, silent ones leave it open, and every
# element needs an open channel that covers it.

# %%
from uncoopsched.assignment import (SetCoverInstance, reduce_set_cover, set_cover_exists,
                                    solve_exact, solve_greedy)

inst = SetCoverInstance(("e1", "e2", "e3"),
                        (frozenset({"e1", "e2"}), frozenset({"e3"}), frozenset({"e2", "e3"}), frozenset({"e1"})),
                        k=2)
problem = reduce_set_cover(inst)
print("cover of size <= 2 exists:", set_cover_exists(inst))
exact = solve_exact(problem)
print("exact:", exact.feasible, exact.placement, f"{exact.nodes_explored} nodes")
greedy = solve_greedy(problem)
print("greedy:", greedy.feasible, greedy.placement)

# %% [markdown]
# With only one silent user no single subset covers everything.

# %%
tight = SetCoverInstance(inst.elements, inst.subsets, k=1)
print("k=1:", set_cover_exists(tight), solve_exact(reduce_set_cover(tight)).feasible)
