# %% [markdown]
# # Zero-chain hard instances
#
# Each gradient of the zero-chain function reveals at most one new coordinate.
# Split across two far-apart node groups, progress can move only one step per
# dist(E1, E2) communication rounds.

# %%
import numpy as np

from mgdsgd import gossip as gs
from mgdsgd import optimizers as op
from mgdsgd import problems as pb
from mgdsgd import topology as tp

x = np.zeros(8)
for step in range(4):
    x = x - 0.5 * pb.zero_chain_grad(x)
    print("step", step, "prog =", pb.prog(x))

# %% [markdown]
# Now a ring of 12 nodes with the split instance and a Bernoulli oracle that
# hides the frontier coordinate with probability 0.3.

# %%
n = 12
g = tp.ring_lattice(n, 2)
W = tp.uniform_weight_matrix(g)
P = pb.bernoulli_oracle(pb.split_zero_chain_problem(n, 40, L=50.0, lam=1.0), 0.7)
dist = tp.set_distance(g, P.E1, P.E2)
print("dist(E1, E2) =", dist)

state = op.init_state(P, seed=0)
plan = gs.GossipPlan(W, 3)
while state.comm_rounds < 300:
    state = op.mg_dsgd_step(state, P, plan, 1.0)
    if state.comm_rounds % 60 == 0:
        p = int(pb.prog(state.X).max())
        print(f"T={state.comm_rounds:3d}  prog={p:2d}  bound={pb.prog_bound(state.comm_rounds, dist)}")

# %% [markdown]
# The strongly convex splitting instance has a geometric minimiser.

# %%
N = pb.nesterov_splitting_problem(n, L=1.0, mu=0.1, delta=1.0)
print("q =", N.q, " first coordinates:", N.x_star[:4])
print("optimality residual:", N.optimality_residual())
