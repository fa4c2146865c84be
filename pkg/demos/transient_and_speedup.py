# %% [markdown]
# # Transient time and linear speedup
#
# On a heterogeneous quadratic, DSGD needs a long transient on a poorly
# connected graph before it reaches the centralised sigma/sqrt(nT) rate.
# Multi-gossip shortens it. This takes about half a minute.

# %%
import numpy as np

from mgdsgd import harness as hn

for beta in (0.5, 0.9, 0.95):
    pair = hn.transient_pair(beta, seed=0)
    print(f"beta={beta}:  T* DSGD={pair['dsgd']}  T* MG-DSGD={pair['mg_dsgd']}")

# %% [markdown]
# Doubling the node count roughly halves the budget needed to hit a target
# gradient norm.

# %%
t8 = [hn.iterations_to_eps(8, s) for s in range(3)]
t16 = [hn.iterations_to_eps(16, s) for s in range(3)]
print("n=8:", t8, " n=16:", t16, " ratio:", np.median(t8) / np.median(t16))
