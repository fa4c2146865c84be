"""Decentralized SGD with multiple gossip steps.

Submodules: ``topology`` (ring lattices and weight matrices), ``gossip``
(accelerated averaging), ``problems`` (synthetic instances and oracles),
``optimizers`` (DSGD and MG-DSGD) and ``harness`` (manifests, sweeps,
verification).
"""

from . import gossip, harness, optimizers, problems, topology
from .gossip import GossipPlan, fast_gossip_average
from .optimizers import Schedule, run
from .topology import construct_weight_matrix, ring_lattice, uniform_weight_matrix

__version__ = "0.1.0"

__all__ = [
    "gossip",
    "harness",
    "optimizers",
    "problems",
    "topology",
    "GossipPlan",
    "Schedule",
    "construct_weight_matrix",
    "fast_gossip_average",
    "ring_lattice",
    "run",
    "uniform_weight_matrix",
]
