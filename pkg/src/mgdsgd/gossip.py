"""Chebyshev-accelerated gossip averaging and gossip-round schedules."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .topology import WeightMatrix, connectivity_measure

__all__ = [
    "EtaVariant",
    "DEFAULT_VARIANT",
    "GossipPlan",
    "momentum_eta",
    "fast_gossip_average",
    "mixing_polynomial",
    "contraction_bound",
    "mixing_connectivity",
    "effective_beta",
    "choose_R_nonconvex",
    "choose_R_pl",
    "pl_constants",
]


class EtaVariant(str, enum.Enum):
    """Momentum formula for the two-term gossip recursion.

    ``paper_eta``:    (1 - sqrt(1 - b^2)) / (1 + sqrt(1 + b^2))
    ``standard_eta``: (1 - sqrt(1 - b^2)) / (1 + sqrt(1 - b^2))
    """

    paper_eta = "paper_eta"
    standard_eta = "standard_eta"


# Calibrated over beta in {0.5, 0.8, 0.9, 0.95, 0.99}: standard_eta keeps
# ||M^(R) - 11^T/n|| within a factor ~2.4 of sqrt(2)(1 - sqrt(1 - beta))^R;
# paper_eta overshoots it by up to ~1e4.  See README.
DEFAULT_VARIANT = EtaVariant.standard_eta


def momentum_eta(beta: float, variant: EtaVariant | str = DEFAULT_VARIANT) -> float:
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    s = math.sqrt(1 - beta**2)
    if EtaVariant(variant) is EtaVariant.paper_eta:
        return (1 - s) / (1 + math.sqrt(1 + beta**2))
    return (1 - s) / (1 + s)


@dataclass(frozen=True)
class GossipPlan:
    """R rounds of accelerated gossip over ``W``.

    ``eta`` is derived from the measured connectivity of ``W`` unless given.
    """

    W: WeightMatrix
    R: int
    variant: EtaVariant = DEFAULT_VARIANT
    eta: float | None = None

    def __post_init__(self):
        if self.R < 1:
            raise ValueError(f"R must be >= 1, got {self.R}")
        object.__setattr__(self, "variant", EtaVariant(self.variant))
        if self.eta is None:
            object.__setattr__(self, "eta", momentum_eta(self.W.beta, self.variant))
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")

    @property
    def beta(self) -> float:
        return self.W.beta

    @property
    def beta_tilde(self) -> float:
        return effective_beta(self.W.beta, self.R)


def _entries(W) -> np.ndarray:
    return np.asarray(W.entries if isinstance(W, WeightMatrix) else W, dtype=float)


def fast_gossip_average(phi: np.ndarray, plan: GossipPlan, rounds: int | None = None,
                        callback=None) -> np.ndarray:
    """Run ``z+ = (1 + eta) W z - eta z-`` from ``z = z- = phi`` and return ``z^(R)``.

    ``rounds`` overrides ``plan.R`` (``0`` returns ``phi`` unchanged).
    ``callback(r, z)`` is invoked after every round, if given.
    """
    W = _entries(plan.W)
    phi = np.asarray(phi, dtype=float)
    if phi.shape[0] != W.shape[0]:
        raise ValueError(f"phi has {phi.shape[0]} rows, W is {W.shape[0]}x{W.shape[0]}")
    R = plan.R if rounds is None else rounds
    eta = plan.eta
    z_prev, z = phi, phi
    for r in range(R):
        z_prev, z = z, (1 + eta) * (W @ z) - eta * z_prev
        if callback is not None:
            callback(r + 1, z)
    return z.copy() if R == 0 else z


def mixing_polynomial(W, eta: float, R: int) -> np.ndarray:
    """``M^(R)`` of the matrix recursion ``M+ = (1 + eta) W M - eta M-`` with ``M^(-1) = M^(0) = I``."""
    if R < 0:
        raise ValueError(f"R must be >= 0, got {R}")
    W = _entries(W)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"W must be square, got {W.shape}")
    n = W.shape[0]
    M_prev, M = np.eye(n), np.eye(n)
    for _ in range(R):
        M_prev, M = M, (1 + eta) * (W @ M) - eta * M_prev
    return M


def contraction_bound(beta: float, R: int) -> float:
    """sqrt(2) (1 - sqrt(1 - beta))^R."""
    return math.sqrt(2) * (1 - math.sqrt(1 - beta)) ** R


effective_beta = contraction_bound


def mixing_connectivity(W, eta: float, R: int) -> float:
    return connectivity_measure(mixing_polynomial(W, eta, R))


def _check_beta(beta: float) -> None:
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")


def choose_R_nonconvex(n: int, beta: float, b_sq: float, sigma_sq: float) -> int:
    """ceil(max{ln 2, ln(n max{1, b^2/(sigma^2 sqrt(1-beta))}) / 2} / sqrt(1-beta))."""
    _check_beta(beta)
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    gap = math.sqrt(1 - beta)
    het = max(1.0, b_sq / (sigma_sq * gap))
    return max(1, math.ceil(max(math.log(2), 0.5 * math.log(n * het)) / gap))


def pl_constants(n: int, L: float, mu: float) -> tuple[float, float]:
    """(c1, c2) = (6L/mu + 24L^3/mu^2 + 4nL, 18L^2/mu + 12nL)."""
    c1 = 6 * L / mu + 24 * L**3 / mu**2 + 4 * n * L
    c2 = 18 * L**2 / mu + 12 * n * L
    return c1, c2


def choose_R_pl(n: int, beta: float, b_sq: float, sigma_sq: float, L: float, mu: float) -> int:
    """ceil(max{ln 2, ln(nL/mu), ln((n/L) max{c1, c2 b^2/(sigma^2 sqrt(1-beta))}) / 2} / sqrt(1-beta))."""
    _check_beta(beta)
    if L <= 0 or mu <= 0:
        raise ValueError(f"L and mu must be positive, got L={L}, mu={mu}")
    if mu > L:
        raise ValueError(f"need mu <= L, got mu={mu}, L={L}")
    if sigma_sq <= 0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq}")
    gap = math.sqrt(1 - beta)
    c1, c2 = pl_constants(n, L, mu)
    inner = max(c1, c2 * b_sq / (sigma_sq * gap))
    top = max(math.log(2), math.log(n * L / mu), 0.5 * math.log(n / L * inner))
    return max(1, math.ceil(top / gap))
