"""Synthetic decentralized problem suites.

Every problem is a bundle of ``n`` local losses over ``R^d`` evaluated in
batch: ``X`` is an ``n x d`` matrix whose row ``i`` is node ``i``'s point.
Stochastic gradients come from an oracle object and take an explicit
``numpy.random.Generator``; node ``i`` always consumes row ``i`` of each draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

__all__ = [
    "DELTA0",
    "L0",
    "G0",
    "psi",
    "psi_prime",
    "phi",
    "phi_prime",
    "chain_value_grad",
    "zero_chain_value",
    "zero_chain_grad",
    "prog",
    "ProgTrace",
    "prog_trace",
    "prog_bound",
    "ExactOracle",
    "GaussianOracle",
    "BernoulliOracle",
    "Problem",
    "ZeroChainProblem",
    "SplitZeroChainProblem",
    "PLQuadraticPair",
    "NesterovSplittingProblem",
    "HeterogeneousQuadratic",
    "zero_chain_problem",
    "split_zero_chain_problem",
    "bernoulli_oracle",
    "pl_quadratic_pair",
    "nesterov_splitting_problem",
    "nesterov_q",
    "heterogeneous_quadratic_suite",
    "split_blocks",
    "make_problem",
]

# Constants of the zero-chain building block: initial gap per coordinate,
# smoothness, and gradient sup-norm bound.
DELTA0 = 12.0
L0 = 152.0
G0 = 23.0

_SQRT_E = math.sqrt(math.e)
_PHI_SCALE = math.sqrt(2 * math.pi * math.e)


def psi(z):
    """0 for z <= 1/2, exp(1 - 1/(2z - 1)^2) otherwise."""
    z = np.asarray(z, dtype=float)
    active = z > 0.5
    t = np.where(active, 2 * z - 1, 1.0)
    return np.where(active, np.exp(1 - 1 / t**2), 0.0)


def psi_prime(z):
    z = np.asarray(z, dtype=float)
    # Below this offset exp(1 - 1/t^2) underflows to zero anyway.
    active = z > 0.5 + 1e-3
    t = np.where(active, 2 * z - 1, 1.0)
    return np.where(active, np.exp(1 - 1 / t**2) * 4 / t**3, 0.0)


def phi(z):
    """sqrt(e) * int_{-inf}^z exp(-t^2/2) dt."""
    z = np.asarray(z, dtype=float)
    return _PHI_SCALE * 0.5 * (1 + erf(z / math.sqrt(2)))


def phi_prime(z):
    z = np.asarray(z, dtype=float)
    return _SQRT_E * np.exp(-0.5 * z**2)


def chain_value_grad(X, first_coef, link_weights):
    """Weighted zero chain ``-a Psi(1) Phi(x_1) + sum_j w_j (Psi(-x_j) Phi(-x_{j+1}) - Psi(x_j) Phi(x_{j+1}))``.

    ``X`` is ``m x d``; ``first_coef`` has shape ``(m,)`` and ``link_weights``
    shape ``(m, d - 1)``.  Returns values ``(m,)`` and gradients ``(m, d)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = np.asarray(first_coef, dtype=float)
    w = np.asarray(link_weights, dtype=float)
    head, tail = X[:, :-1], X[:, 1:]

    ps_neg, ps_pos = psi(-head), psi(head)
    ph_neg, ph_pos = phi(-tail), phi(tail)
    values = -a * psi(1.0) * phi(X[:, 0]) + (w * (ps_neg * ph_neg - ps_pos * ph_pos)).sum(axis=1)

    grads = np.zeros_like(X)
    grads[:, 0] = -a * psi(1.0) * phi_prime(X[:, 0])
    grads[:, :-1] += w * (-psi_prime(-head) * ph_neg - psi_prime(head) * ph_pos)
    grads[:, 1:] += w * (-ps_neg * phi_prime(-tail) - ps_pos * phi_prime(tail))
    return values, grads


def zero_chain_value(x) -> float:
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    v, _ = chain_value_grad(x[None, :], np.ones(1), np.ones((1, d - 1)))
    return float(v[0])


def zero_chain_grad(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError(f"zero chain needs d >= 2, got {x.shape[-1]}")
    _, g = chain_value_grad(x[None, :], np.ones(1), np.ones((1, x.shape[-1] - 1)))
    return g[0]


def prog(x, threshold: float = 0.0):
    """1-based index of the last coordinate with ``|x_j| > threshold`` (0 if none).

    For a matrix the result is computed row-wise.
    """
    x = np.asarray(x, dtype=float)
    nz = np.abs(x) > threshold
    d = x.shape[-1]
    last = d - np.argmax(nz[..., ::-1], axis=-1)
    out = np.where(nz.any(axis=-1), last, 0)
    return int(out) if out.ndim == 0 else out.astype(int)


def prog_bound(T: int, dist: int) -> int:
    """Largest prog any gossip algorithm can reach after T communications."""
    return T // dist + 1


@dataclass
class ProgTrace:
    """Running max of prog over nodes and history."""

    dist_E1_E2: int | None = None
    values: list[int] = field(default_factory=list)
    threshold: float = 0.0

    def update(self, X) -> int:
        current = int(np.max(prog(X, self.threshold)))
        if self.values:
            current = max(current, self.values[-1])
        self.values.append(current)
        return current

    @property
    def last(self) -> int:
        return self.values[-1] if self.values else 0


def prog_trace(states, dist_E1_E2: int | None = None, threshold: float = 0.0) -> ProgTrace:
    trace = ProgTrace(dist_E1_E2=dist_E1_E2, threshold=threshold)
    for X in states:
        trace.update(X)
    return trace


# ---------------------------------------------------------------------------
# Oracles


class ExactOracle:
    """Lossless full-batch gradients."""

    sigma_sq = 0.0

    def sample(self, problem, X, rng, n_samples: int = 1):
        return problem.local_grads(X)

    def describe(self) -> dict:
        return {"oracle": "exact"}


@dataclass(frozen=True)
class GaussianOracle:
    """Adds ``N(0, (sigma^2/d) I)`` noise per draw, so ``E||g - grad||^2 = sigma^2``."""

    sigma_sq: float

    def __post_init__(self):
        if self.sigma_sq < 0:
            raise ValueError(f"sigma_sq must be nonnegative, got {self.sigma_sq}")

    def sample(self, problem, X, rng, n_samples: int = 1):
        G = problem.local_grads(X)
        if self.sigma_sq == 0:
            return G
        n, d = G.shape
        noise = rng.standard_normal((n_samples, n, d)).mean(axis=0)
        return G + math.sqrt(self.sigma_sq / d) * noise

    def describe(self) -> dict:
        return {"oracle": "gaussian", "sigma_sq": self.sigma_sq}


@dataclass(frozen=True)
class BernoulliOracle:
    """Blocks the frontier coordinate: entries past prog(x) are scaled by ``Z/p``, ``Z ~ Bernoulli(p)``."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"p must lie in (0, 1], got {self.p}")

    @property
    def sigma_sq(self) -> float:
        """Variance bound ``G0^2 (1 - p) / p`` in units of the unscaled chain."""
        return G0**2 * (1 - self.p) / self.p

    def sample(self, problem, X, rng, n_samples: int = 1):
        X = np.asarray(X, dtype=float)
        G = problem.local_grads(X)
        if self.p == 1.0:
            return G
        n, d = G.shape
        Z = rng.random((n_samples, n)) < self.p
        factor = Z.mean(axis=0) / self.p
        frontier = np.arange(1, d + 1)[None, :] > prog(X)[:, None]
        return np.where(frontier, G * factor[:, None], G)

    def describe(self) -> dict:
        return {"oracle": "bernoulli", "p": self.p}


# ---------------------------------------------------------------------------
# Problems


class Problem:
    """n local losses with exact gradients and a stochastic-gradient oracle.

    Subclasses provide ``local_values(X)`` and ``local_grads(X)``.
    """

    family = "problem"
    prog_instrumented = False

    def __init__(self, n, dim, L, oracle=None, mu=None, f_star=None, b_sq=None, x_star=None,
                 params=None):
        self.n = int(n)
        self.dim = int(dim)
        self.L = float(L)
        self.mu = mu
        self.f_star = f_star
        self.b_sq = b_sq
        self.x_star = x_star
        self.oracle = oracle if oracle is not None else ExactOracle()
        self.params = dict(params or {})

    @property
    def sigma_sq(self) -> float:
        return float(self.oracle.sigma_sq)

    def local_values(self, X) -> np.ndarray:
        raise NotImplementedError

    def local_grads(self, X) -> np.ndarray:
        raise NotImplementedError

    def _tile(self, x):
        return np.broadcast_to(np.asarray(x, dtype=float), (self.n, self.dim))

    def value(self, x) -> float:
        """Global objective ``(1/n) sum_i f_i(x)``."""
        return float(self.local_values(self._tile(x)).mean())

    def grad(self, x) -> np.ndarray:
        return self.local_grads(self._tile(x)).mean(axis=0)

    def sample_grads(self, X, rng, n_samples: int = 1) -> np.ndarray:
        """Per-node average of ``n_samples`` independent oracle draws."""
        return self.oracle.sample(self, np.asarray(X, dtype=float), rng, n_samples)

    def oracle_sample(self, i: int, x, rng) -> np.ndarray:
        """One stochastic gradient of ``f_i`` (0-based node) at ``x``."""
        X = np.zeros((self.n, self.dim))
        X[i] = x
        return self.sample_grads(X, rng)[i]

    def heterogeneity(self, x) -> float:
        """(1/n) sum_i ||grad f_i(x) - grad f(x)||^2."""
        G = self.local_grads(self._tile(x))
        return float(((G - G.mean(axis=0)) ** 2).sum(axis=1).mean())

    def describe(self) -> dict:
        return {"family": self.family, **self.params, **self.oracle.describe()}


class ZeroChainProblem(Problem):
    """Homogeneous scaled chain ``f_i = L lam^2 l(x / lam) / L0``."""

    family = "zero_chain"
    prog_instrumented = True

    def __init__(self, n, d, L, lam, oracle=None):
        if d < 2:
            raise ValueError(f"d must be >= 2, got {d}")
        super().__init__(n, d, L, oracle=oracle, params={"n": n, "d": d, "L": L, "lam": lam})
        self.lam = float(lam)
        self._scale = L * lam / L0

    def local_values(self, X):
        X = np.asarray(X, dtype=float)
        v, _ = chain_value_grad(X / self.lam, np.ones(len(X)), np.ones((len(X), self.dim - 1)))
        return self._scale * self.lam * v

    def local_grads(self, X):
        X = np.asarray(X, dtype=float)
        _, g = chain_value_grad(X / self.lam, np.ones(len(X)), np.ones((len(X), self.dim - 1)))
        return self._scale * g


def split_blocks(n: int) -> tuple[list[int], list[int]]:
    """1-based node blocks ``E1 = {1..ceil(n/3)}``, ``E2 = {floor(n/2)+1 .. floor(n/2)+ceil(n/3)}``."""
    if n < 3:
        raise ValueError(f"split instances need n >= 3, got {n}")
    m = -(-n // 3)
    E1 = list(range(1, m + 1))
    E2 = list(range(n // 2 + 1, n // 2 + m + 1))
    return E1, E2


class SplitZeroChainProblem(Problem):
    """Zero chain split across two distant node blocks.

    Nodes in E1 own the head term and even links, nodes in E2 the odd links,
    both amplified by ``n / ceil(n/3)``; all other nodes hold zero.  Each
    piece is scaled as ``L lam^2 l_k(x / lam) / (3 L0)`` so the network average
    equals ``L lam^2 l(x / lam) / (3 L0)``.
    """

    family = "split_zero_chain"
    prog_instrumented = True

    def __init__(self, n, d, L, lam, oracle=None):
        if d < 2:
            raise ValueError(f"d must be >= 2, got {d}")
        E1, E2 = split_blocks(n)
        super().__init__(n, d, L, oracle=oracle, params={"n": n, "d": d, "L": L, "lam": lam})
        self.lam = float(lam)
        self.E1, self.E2 = E1, E2
        amp = n / len(E1)
        self._first = np.zeros(n)
        self._links = np.zeros((n, d - 1))
        j = np.arange(1, d)  # link j couples coordinates j and j+1
        for i in E1:
            self._first[i - 1] = amp
            self._links[i - 1] = np.where(j % 2 == 0, amp, 0.0)
        for i in E2:
            self._links[i - 1] = np.where(j % 2 == 1, amp, 0.0)
        self._scale = L * lam / (3 * L0)

    def local_values(self, X):
        v, _ = chain_value_grad(np.asarray(X, dtype=float) / self.lam, self._first, self._links)
        return self._scale * self.lam * v

    def local_grads(self, X):
        _, g = chain_value_grad(np.asarray(X, dtype=float) / self.lam, self._first, self._links)
        return self._scale * g

    def global_chain_value(self, x) -> float:
        """``L lam^2 l(x/lam) / (3 L0)`` evaluated directly on the unsplit chain."""
        return self.L * self.lam**2 * zero_chain_value(np.asarray(x) / self.lam) / (3 * L0)


class PLQuadraticPair(Problem):
    """``f^v(x) = (mu (x_1 - v lam)^2 + L sum_{j>=2} x_j^2) / 2`` on every node."""

    family = "pl_quadratic"

    def __init__(self, n, d, L, mu, lam, v, oracle=None):
        if not 0 < mu <= L:
            raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
        if d < 2:
            raise ValueError(f"d must be >= 2, got {d}")
        if v not in (1, -1):
            raise ValueError(f"v must be +1 or -1, got {v}")
        x_star = np.zeros(d)
        x_star[0] = v * lam
        super().__init__(n, d, L, oracle=oracle, mu=mu, f_star=0.0, b_sq=0.0, x_star=x_star,
                         params={"n": n, "d": d, "L": L, "mu": mu, "lam": lam, "v": v})
        self.curv = np.full(d, float(L))
        self.curv[0] = mu

    def local_values(self, X):
        D = np.asarray(X, dtype=float) - self.x_star
        return 0.5 * (self.curv * D**2).sum(axis=1)

    def local_grads(self, X):
        return self.curv * (np.asarray(X, dtype=float) - self.x_star)


def nesterov_q(kappa: float) -> float:
    """Smaller root of ``q^2 - (2 + 6/(kappa - 1)) q + 1``, i.e. ``1 - 6/(sqrt(3 + 6 kappa) + 3)``."""
    return 1 - 6 / (math.sqrt(3 + 6 * kappa) + 3)


class NesterovSplittingProblem(Problem):
    """Tridiagonal strongly convex instance split between blocks E1 and E2.

    The infinite sequence space is truncated at ``dim`` coordinates where the
    geometric minimiser ``lam q^j`` has fallen below ``1e-14``.
    """

    family = "nesterov_splitting"
    prog_instrumented = True

    def __init__(self, n, L, mu, delta, d_trunc=None, tol=1e-14, max_dim=10_000):
        if not L > mu > 0:
            raise ValueError(f"need L > mu > 0 (kappa > 1), got L={L}, mu={mu}")
        kappa = L / mu
        q = nesterov_q(kappa)
        lam = math.sqrt(12 * delta / ((L - mu) * q))
        if d_trunc is None:
            d_trunc = min(max_dim, max(2, math.ceil(math.log(tol / lam) / math.log(q))))
        j = np.arange(1, d_trunc + 1)
        x_star = lam * q**j
        E1, E2 = split_blocks(n)
        super().__init__(n, d_trunc, L, mu=mu, f_star=-(L - mu) * lam**2 * q / 12, b_sq=None,
                         x_star=x_star,
                         params={"n": n, "L": L, "mu": mu, "delta": delta, "d_trunc": d_trunc})
        self.kappa, self.q, self.lam, self.delta = kappa, q, lam, delta
        self.truncation_error = float(lam * q ** (d_trunc + 1) / math.sqrt(1 - q**2))
        self.E1, self.E2 = E1, E2
        self._coef = (L - mu) / 12 * n / len(E1)
        self._role = np.zeros(n, dtype=int)
        self._role[[i - 1 for i in E1]] = 1
        self._role[[i - 1 for i in E2]] = 2

    def _pair_diffs(self, X, start):
        # start=1: pairs (x_2, x_3), (x_4, x_5), ...; start=0: (x_1, x_2), (x_3, x_4), ...
        left = X[:, start::2]
        right = X[:, start + 1::2]
        m = right.shape[1]
        return left[:, :m] - right, m

    def local_values(self, X):
        X = np.asarray(X, dtype=float)
        out = 0.5 * self.mu * (X**2).sum(axis=1)
        d1, _ = self._pair_diffs(X, 1)
        d2, _ = self._pair_diffs(X, 0)
        e1 = X[:, 0] ** 2 + (d1**2).sum(axis=1) - 2 * self.lam * X[:, 0]
        e2 = (d2**2).sum(axis=1)
        out = out + self._coef * np.where(self._role == 1, e1, 0.0)
        return out + self._coef * np.where(self._role == 2, e2, 0.0)

    def local_grads(self, X):
        X = np.asarray(X, dtype=float)
        G = self.mu * X.copy()
        g1 = np.zeros_like(X)
        g1[:, 0] = 2 * X[:, 0] - 2 * self.lam
        d1, m1 = self._pair_diffs(X, 1)
        g1[:, 1:1 + 2 * m1:2] += 2 * d1
        g1[:, 2:2 + 2 * m1:2] -= 2 * d1
        g2 = np.zeros_like(X)
        d2, m2 = self._pair_diffs(X, 0)
        g2[:, 0:2 * m2:2] += 2 * d2
        g2[:, 1:2 * m2:2] -= 2 * d2
        G += self._coef * np.where((self._role == 1)[:, None], g1, 0.0)
        G += self._coef * np.where((self._role == 2)[:, None], g2, 0.0)
        return G

    def tridiagonal(self) -> np.ndarray:
        d = self.dim
        return 2 * np.eye(d) - np.eye(d, k=1) - np.eye(d, k=-1)

    def optimality_residual(self, x=None) -> float:
        """Sup-norm of ``((L-mu)/6 M + mu I) x - lam (L-mu)/6 e_1`` on the truncated system."""
        x = self.x_star if x is None else np.asarray(x)
        c = (self.L - self.mu) / 6
        r = c * self.tridiagonal() @ x + self.mu * x
        r[0] -= self.lam * c
        return float(np.abs(r).max())


class HeterogeneousQuadratic(Problem):
    """``f_i(x) = (x - c_i)^T A (x - c_i) / 2`` with shared SPD ``A`` (spectrum in [mu, L]).

    Offsets ``c_i = x* + delta_i`` have zero-mean ``delta_i`` scaled so the
    gradient dissimilarity ``(1/n) sum ||A delta_i||^2`` equals ``b_sq``
    exactly and independently of ``x``.
    """

    family = "heterogeneous_quadratic"

    def __init__(self, n, d, L, mu, b_sq, sigma_sq, seed=0, center_norm=1.0):
        if not 0 < mu <= L:
            raise ValueError(f"need 0 < mu <= L, got mu={mu}, L={L}")
        if b_sq < 0:
            raise ValueError(f"b_sq must be nonnegative, got {b_sq}")
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        spectrum = np.linspace(mu, L, d) if d > 1 else np.array([L])
        A = (Q * spectrum) @ Q.T
        A = 0.5 * (A + A.T)
        center = rng.standard_normal(d)
        center *= center_norm / np.linalg.norm(center)
        delta = rng.standard_normal((n, d))
        delta -= delta.mean(axis=0)
        spread = float(((delta @ A) ** 2).sum(axis=1).mean())
        if b_sq == 0 or spread == 0:
            delta = np.zeros((n, d))
        else:
            delta *= math.sqrt(b_sq / spread)
        offsets = center + delta
        f_star = 0.5 * float(np.einsum("ij,jk,ik->i", delta, A, delta).mean())
        super().__init__(n, d, L, oracle=GaussianOracle(sigma_sq), mu=mu, f_star=f_star,
                         b_sq=float(b_sq), x_star=center,
                         params={"n": n, "d": d, "L": L, "mu": mu, "b_sq": b_sq,
                                 "sigma_sq": sigma_sq, "seed": seed, "center_norm": center_norm})
        self.A, self.offsets, self.spectrum = A, offsets, spectrum

    def local_values(self, X):
        D = np.asarray(X, dtype=float) - self.offsets
        return 0.5 * np.einsum("ij,jk,ik->i", D, self.A, D)

    def local_grads(self, X):
        return (np.asarray(X, dtype=float) - self.offsets) @ self.A

    def value(self, x):
        D = np.asarray(x, dtype=float) - self.x_star
        return 0.5 * float(D @ self.A @ D) + self.f_star

    def grad(self, x):
        return self.A @ (np.asarray(x, dtype=float) - self.x_star)


# ---------------------------------------------------------------------------
# Constructors


def zero_chain_problem(n, d, L=1.0, lam=1.0, oracle=None) -> ZeroChainProblem:
    return ZeroChainProblem(n, d, L, lam, oracle)


def split_zero_chain_problem(n, d, L=1.0, lam=1.0, oracle=None) -> SplitZeroChainProblem:
    return SplitZeroChainProblem(n, d, L, lam, oracle)


def bernoulli_oracle(problem: Problem, p: float) -> Problem:
    """Attach a progress-blocking Bernoulli(p) oracle to ``problem`` (in place) and return it."""
    problem.oracle = BernoulliOracle(p)
    problem.params["p"] = p
    return problem


def pl_quadratic_pair(d, L, mu, lam, v, n=1, sigma_sq=0.0) -> PLQuadraticPair:
    return PLQuadraticPair(n, d, L, mu, lam, v, oracle=GaussianOracle(sigma_sq))


def nesterov_splitting_problem(n, L, mu, delta, d_trunc=None) -> NesterovSplittingProblem:
    return NesterovSplittingProblem(n, L, mu, delta, d_trunc)


def heterogeneous_quadratic_suite(n, d, L, mu, b_sq, sigma_sq, seed=0,
                                  center_norm=1.0) -> HeterogeneousQuadratic:
    return HeterogeneousQuadratic(n, d, L, mu, b_sq, sigma_sq, seed, center_norm)


def make_problem(family: str, **params) -> Problem:
    """Build a problem from its family name and keyword parameters (manifest entry point)."""
    oracle_kind = params.pop("oracle", None)
    p = params.pop("p", None)
    sigma_sq = params.pop("sigma_sq", None)
    if family == "heterogeneous_quadratic":
        return heterogeneous_quadratic_suite(sigma_sq=sigma_sq or 0.0, **params)
    if family == "pl_quadratic":
        return pl_quadratic_pair(sigma_sq=sigma_sq or 0.0, **params)
    if family == "nesterov_splitting":
        return nesterov_splitting_problem(**params)
    if family in ("zero_chain", "split_zero_chain"):
        ctor = zero_chain_problem if family == "zero_chain" else split_zero_chain_problem
        problem = ctor(**params)
        if oracle_kind == "bernoulli" or p is not None:
            bernoulli_oracle(problem, 1.0 if p is None else p)
        return problem
    raise ValueError(f"unknown problem family {family!r}")
