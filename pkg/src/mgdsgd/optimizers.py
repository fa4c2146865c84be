"""DSGD and MG-DSGD engines, step-size schedules and run metrics."""

from __future__ import annotations

import csv
import enum
import io
import math
import warnings
from dataclasses import asdict, dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .gossip import (
    DEFAULT_VARIANT,
    GossipPlan,
    choose_R_nonconvex,
    choose_R_pl,
    effective_beta,
    fast_gossip_average,
)
from .problems import Problem, ProgTrace, prog_bound
from .topology import WeightMatrix, set_distance

__all__ = [
    "Algorithm",
    "Regime",
    "Schedule",
    "OptimizerState",
    "RunRecord",
    "NOT_REACHED",
    "CSV_HEADER",
    "init_state",
    "round_rng",
    "dsgd_step",
    "mg_dsgd_step",
    "mg_substitutions",
    "lr_nonconvex_dsgd",
    "lr_nonconvex_mg",
    "lr_pl_dsgd",
    "lr_pl_mg",
    "initial_gap",
    "make_schedule",
    "anytime_lr",
    "run",
    "records_to_csv",
    "write_records_csv",
    "running_average",
    "transient_iterations",
    "block_distance",
]

NOT_REACHED = math.inf
CSV_HEADER = ("k", "T", "grad_norm_sq", "subopt", "consensus", "prog")


class Algorithm(str, enum.Enum):
    dsgd = "dsgd"
    mg_dsgd = "mg_dsgd"


class Regime(str, enum.Enum):
    nonconvex = "nonconvex"
    pl = "pl"


@dataclass(frozen=True)
class Schedule:
    gamma: float
    R: int = 1
    regime: Regime = Regime.nonconvex

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.R < 1:
            raise ValueError(f"R must be >= 1, got {self.R}")
        object.__setattr__(self, "regime", Regime(self.regime))


@dataclass(frozen=True)
class OptimizerState:
    """Iterates plus counters.  Randomness is derived from ``seed`` and ``k`` only."""

    X: np.ndarray
    k: int = 0
    seed: int = 0
    grad_queries: int = 0
    comm_rounds: int = 0

    @property
    def mean(self) -> np.ndarray:
        return self.X.mean(axis=0)


def init_state(problem: Problem, seed: int = 0, x0=None) -> OptimizerState:
    """All nodes start at ``x0`` (default: the origin)."""
    x0 = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=float)
    return OptimizerState(np.tile(x0, (problem.n, 1)), seed=seed)


def round_rng(seed: int, k: int) -> np.random.Generator:
    """Counter-keyed stream for outer round ``k``; node i reads row i of every draw."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))


def _check_dims(state: OptimizerState, problem: Problem, n_w: int) -> None:
    if state.X.shape != (problem.n, problem.dim):
        raise ValueError(f"state X has shape {state.X.shape}, expected {(problem.n, problem.dim)}")
    if n_w != problem.n:
        raise ValueError(f"weight matrix is {n_w}x{n_w} but problem has n={problem.n}")


def dsgd_step(state: OptimizerState, problem: Problem, W, gamma: float) -> OptimizerState:
    """``X+ = W (X - gamma G)`` with one oracle sample per node."""
    Wm = np.asarray(W.entries if isinstance(W, WeightMatrix) else W, dtype=float)
    _check_dims(state, problem, Wm.shape[0])
    G = problem.sample_grads(state.X, round_rng(state.seed, state.k), 1)
    X = Wm @ (state.X - gamma * G)
    return replace(state, X=X, k=state.k + 1, grad_queries=state.grad_queries + 1,
                   comm_rounds=state.comm_rounds + 1)


def mg_dsgd_step(state: OptimizerState, problem: Problem, plan: GossipPlan, gamma: float,
                 callback=None) -> OptimizerState:
    """Average ``R`` oracle samples, take the local step, then ``R`` rounds of fast gossip."""
    _check_dims(state, problem, plan.W.n)
    R = plan.R
    G = problem.sample_grads(state.X, round_rng(state.seed, state.k), R)
    X = fast_gossip_average(state.X - gamma * G, plan, callback=callback)
    return replace(state, X=X, k=state.k + 1, grad_queries=state.grad_queries + R,
                   comm_rounds=state.comm_rounds + R)


# ---------------------------------------------------------------------------
# Step sizes


def mg_substitutions(beta: float, sigma_sq: float, R: int) -> tuple[float, float]:
    """(beta_tilde, sigma_tilde) = (sqrt(2)(1 - sqrt(1 - beta))^R, sqrt(sigma^2 / R))."""
    return effective_beta(beta, R), math.sqrt(sigma_sq / R)


def _positive(**kw) -> None:
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


def _check_K(K) -> None:
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")


def _mixing_cap(beta: float, denom: float) -> float:
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"connectivity must lie in [0, 1), got {beta}")
    return math.inf if beta == 0 else (1 - beta) / denom


def lr_nonconvex_dsgd(n, K, L, beta, sigma, Delta) -> float:
    """min{sqrt(2 n Delta) / (sigma sqrt(L (K+1))), (1-beta)/(6 beta L), 1/(4L)}."""
    _check_K(K)
    _positive(n=n, L=L, Delta=Delta)
    noise = math.inf if sigma == 0 else math.sqrt(2 * n * Delta) / (sigma * math.sqrt(L * (K + 1)))
    return min(noise, _mixing_cap(beta, 6 * beta * L), 1 / (4 * L))


def lr_nonconvex_mg(n, K, L, beta_tilde, sigma_tilde, Delta) -> float:
    """min{sqrt(Delta n) / (sigma~ sqrt(L (K+1))), (1-beta~)/(6 beta~ L), 1/(4L)}."""
    _check_K(K)
    _positive(n=n, L=L, Delta=Delta)
    noise = (math.inf if sigma_tilde == 0
             else math.sqrt(Delta * n) / (sigma_tilde * math.sqrt(L * (K + 1))))
    return min(noise, _mixing_cap(beta_tilde, 6 * beta_tilde * L), 1 / (4 * L))


def _pl_log_term(n, K, L, mu, sigma, Delta) -> float:
    if sigma == 0:
        return math.inf
    arg = Delta * mu**2 * n * K / (sigma**2 * L)
    if arg <= 1:
        warnings.warn(f"log argument {arg:.3g} <= 1: K={K} is too small for the PL schedule; "
                      "dropping the noise term", RuntimeWarning, stacklevel=3)
        return math.inf
    return 4 / (mu * K) * math.log(arg)


def _check_pl(mu, L) -> None:
    _positive(mu=mu, L=L)
    if mu > L:
        raise ValueError(f"need mu <= L, got mu={mu}, L={L}")


def lr_pl_dsgd(n, K, L, mu, beta, sigma, Delta) -> float:
    """min{(4/(mu K)) ln(Delta mu^2 n K/(sigma^2 L)), (1-beta)/(4L), mu(1-beta)/(24 n beta L^2)}."""
    _check_K(K)
    _check_pl(mu, L)
    _positive(n=n, Delta=Delta)
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta}")
    third = math.inf if beta == 0 else mu * (1 - beta) / (24 * n * beta * L**2)
    return min(_pl_log_term(n, K, L, mu, sigma, Delta), (1 - beta) / (4 * L), third)


def lr_pl_mg(n, K, L, mu, beta_tilde, sigma_tilde, Delta) -> float:
    """PL step size with (sigma~, beta~) in place of (sigma, beta)."""
    return lr_pl_dsgd(n, K, L, mu, beta_tilde, sigma_tilde, Delta)


def initial_gap(problem: Problem, x0=None, Delta: float | None = None) -> float:
    """``f(x0) - f*`` from the known optimum, or the caller's value.  Never estimated."""
    if Delta is not None:
        return float(Delta)
    if problem.f_star is None:
        raise ValueError(f"{problem.family} has no known f*; pass Delta explicitly")
    x0 = np.zeros(problem.dim) if x0 is None else x0
    return float(problem.value(x0) - problem.f_star)


def _choose_R(problem: Problem, beta: float, regime: Regime) -> int:
    if problem.sigma_sq == 0:
        raise ValueError("noise-free problem: the gossip-round rule needs sigma^2 > 0, pass R")
    b_sq = problem.b_sq or 0.0
    if regime is Regime.pl:
        return choose_R_pl(problem.n, beta, b_sq, problem.sigma_sq, problem.L, problem.mu)
    return choose_R_nonconvex(problem.n, beta, b_sq, problem.sigma_sq)


def _lr(algorithm, regime, problem, K, beta, R, Delta) -> float:
    sigma = math.sqrt(problem.sigma_sq)
    n, L = problem.n, problem.L
    if algorithm is Algorithm.mg_dsgd:
        beta_t, sigma_t = mg_substitutions(beta, problem.sigma_sq, R)
        if regime is Regime.pl:
            return lr_pl_mg(n, K, L, problem.mu, beta_t, sigma_t, Delta)
        return lr_nonconvex_mg(n, K, L, beta_t, sigma_t, Delta)
    if regime is Regime.pl:
        return lr_pl_dsgd(n, K, L, problem.mu, beta, sigma, Delta)
    return lr_nonconvex_dsgd(n, K, L, beta, sigma, Delta)


def make_schedule(problem: Problem, beta: float, algorithm, T_budget: int, regime="nonconvex",
                  R: int | None = None, Delta: float | None = None) -> Schedule:
    """Theory-driven schedule: R from the gossip-round rule, K = floor(T/R), gamma from K."""
    algorithm, regime = Algorithm(algorithm), Regime(regime)
    if algorithm is Algorithm.dsgd:
        R = 1
    elif R is None:
        R = _choose_R(problem, beta, regime)
    K = T_budget // R
    if K < 1:
        raise ValueError(f"T budget {T_budget} is smaller than one round of R={R}")
    gamma = _lr(algorithm, regime, problem, K, beta, R, initial_gap(problem, Delta=Delta))
    return Schedule(gamma, R, regime)


def anytime_lr(problem: Problem, beta: float, algorithm, R: int = 1, regime="nonconvex",
               Delta: float | None = None) -> Callable[[int], float]:
    """Step size at round k computed as if the horizon were K = k + 1 (no horizon needed)."""
    algorithm, regime = Algorithm(algorithm), Regime(regime)
    gap = initial_gap(problem, Delta=Delta)
    R = 1 if algorithm is Algorithm.dsgd else R
    return lambda k: _lr(algorithm, regime, problem, k + 1, beta, R, gap)


# ---------------------------------------------------------------------------
# Runs


@dataclass(frozen=True)
class RunRecord:
    k: int
    T: int
    grad_norm_sq: float
    subopt: float | None
    consensus: float
    prog: int | None

    def as_row(self) -> list[str]:
        return ["" if v is None else repr(v) if isinstance(v, float) else str(v)
                for v in (self.k, self.T, self.grad_norm_sq, self.subopt, self.consensus, self.prog)]


def block_distance(problem: Problem, graph) -> int | None:
    """Graph distance between the two active blocks of a split instance."""
    if graph is None or not hasattr(problem, "E1"):
        return None
    return set_distance(graph, problem.E1, problem.E2)


def _record(state: OptimizerState, problem: Problem, trace: ProgTrace | None) -> RunRecord:
    xbar = state.mean
    g = problem.grad(xbar)
    subopt = None if problem.f_star is None else float(problem.value(xbar) - problem.f_star)
    consensus = float(((state.X - xbar) ** 2).sum())
    p = trace.update(state.X) if trace is not None else None
    return RunRecord(state.k, state.comm_rounds, float(g @ g), subopt, consensus, p)


def run(problem: Problem, topology, algorithm, schedule: Schedule, T_budget: int, seed: int = 0,
        x0=None, gamma_fn: Callable[[int], float] | None = None,
        eta_variant=DEFAULT_VARIANT) -> list[RunRecord]:
    """Run ``K = floor(T_budget / R)`` outer rounds and return K+1 records (k = 0..K).

    ``topology`` is a ``WeightMatrix`` or a ``GossipPlan``.  ``gamma_fn(k)``
    overrides the constant step of ``schedule``.  On prog-instrumented split
    instances every record is checked against ``floor(T / dist) + 1``.
    """
    algorithm = Algorithm(algorithm)
    if isinstance(topology, GossipPlan):
        plan, W = topology, topology.W
    else:
        W = topology
        plan = GossipPlan(W, schedule.R, eta_variant) if algorithm is Algorithm.mg_dsgd else None
    R = 1 if algorithm is Algorithm.dsgd else plan.R
    if algorithm is Algorithm.mg_dsgd and plan.R != schedule.R:
        raise ValueError(f"plan has R={plan.R} but schedule has R={schedule.R}")
    K = T_budget // R
    if K < 1:
        raise ValueError(f"T budget {T_budget} is smaller than one round of R={R}")

    trace = ProgTrace() if problem.prog_instrumented else None
    dist = block_distance(problem, W.source_graph if isinstance(W, WeightMatrix) else None)
    state = init_state(problem, seed, x0)
    records = [_record(state, problem, trace)]
    for _ in range(K):
        gamma = schedule.gamma if gamma_fn is None else gamma_fn(state.k)
        if algorithm is Algorithm.dsgd:
            state = dsgd_step(state, problem, W, gamma)
        else:
            state = mg_dsgd_step(state, problem, plan, gamma)
        rec = _record(state, problem, trace)
        if dist and rec.prog is not None and rec.prog > prog_bound(rec.T, dist):
            warnings.warn(f"prog {rec.prog} exceeds floor(T/dist)+1 at T={rec.T}", RuntimeWarning,
                          stacklevel=2)
        records.append(rec)
    return records


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.as_row())
    return buf.getvalue()


def write_records_csv(path, records: Iterable[RunRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records))


def running_average(values) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return np.cumsum(v) / np.arange(1, len(v) + 1)


def transient_iterations(records, sigma: float, n: int, tail_fraction: float = 0.25,
                         slack: float = 0.1, min_records: int = 8) -> float:
    """Estimate the transient iteration count T*.

    The running average of ``||grad f(xbar)||^2`` (records with T > 0) is
    compared with the linear-speedup envelope ``c sigma / sqrt(n T)``, where
    ``c`` is the median of ``avg * sqrt(n T) / sigma`` over the last
    ``tail_fraction`` of the run.  T* is the first T after which the average
    stays within ``(1 + slack)`` of the envelope; ``NOT_REACHED`` otherwise.
    """
    recs = [r for r in records if r.T > 0]
    if len(recs) < min_records:
        raise ValueError(f"need at least {min_records} records with T > 0, got {len(recs)}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    T = np.array([r.T for r in recs], dtype=float)
    avg = running_average([r.grad_norm_sq for r in recs])
    scaled = avg * np.sqrt(n * T) / sigma
    tail = max(1, int(round(tail_fraction * len(recs))))
    c = float(np.median(scaled[-tail:]))
    below = avg <= (1 + slack) * c * sigma / np.sqrt(n * T)
    if not below[-1]:
        return NOT_REACHED
    # first index of the final all-True run
    bad = np.flatnonzero(~below)
    start = 0 if bad.size == 0 else bad[-1] + 1
    return float(T[start])


def records_as_dicts(records) -> list[dict]:
    return [asdict(r) for r in records]
