"""Experiment manifests, deterministic runs, parameter sweeps and verification suites."""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from . import gossip, optimizers, problems, topology

__all__ = [
    "OUTPUT_ENV",
    "ManifestError",
    "Manifest",
    "parse_manifest",
    "serialize_manifest",
    "load_manifest",
    "manifest_hash",
    "build_problem",
    "build_weight_matrix",
    "build_schedule",
    "run_manifest",
    "expand_grid",
    "run_sweep",
    "construction_beta_grid",
    "sweep_beta_diameter",
    "contraction_table",
    "CheckResult",
    "SUITES",
    "run_suite",
    "format_results",
]

OUTPUT_ENV = "MGDSGD_OUTPUT_DIR"


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "results")


class ManifestError(ValueError):
    """Malformed manifest; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _coerce(text: str):
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class Manifest:
    """One fully specified run.

    Flat ``key = value`` text.  ``problem.*`` keys are forwarded to the
    problem constructor and ``topology.*`` keys pick the weight matrix
    (``beta`` target, ring lattice ``k`` with uniform weights, or ``matrix``
    file).  Optional schedule keys override the theory-driven choices.
    """

    problem: str
    T: int
    name: str = "run"
    problem_params: dict = field(default_factory=dict)
    topology: dict = field(default_factory=dict)
    algorithm: str = "mg_dsgd"
    regime: str = "nonconvex"
    gamma: float | None = None
    R: int | None = None
    anytime: bool = False
    eta_variant: str = gossip.DEFAULT_VARIANT.value
    delta: float | None = None
    seed: int = 0
    output_dir: str = field(default_factory=default_output_dir)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.problem not in _FAMILIES:
            raise ManifestError("problem", f"unknown family {self.problem!r}")
        if not isinstance(self.T, int) or isinstance(self.T, bool) or self.T < 1:
            raise ManifestError("T", f"must be a positive integer, got {self.T!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ManifestError("seed", f"must be a nonnegative integer, got {self.seed!r}")
        try:
            optimizers.Algorithm(self.algorithm)
        except ValueError:
            raise ManifestError("algorithm", f"expected dsgd or mg_dsgd, got {self.algorithm!r}")
        try:
            optimizers.Regime(self.regime)
        except ValueError:
            raise ManifestError("regime", f"expected nonconvex or pl, got {self.regime!r}")
        try:
            gossip.EtaVariant(self.eta_variant)
        except ValueError:
            raise ManifestError("eta_variant", f"unknown variant {self.eta_variant!r}")
        if self.gamma is not None and not (isinstance(self.gamma, (int, float)) and self.gamma > 0):
            raise ManifestError("gamma", f"must be a positive number, got {self.gamma!r}")
        if self.R is not None and not (isinstance(self.R, int) and self.R >= 1):
            raise ManifestError("R", f"must be an integer >= 1, got {self.R!r}")
        if not isinstance(self.anytime, bool):
            raise ManifestError("anytime", f"must be true or false, got {self.anytime!r}")
        unknown = set(self.topology) - {"beta", "k", "matrix"}
        if unknown:
            key = sorted(unknown)[0]
            raise ManifestError(f"topology.{key}", "unknown topology key")
        if len(self.topology) != 1:
            raise ManifestError("topology", "give exactly one of topology.beta, topology.k, "
                                "topology.matrix")
        if "n" not in self.problem_params and self.problem != "pl_quadratic":
            raise ManifestError("problem.n", "node count is required")

    def identity(self) -> str:
        """Canonical text of everything except the output location."""
        return serialize_manifest(self, include_output=False)


_FAMILIES = ("heterogeneous_quadratic", "pl_quadratic", "nesterov_splitting", "zero_chain",
             "split_zero_chain")
_SCALARS = {f.name: f for f in fields(Manifest) if f.name not in ("problem_params", "topology")}


def parse_manifest(text: str) -> Manifest:
    """Parse flat ``key = value`` lines (``#`` comments and blank lines ignored)."""
    kwargs: dict = {}
    params: dict = {}
    topo: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(line, f"line {lineno} is not of the form key = value")
        key, _, value = (s.strip() for s in line.partition("="))
        if not key or not value:
            raise ManifestError(key or f"line {lineno}", "empty key or value")
        if key in kwargs or key in (f"problem.{k}" for k in params) or \
                key in (f"topology.{k}" for k in topo):
            raise ManifestError(key, "duplicate key")
        if key.startswith("problem."):
            params[key[len("problem."):]] = _coerce(value)
        elif key.startswith("topology."):
            topo[key[len("topology."):]] = value if key == "topology.matrix" else _coerce(value)
        elif key in _SCALARS:
            kwargs[key] = value if key in ("problem", "name", "output_dir") else _coerce(value)
        else:
            raise ManifestError(key, "unknown key")
    for required in ("problem", "T"):
        if required not in kwargs:
            raise ManifestError(required, "missing required key")
    return Manifest(problem_params=params, topology=topo, **kwargs)


def serialize_manifest(m: Manifest, include_output: bool = True) -> str:
    lines = [f"name = {m.name}", f"problem = {m.problem}"]
    lines += [f"problem.{k} = {_render(v)}" for k, v in sorted(m.problem_params.items())]
    lines += [f"topology.{k} = {_render(v)}" for k, v in sorted(m.topology.items())]
    for key in ("algorithm", "regime", "gamma", "R", "anytime", "eta_variant", "delta", "T",
                "seed"):
        value = getattr(m, key)
        if value is not None:
            lines.append(f"{key} = {_render(value)}")
    if include_output:
        lines.append(f"output_dir = {m.output_dir}")
    return "\n".join(lines) + "\n"


def load_manifest(path) -> Manifest:
    return parse_manifest(Path(path).read_text())


def manifest_hash(m: Manifest) -> str:
    return hashlib.sha256(m.identity().encode()).hexdigest()[:16]


def build_problem(m: Manifest) -> problems.Problem:
    try:
        return problems.make_problem(m.problem, **dict(m.problem_params))
    except TypeError as exc:
        raise ManifestError("problem", f"bad parameters for {m.problem}: {exc}") from None


def build_weight_matrix(m: Manifest, n: int) -> topology.WeightMatrix:
    t = m.topology
    if "matrix" in t:
        W = topology.load_weight_matrix(t["matrix"])
        if W.n != n:
            raise ManifestError("topology.matrix", f"matrix has n={W.n}, problem has n={n}")
        return W
    if "k" in t:
        return topology.uniform_weight_matrix(topology.ring_lattice(n, t["k"]))
    try:
        W, _ = topology.construct_weight_matrix(n, float(t["beta"]))
    except ValueError as exc:
        raise ManifestError("topology.beta", str(exc)) from None
    return W


def build_schedule(m: Manifest, problem, W) -> tuple[optimizers.Schedule, Callable | None]:
    algorithm = optimizers.Algorithm(m.algorithm)
    R = 1 if algorithm is optimizers.Algorithm.dsgd else m.R
    if m.gamma is not None:
        if R is None:
            R = 1
        sched = optimizers.Schedule(float(m.gamma), R, m.regime)
    else:
        sched = optimizers.make_schedule(problem, W.beta, algorithm, m.T, m.regime, R, m.delta)
    gamma_fn = None
    if m.anytime:
        gamma_fn = optimizers.anytime_lr(problem, W.beta, algorithm, sched.R, m.regime, m.delta)
    return sched, gamma_fn


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def output_path(m: Manifest) -> Path:
    return Path(m.output_dir) / f"{m.name}-{manifest_hash(m)}.csv"


def run_manifest(m: Manifest) -> Path:
    """Execute ``m`` and write its records CSV; returns the file path."""
    problem = build_problem(m)
    W = build_weight_matrix(m, problem.n)
    sched, gamma_fn = build_schedule(m, problem, W)
    records = optimizers.run(problem, W, m.algorithm, sched, m.T, seed=m.seed, gamma_fn=gamma_fn,
                             eta_variant=m.eta_variant)
    path = output_path(m)
    _atomic_write(path, optimizers.records_to_csv(records))
    return path


def expand_grid(base: Manifest, grid: dict[str, list]) -> list[Manifest]:
    """Cartesian product of manifest keys (flat names such as ``topology.beta``)."""
    base_text = serialize_manifest(base)
    keys = list(grid)
    out = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        lines = [ln for ln in base_text.splitlines()
                 if ln.partition("=")[0].strip() not in keys]
        lines += [f"{k} = {_render(v)}" for k, v in zip(keys, combo)]
        out.append(parse_manifest("\n".join(lines)))
    return out


def run_sweep(manifests: list[Manifest], workers: int = 1, index_path=None) -> list[Path]:
    """Run independent manifests on a bounded process pool, in input order."""
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if workers == 1:
        paths = [run_manifest(m) for m in manifests]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            paths = list(pool.map(run_manifest, manifests))
    if index_path is not None:
        rows = ["manifest_hash,name,algorithm,problem,T,seed,topology,file"]
        for m, p in zip(manifests, paths):
            topo = ";".join(f"{k}={v}" for k, v in sorted(m.topology.items()))
            rows.append(f"{manifest_hash(m)},{m.name},{m.algorithm},{m.problem},{m.T},{m.seed},"
                        f"{topo},{p.name}")
        _atomic_write(Path(index_path), "\n".join(rows) + "\n")
    return paths


# ---------------------------------------------------------------------------
# Topology and gossip sweeps


def construction_beta_grid(n: int, count: int = 12) -> list[float]:
    """Half the targets linear on [0, cos(pi/9)], half log-spaced in 1 - beta up to cos(pi/n)."""
    top = math.cos(math.pi / n)
    lin = np.linspace(0.0, topology.CASE_BOUNDARY, count // 2)
    if top <= topology.CASE_BOUNDARY:
        return [float(b) for b in np.linspace(0.0, top, count)]
    gaps = np.geomspace(1 - topology.CASE_BOUNDARY, 1 - top, count - count // 2 + 1)[1:]
    return [float(b) for b in lin] + [float(1 - g) for g in gaps]


def sweep_beta_diameter(n_list, beta_grid=None, low: float = 0.3, high: float = 6.0) -> list[dict]:
    """Rows of (n, beta, k, D, D sqrt(1 - beta)) with the bounded-ratio flag on Case-2 cells.

    ``beta_grid`` is a list of targets or a callable ``n -> list``; default
    is :func:`construction_beta_grid`.
    """
    rows = []
    for n in n_list:
        betas = construction_beta_grid(n) if beta_grid is None else (
            beta_grid(n) if callable(beta_grid) else beta_grid)
        for beta in betas:
            if beta > math.cos(math.pi / n) + 1e-15:
                raise ValueError(f"beta={beta} exceeds cos(pi/n)={math.cos(math.pi / n)} for n={n}")
            W, g = topology.construct_weight_matrix(n, beta)
            D = topology.diameter(n, g.degree_k)
            ratio = D * math.sqrt(1 - beta)
            case2 = not g.is_complete
            rows.append({
                "n": n, "beta": beta, "k": g.degree_k, "D": D, "ratio": ratio,
                "beta_measured": W.beta, "case": 2 if case2 else 1,
                "passed": (low <= ratio <= high) if case2 else True,
            })
    return rows


def contraction_table(betas=(0.5, 0.8, 0.9, 0.95, 0.99), n: int = 32, R_max: int = 50,
                      variant=gossip.DEFAULT_VARIANT) -> list[dict]:
    """Spectral norm of ``M^(R) - 11^T/n`` against ``sqrt(2)(1 - sqrt(1-beta))^R``."""
    rows = []
    J = np.full((n, n), 1.0 / n)
    for beta in betas:
        W, _ = topology.construct_weight_matrix(n, beta)
        eta = gossip.momentum_eta(W.beta, variant)
        Wm = W.entries
        M_prev, M = np.eye(n), np.eye(n)
        for R in range(1, R_max + 1):
            M_prev, M = M, (1 + eta) * (Wm @ M) - eta * M_prev
            norm = float(np.linalg.norm(M - J, 2))
            bound = gossip.contraction_bound(beta, R)
            rows.append({"beta": beta, "R": R, "norm": norm, "bound": bound,
                         "ratio": norm / bound, "passed": norm <= bound})
    return rows


# ---------------------------------------------------------------------------
# Verification suites


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


@dataclass
class CheckResult:
    suite: str
    check: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"suite": self.suite, "check": self.check, "passed": bool(self.passed),
                           **self.detail}, default=_json_default)


def _suite_spectrum() -> list[CheckResult]:
    worst = 0.0
    for n in range(4, 65):
        for k in range(2, n - 1, 2):
            A = topology.ring_lattice(n, k).adjacency_matrix()
            dense = np.linalg.eigvalsh(k * np.eye(n) - A)
            closed = np.sort(topology.laplacian_spectrum(n, k).eigenvalues)
            worst = max(worst, float(np.abs(dense - closed).max()))
    bad = [(n, k) for n in range(4, 201) for k in range(2, n - 1, 2)
           if not topology.laplacian_spectrum(n, k).sandwich_holds]
    return [CheckResult("spectrum", "closed_form_vs_dense", worst <= 1e-9, {"max_error": worst}),
            CheckResult("spectrum", "sandwich_n_le_200", not bad, {"violations": len(bad)})]


def _suite_distance() -> list[CheckResult]:
    mismatches = 0
    for n in range(4, 61):
        for k in range(2, n - 1, 2):
            g = topology.ring_lattice(n, k)
            for i in range(1, n + 1):
                bfs = topology._bfs_from(g, i - 1)
                closed = [topology.distance(g, i, j) for j in range(1, n + 1)]
                mismatches += int(np.sum(np.asarray(closed) != bfs))
            if topology.diameter(n, k) != topology.bfs_diameter(g):
                mismatches += 1
    return [CheckResult("distance", "closed_form_vs_bfs", mismatches == 0,
                        {"mismatches": mismatches})]


def _suite_theorem2() -> list[CheckResult]:
    out = []
    for row in sweep_beta_diameter([20, 50, 100, 200]):
        W, _ = topology.construct_weight_matrix(row["n"], row["beta"])
        beta_err = abs(W.beta - row["beta"])
        stoch = W.stochasticity_error()
        min_eig = float(np.linalg.eigvalsh(W.entries).min())
        ok = row["passed"] and beta_err <= 1e-8 and stoch <= 1e-12 and min_eig >= -1e-10
        out.append(CheckResult("theorem2", f"n={row['n']},beta={row['beta']:.6f}", ok,
                               {"k": row["k"], "D": row["D"], "ratio": row["ratio"],
                                "beta_error": beta_err, "stochasticity": stoch,
                                "min_eig": min_eig}))
    return out


def _suite_gossip() -> list[CheckResult]:
    out = []
    rows = contraction_table()
    for beta in sorted({r["beta"] for r in rows}):
        sub = [r for r in rows if r["beta"] == beta]
        worst = max(sub, key=lambda r: r["ratio"])
        out.append(CheckResult("gossip", f"contraction_beta={beta}", all(r["passed"] for r in sub),
                               {"worst_R": worst["R"], "worst_ratio": worst["ratio"],
                                "violations": sum(not r["passed"] for r in sub)}))
    rng = np.random.default_rng(0)
    drift = 0.0
    for beta in (0.5, 0.8, 0.9, 0.95, 0.99):
        W, _ = topology.construct_weight_matrix(32, beta)
        phi = rng.standard_normal((32, 5))
        mean0 = phi.mean(axis=0)

        def check(r, z):
            nonlocal drift
            drift = max(drift, float(np.abs(z.mean(axis=0) - mean0).max()))

        gossip.fast_gossip_average(phi, gossip.GossipPlan(W, 50), callback=check)
    out.append(CheckResult("gossip", "mean_preservation", drift <= 1e-12, {"max_drift": drift}))
    return out


def _suite_zero_chain() -> list[CheckResult]:
    rng = np.random.default_rng(1)
    d = 12
    worst_fd = 0.0
    for _ in range(100):
        x = 1.5 * rng.standard_normal(d)
        g = problems.zero_chain_grad(x)
        h = 1e-5
        fd = np.array([(problems.zero_chain_value(x + h * e) - problems.zero_chain_value(x - h * e))
                       / (2 * h) for e in np.eye(d)])
        worst_fd = max(worst_fd, float(np.linalg.norm(fd - g) / max(np.linalg.norm(g), 1e-12)))
    sup = max(float(np.abs(problems.zero_chain_grad(3 * rng.standard_normal(d))).max())
              for _ in range(1000))
    low = np.inf
    for _ in range(1000):
        x = 3 * rng.standard_normal(d)
        x[-1] = 0.0
        low = min(low, float(np.abs(problems.zero_chain_grad(x)).max()))
    chain_ok = True
    for _ in range(1000):
        p = int(rng.integers(0, d))
        x = np.zeros(d)
        x[:p] = 3 * rng.standard_normal(p)
        chain_ok &= problems.prog(problems.zero_chain_grad(x)) <= problems.prog(x) + 1
    return [CheckResult("zero_chain", "finite_differences", worst_fd <= 1e-5, {"max_rel": worst_fd}),
            CheckResult("zero_chain", "grad_sup_le_23", sup <= problems.G0, {"max": sup}),
            CheckResult("zero_chain", "grad_sup_ge_1", low >= 1.0, {"min": low}),
            CheckResult("zero_chain", "zero_chain_property", bool(chain_ok))]


def _suite_propagation() -> list[CheckResult]:
    g = topology.ring_lattice(12, 2)
    W = topology.uniform_weight_matrix(g)
    out = []
    for alg, R in (("dsgd", 1), ("mg_dsgd", 3)):
        ok, top = True, 0
        for seed in range(5):
            P = problems.split_zero_chain_problem(12, 40, L=50.0, lam=1.0)
            dist = topology.set_distance(g, P.E1, P.E2)
            recs = optimizers.run(P, W, alg, optimizers.Schedule(1.0, R), 500, seed=seed)
            ok &= all(r.prog <= problems.prog_bound(r.T, dist) for r in recs)
            top = max(top, recs[-1].prog)
        out.append(CheckResult("propagation", alg, bool(ok), {"max_prog": top}))
    return out


def _suite_nesterov() -> list[CheckResult]:
    out = []
    for kappa in (2.0, 4.0, 10.0):
        P = problems.nesterov_splitting_problem(12, 1.0, 1.0 / kappa, 1.0)
        x = np.zeros(P.dim)
        for _ in range(100_000):
            g = P.grad(x)
            if np.abs(g).max() < 1e-13:
                break
            x = x - g / P.L
        err = float(np.abs(x - P.x_star).max())
        res = P.optimality_residual()
        out.append(CheckResult("nesterov", f"kappa={kappa}", err <= 1e-6 and res <= 1e-10,
                               {"sup_error": err, "residual": res, "q": P.q}))
    return out


def _oracle_stats(samples, exact):
    """Max z-score of the sample mean and the mean squared deviation from ``exact``.

    Coordinates on which every draw is identical must equal ``exact`` exactly.
    """
    draws = len(samples)
    const = np.all(samples == samples[0], axis=0)
    if np.any(samples[0][const] != exact[const]):
        return math.inf, math.inf
    live = samples[:, ~const]
    z = 0.0
    if live.size:
        se = live.std(axis=0, ddof=1) / math.sqrt(draws)
        z = float((np.abs(live.mean(axis=0) - exact[~const]) / se).max())
    var = float(((samples - exact) ** 2).sum(axis=1).mean())
    return z, var


def _suite_oracles(draws: int = 100_000) -> list[CheckResult]:
    # Homogeneous instances with one node per draw: each row is an independent sample.
    rng = np.random.default_rng(7)
    out = []
    p = 0.3
    P = problems.bernoulli_oracle(problems.zero_chain_problem(draws, 6, L=1.0, lam=1.0), p)
    points = [np.zeros(6), np.array([1.2, -0.9, 0, 0, 0, 0]), np.array([0.8, 1.1, -2.0, 0.7, 0, 0])]
    for i, x in enumerate(points):
        X = np.tile(x, (draws, 1))
        exact = P.local_grads(X[:1])[0]
        z, var = _oracle_stats(P.sample_grads(X, rng), exact)
        lead = exact[problems.prog(x)]
        expected = lead**2 * (1 - p) / p
        ok = z <= 4 and abs(var - expected) <= 0.05 * expected
        out.append(CheckResult("oracles", f"bernoulli_point{i}", ok,
                               {"max_z": z, "variance": var, "expected": expected}))
    sigma_sq = 2.0
    Q = problems.pl_quadratic_pair(5, 1.0, 0.1, 1.0, 1, n=draws, sigma_sq=sigma_sq)
    for i in range(3):
        X = np.tile(rng.standard_normal(5), (draws, 1))
        z, var = _oracle_stats(Q.sample_grads(X, rng), Q.local_grads(X[:1])[0])
        ok = z <= 4 and var <= sigma_sq * 1.02
        out.append(CheckResult("oracles", f"gaussian_point{i}", ok,
                               {"max_z": z, "variance": var, "sigma_sq": sigma_sq}))
    return out


def _suite_pl() -> list[CheckResult]:
    H = problems.heterogeneous_quadratic_suite(8, 10, 1.0, 0.1, 0.0, 0.0, seed=0)
    W, _ = topology.construct_weight_matrix(8, 0.0)
    gamma = 1.0 / (4 * H.L)
    recs = optimizers.run(H, W, "dsgd", optimizers.Schedule(gamma), 200)
    gap = recs[0].subopt
    ok = all(r.subopt <= (1 - H.mu * gamma / 2) ** r.k * gap for r in recs)
    return [CheckResult("pl", "linear_rate", ok, {"final_subopt": recs[-1].subopt})]


def transient_pair(beta: float, seed: int, n: int = 16, d: int = 20, b_sq: float = 1.0,
                   T: int = 20_000) -> dict:
    """T* for DSGD and MG-DSGD on one heterogeneous quadratic instance."""
    W, _ = topology.construct_weight_matrix(n, beta)
    H = problems.heterogeneous_quadratic_suite(n, d, 1.0, 0.1, b_sq, 1.0, seed=seed)
    out = {}
    for alg in ("dsgd", "mg_dsgd"):
        R = 1 if alg == "dsgd" else gossip.choose_R_nonconvex(n, W.beta, b_sq, 1.0)
        lr = optimizers.anytime_lr(H, W.beta, alg, R)
        recs = optimizers.run(H, W, alg, optimizers.Schedule(lr(0), R), T, seed=seed, gamma_fn=lr)
        out[alg] = optimizers.transient_iterations(recs, 1.0, n)
    return out


def _suite_transient() -> list[CheckResult]:
    from scipy.stats import spearmanr

    pairs = [transient_pair(0.95, s) for s in range(5)]
    wins = sum(p["mg_dsgd"] <= p["dsgd"] for p in pairs)
    medians = [float(np.median([transient_pair(b, s)["dsgd"] for s in range(5)]))
               for b in (0.5, 0.9)] + [float(np.median([p["dsgd"] for p in pairs]))]
    rho = float(spearmanr([0.5, 0.9, 0.95], medians).statistic)
    return [CheckResult("transient", "mg_le_dsgd_at_0.95", wins >= 4, {"wins": wins}),
            CheckResult("transient", "dsgd_monotone_in_beta", rho >= 0.9,
                        {"medians": medians, "spearman": rho})]


def iterations_to_eps(n: int, seed: int, eps: float = 3e-3, d: int = 10) -> int | None:
    """Smallest budget on a 1.2-geometric grid whose MG-DSGD run averages ``||grad||^2 <= eps``."""
    W, _ = topology.construct_weight_matrix(n, 0.0)
    H = problems.heterogeneous_quadratic_suite(n, d, 1.0, 0.1, 0.0, 1.0, seed=seed)
    for i in range(60):
        T = int(round(100 * 1.2**i))
        sched = optimizers.make_schedule(H, 0.0, "mg_dsgd", T)
        recs = optimizers.run(H, W, "mg_dsgd", sched, T, seed=seed)
        if np.mean([r.grad_norm_sq for r in recs[1:]]) <= eps:
            return T
    return None


def _suite_speedup() -> list[CheckResult]:
    t8 = [iterations_to_eps(8, s) for s in range(5)]
    t16 = [iterations_to_eps(16, s) for s in range(5)]
    ratio = float(np.median(t8) / np.median(t16))
    return [CheckResult("speedup", "halving_8_to_16", 1.3 <= ratio <= 2.7,
                        {"T8": t8, "T16": t16, "ratio": ratio})]


SUITES: dict[str, Callable[[], list[CheckResult]]] = {
    "spectrum": _suite_spectrum,
    "distance": _suite_distance,
    "theorem2": _suite_theorem2,
    "gossip": _suite_gossip,
    "zero_chain": _suite_zero_chain,
    "propagation": _suite_propagation,
    "nesterov": _suite_nesterov,
    "oracles": _suite_oracles,
    "pl": _suite_pl,
    "transient": _suite_transient,
    "speedup": _suite_speedup,
}


def run_suite(name: str) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    start = time.perf_counter()
    results = SUITES[name]()
    elapsed = time.perf_counter() - start
    for r in results:
        r.detail.setdefault("seconds", round(elapsed, 3))
    return results


def format_results(results: list[CheckResult]) -> str:
    lines = [r.to_json() for r in results]
    passed = int(sum(bool(r.passed) for r in results))
    lines.append(json.dumps({"summary": True, "passed": passed, "failed": len(results) - passed}))
    return "\n".join(lines)
