"""Ring-lattice graphs, their closed-form metric/spectral properties, and
weight matrices with a prescribed connectivity measure.

Node labels in the public API are 1-based (node ``i`` in ``1..n``), matching
the modular convention used to define the ring lattice.  Adjacency lists and
matrices are stored 0-based; ``label - 1`` is the row index.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "COMPLETE",
    "CASE_BOUNDARY",
    "ConvergenceError",
    "Graph",
    "WeightMatrix",
    "SpectrumReport",
    "HkBoundReport",
    "ring_lattice",
    "complete_graph",
    "distance",
    "bfs_distance",
    "bfs_diameter",
    "set_distance",
    "diameter",
    "laplacian_matrix",
    "laplacian_spectrum",
    "construct_weight_matrix",
    "uniform_weight_matrix",
    "connectivity_measure",
    "h_k",
    "h_k_bound_check",
    "save_weight_matrix",
    "load_weight_matrix",
]

COMPLETE = "complete"

# cos(pi/9): above this target the complete graph can no longer realise beta
# with diameter Theta(1/sqrt(1 - beta)).
CASE_BOUNDARY = math.cos(math.pi / 9)


class ConvergenceError(RuntimeError):
    """Raised when an iterative routine hits its iteration cap."""


@dataclass(frozen=True)
class Graph:
    """Undirected graph over nodes ``1..n``.

    Attributes:
        n: Number of nodes.
        degree_k: Even ring-lattice degree, or ``"complete"``.
        adjacency: Per-node sorted neighbour tuples, 0-based, self excluded.
    """

    n: int
    degree_k: Union[int, str]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def is_complete(self) -> bool:
        return self.degree_k == COMPLETE

    @property
    def degree(self) -> int:
        return self.n - 1 if self.is_complete else int(self.degree_k)

    def neighbors(self, i: int) -> list[int]:
        """Neighbours of node ``i`` as 1-based labels."""
        _check_node(self, i)
        return [j + 1 for j in self.adjacency[i - 1]]

    def adjacency_matrix(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        for i, nbrs in enumerate(self.adjacency):
            A[i, list(nbrs)] = 1.0
        return A

    def laplacian(self) -> np.ndarray:
        A = self.adjacency_matrix()
        return np.diag(A.sum(axis=1)) - A

    def support_mask(self) -> np.ndarray:
        """Boolean mask of entries a weight matrix on this graph may fill."""
        return self.adjacency_matrix().astype(bool) | np.eye(self.n, dtype=bool)


@dataclass(frozen=True)
class WeightMatrix:
    """Dense gossip matrix together with its measured connectivity ``beta``."""

    n: int
    entries: np.ndarray = field(repr=False)
    beta: float
    source_graph: Graph

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    @property
    def degree_k(self) -> Union[int, str]:
        return self.source_graph.degree_k

    def stochasticity_error(self) -> float:
        """Max deviation of row and column sums from one."""
        W = self.entries
        return float(max(np.abs(W.sum(axis=1) - 1).max(), np.abs(W.sum(axis=0) - 1).max()))

    def respects_graph(self) -> bool:
        return not np.any(self.entries[~self.source_graph.support_mask()] != 0)


@dataclass(frozen=True)
class SpectrumReport:
    """Laplacian eigenvalues of a ring lattice in ``j = 1..n`` order."""

    eigenvalues: np.ndarray = field(repr=False)
    min_nonzero: float
    lower_bound: float
    upper_bound: float

    @property
    def sandwich_holds(self) -> bool:
        return self.lower_bound <= self.min_nonzero <= self.upper_bound


@dataclass(frozen=True)
class HkBoundReport:
    max_value: float
    bound: float
    holds: bool


def _validate_nk(n: int, k: int) -> None:
    if int(n) != n or int(k) != k:
        raise ValueError(f"n and k must be integers, got n={n!r}, k={k!r}")
    if n < 4:
        raise ValueError(f"ring lattice needs n >= 4, got n={n}")
    if k % 2:
        raise ValueError(f"ring-lattice degree must be even, got k={k}")
    if k < 2:
        raise ValueError(f"ring-lattice degree must be >= 2, got k={k}")
    if k >= n - 1:
        raise ValueError(
            f"ring-lattice degree must satisfy k < n - 1 (got k={k}, n={n}); "
            "use complete_graph(n) for the fully connected case"
        )


def _check_node(g: Graph, i: int) -> None:
    if not 1 <= i <= g.n:
        raise IndexError(f"node {i} outside 1..{g.n}")


def ring_lattice(n: int, k: int) -> Graph:
    """The k-regular ring lattice: node i joins (i + l) mod n for 1 <= |l| <= k/2."""
    _validate_nk(n, k)
    half = k // 2
    adjacency = tuple(
        tuple(sorted({(i + l) % n for l in range(-half, half + 1) if l != 0})) for i in range(n)
    )
    return Graph(n=n, degree_k=k, adjacency=adjacency)


def complete_graph(n: int) -> Graph:
    if n < 1:
        raise ValueError(f"complete graph needs n >= 1, got {n}")
    adjacency = tuple(tuple(j for j in range(n) if j != i) for i in range(n))
    return Graph(n=n, degree_k=COMPLETE, adjacency=adjacency)


def distance(g: Graph, i: int, j: int) -> int:
    """Closed-form hop distance between 1-based nodes ``i`` and ``j``."""
    _check_node(g, i)
    _check_node(g, j)
    if i == j:
        return 0
    if g.is_complete:
        return 1
    gap = abs(j - i)
    return -(-2 * min(gap, g.n - gap) // g.degree)


def bfs_distance(g: Graph, i: int, j: int) -> int:
    """Hop distance by breadth-first search over the raw adjacency lists."""
    _check_node(g, i)
    _check_node(g, j)
    return int(_bfs_from(g, i - 1)[j - 1])


def _bfs_from(g: Graph, src: int) -> np.ndarray:
    dist = np.full(g.n, -1, dtype=int)
    dist[src] = 0
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in g.adjacency[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def bfs_diameter(g: Graph) -> int:
    return int(max(_bfs_from(g, s).max() for s in range(g.n)))


def diameter(n: int, k: Union[int, str]) -> int:
    """ceil(2 * floor(n/2) / k); 1 for the complete graph."""
    if k == COMPLETE:
        return 1
    _validate_nk(n, k)
    return -(-2 * (n // 2) // k)


def set_distance(g: Graph, A, B) -> int:
    """Minimum hop distance between two node sets (1-based labels)."""
    return min(distance(g, a, b) for a in A for b in B)


def laplacian_matrix(n: int, k: int) -> np.ndarray:
    """kI - sum_{l=1}^{k/2} (J^l + J^-l), with J the cyclic shift."""
    _validate_nk(n, k)
    J = np.roll(np.eye(n), 1, axis=1)
    A = np.zeros((n, n))
    P = np.eye(n)
    for _ in range(k // 2):
        P = P @ J
        A += P + P.T
    return k * np.eye(n) - A


def _sandwich(n: int, k: int) -> tuple[float, float]:
    upper = math.pi**2 * k * (k + 1) * (k + 2) / (6 * n**2)
    return (1 - math.pi**2 / 12) * upper, upper


def laplacian_spectrum(n: int, k: int) -> SpectrumReport:
    """Closed-form Laplacian eigenvalues of the ring lattice via the DFT of the circulant."""
    _validate_nk(n, k)
    j = np.arange(n)[:, None]
    ell = np.arange(-(k // 2), k // 2 + 1)[None, :]
    mu = k + 1 - np.cos(2 * np.pi * j * ell / n).sum(axis=1)
    mu[0] = 0.0  # exact: all cosines equal one
    lower, upper = _sandwich(n, k)
    return SpectrumReport(
        eigenvalues=mu, min_nonzero=float(mu[1:].min()), lower_bound=lower, upper_bound=upper
    )


def construct_weight_matrix(n: int, beta_target: float) -> tuple[WeightMatrix, Graph]:
    """Weight matrix on a ring lattice with ``||W - 11^T/n||_2 == beta_target``.

    Targets up to ``min(cos(pi/9), cos(pi/n))`` use the complete graph with
    ``W = (1 - beta)/n * 11^T + beta * I``.  Larger targets (n >= 10) use the
    ring lattice of degree ``2 * ceil(n * sqrt(3(1 - beta) / (pi^2 (1 - pi^2/12))))``
    with ``W = I - (1 - beta) / mu_min * L``, whose diameter scales as
    ``1 / sqrt(1 - beta)``.
    """
    beta_max = math.cos(math.pi / n) if n >= 2 else 0.0
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 <= beta_target <= beta_max:
        raise ValueError(f"beta_target={beta_target} outside [0, cos(pi/n)={beta_max}]")

    if beta_target <= min(CASE_BOUNDARY, beta_max):
        graph = complete_graph(n)
        W = (1 - beta_target) / n * np.ones((n, n)) + beta_target * np.eye(n)
    else:
        if n < 10:
            raise ValueError(f"beta_target={beta_target} > cos(pi/9) requires n >= 10, got {n}")
        scale = math.sqrt(3 * (1 - beta_target) / (math.pi**2 * (1 - math.pi**2 / 12)))
        k = 2 * math.ceil(n * scale)
        graph = ring_lattice(n, k)
        mu_min = laplacian_spectrum(n, k).min_nonzero
        W = np.eye(n) - (1 - beta_target) / mu_min * laplacian_matrix(n, k)

    beta = connectivity_measure(W)
    return WeightMatrix(n=n, entries=W, beta=beta, source_graph=graph), graph


def uniform_weight_matrix(graph: Graph) -> WeightMatrix:
    """Equal weights ``1/(degree + 1)`` on each node and its neighbours."""
    W = (graph.adjacency_matrix() + np.eye(graph.n)) / (graph.degree + 1)
    return WeightMatrix(n=graph.n, entries=W, beta=connectivity_measure(W), source_graph=graph)


def connectivity_measure(
    W, tol: float = 1e-10, max_iter: int = 1_000_000, seed: int = 0
) -> float:
    """Spectral norm of ``W - 11^T/n`` by power iteration on ``B^T B``.

    The averaging direction is deflated analytically (``Bv = Wv - mean(v)``)
    and the iteration stops once the relative residual of the Rayleigh quotient
    drops below ``tol``.  The start vector is a fixed pseudo-random draw: the
    structured vectors one might pick (e.g. alternating signs) are Fourier
    modes, hence eigenvectors of every circulant W.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"W must be square, got shape {W.shape}")
    n = W.shape[0]
    if n < 2:
        return 0.0
    WT = W.T

    def gram(v):
        u = W @ v
        u -= u.mean()
        w = WT @ u
        return w - w.mean()

    v = np.random.default_rng(seed).standard_normal(n)
    v -= v.mean()
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_iter):
        y = gram(v)
        theta = float(v @ y)
        if theta <= 0.0:
            return 0.0
        if np.linalg.norm(y - theta * v) <= tol * theta:
            return math.sqrt(theta)
        v = y / np.linalg.norm(y)
    raise ConvergenceError(
        f"power iteration did not reach relative residual {tol} in {max_iter} steps "
        f"(last estimate {math.sqrt(max(theta, 0.0))})"
    )


def h_k(theta, k: int):
    """sum_{l=-k/2}^{k/2} cos(2 l theta)."""
    theta = np.asarray(theta, dtype=float)
    ell = np.arange(-(k // 2), k // 2 + 1)
    return np.cos(2 * np.multiply.outer(theta, ell)).sum(axis=-1)


def h_k_bound_check(n: int, k: int, grid_size: int = 10_000) -> HkBoundReport:
    """Grid check of ``max h_k <= max{(k+1) sqrt((1+a^2)/(1+(k+1)^2 a^2)), h_k(a)}`` on [a, pi-a], a = pi/n."""
    if grid_size < 1000:
        raise ValueError(f"grid_size must be >= 1000, got {grid_size}")
    if k % 2:
        raise ValueError(f"k must be even, got {k}")
    alpha = math.pi / n
    if alpha > math.pi / (k + 1):
        raise ValueError(f"need pi/n <= pi/(k+1), i.e. k + 1 <= n (got n={n}, k={k})")
    grid = np.linspace(alpha, math.pi - alpha, grid_size)
    max_value = float(h_k(grid, k).max())
    bound = max(
        (k + 1) * math.sqrt((1 + alpha**2) / (1 + (k + 1) ** 2 * alpha**2)),
        float(h_k(alpha, k)),
    )
    return HkBoundReport(max_value=max_value, bound=bound, holds=max_value <= bound + 1e-12)


def save_weight_matrix(path, W: WeightMatrix) -> None:
    """Plain text: header ``n k beta`` then one whitespace-separated row per line."""
    lines = [f"{W.n} {W.degree_k} {W.beta!r}"]
    lines += [" ".join(repr(float(x)) for x in row) for row in W.entries]
    Path(path).write_text("\n".join(lines) + "\n")


def load_weight_matrix(path) -> WeightMatrix:
    text = Path(path).read_text().split("\n")
    header = text[0].split()
    if len(header) != 3:
        raise ValueError(f"{path}: header must be 'n k beta', got {text[0]!r}")
    n = int(header[0])
    k = header[1] if header[1] == COMPLETE else int(header[1])
    rows = [line.split() for line in text[1:] if line.strip()]
    entries = np.array(rows, dtype=float)
    if entries.shape != (n, n):
        raise ValueError(f"{path}: expected {n}x{n} rows, got {entries.shape}")
    graph = complete_graph(n) if k == COMPLETE else ring_lattice(n, k)
    return WeightMatrix(n=n, entries=entries, beta=float(header[2]), source_graph=graph)
