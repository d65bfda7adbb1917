"""Communication graphs, consensus matrices, and the simulated exchange.

The network is synchronous, undirected and time-invariant.  A consensus
matrix W must match the graph sparsity, be symmetric and doubly
stochastic, and have spectral radius of W - 11^T/n strictly below one;
Metropolis-Hastings weights satisfy all of that on any connected graph.
One consensus step sends one payload per directed edge, so a round of
``phi`` steps costs ``phi * 2 |E|`` messages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on nodes {0, ..., n-1}."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        canon = []
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range")
            e = (min(i, j), max(i, j))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            canon.append(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def average_degree(self) -> float:
        return 2.0 * self.edge_count / self.n

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [sorted(v) for v in nbrs]

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        nbrs = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in nbrs[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @staticmethod
    def from_json(doc: dict) -> "Graph":
        return Graph(int(doc["n"]), tuple((int(i), int(j)) for i, j in doc["edges"]))


@dataclass(frozen=True)
class ConsensusMatrix:
    """Dense symmetric doubly-stochastic weights with certified gap.

    ``nu`` is the spectral radius of W - 11^T/n (equivalently the second
    largest absolute eigenvalue of W); averaging contracts deviations
    from the mean by nu per step.  ``edge_count`` drives message
    accounting: one step costs 2 * edge_count payloads.
    """

    W: np.ndarray
    nu: float
    edge_count: int

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        n = W.shape[0]
        if W.shape != (n, n):
            raise ValueError("W must be square")
        if np.max(np.abs(W - W.T)) > 1e-12:
            raise ValueError("W must be symmetric")
        if np.max(np.abs(W.sum(axis=1) - 1.0)) > 1e-10:
            raise ValueError("rows of W must sum to 1")
        if np.min(W) < -1e-12:
            raise ValueError("W must be entrywise nonnegative")
        if not (0.0 <= self.nu < 1.0):
            raise ValueError(f"nu={self.nu} must lie in [0, 1)")
        W = W.copy()
        W.flags.writeable = False
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.W.shape[0]


@dataclass
class MessageLedger:
    """Running count of payload transmissions, one entry per round."""

    total_messages: int = 0
    per_iteration: list[int] = field(default_factory=list)

    def record(self, count: int) -> None:
        self.per_iteration.append(int(count))
        self.total_messages += int(count)


def random_connected_graph(n: int, target_avg_degree: float, seed: int,
                           max_attempts: int = 1000) -> Graph:
    """Erdos-Renyi graph with p = target_avg_degree/(n-1), resampled
    from the same seeded generator until connected.

    Raises ConfigurationError after ``max_attempts`` failed draws,
    suggesting a higher degree.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if target_avg_degree <= 0:
        raise ValueError("target_avg_degree must be positive")
    p = min(target_avg_degree / (n - 1), 1.0)
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(max_attempts):
        mask = rng.random(iu.size) < p
        edges = tuple((int(i), int(j)) for i, j in zip(iu[mask], ju[mask]))
        g = Graph(n, edges)
        if g.is_connected():
            return g
    raise ConfigurationError(
        f"no connected graph in {max_attempts} draws; "
        f"increase target_avg_degree (currently {target_avg_degree})")


def metropolis_weights(g: Graph) -> ConsensusMatrix:
    """Metropolis-Hastings weights W_ij = 1/(1 + max(deg_i, deg_j)).

    Diagonal entries absorb the slack so rows sum to one.  The gap nu is
    certified by a full symmetric eigendecomposition of W.
    """
    if not g.is_connected():
        raise ConfigurationError("graph is disconnected; nu would be 1")
    deg = g.degrees()
    W = np.zeros((g.n, g.n))
    for i, j in g.edges:
        w = 1.0 / (1.0 + max(deg[i], deg[j]))
        W[i, j] = w
        W[j, i] = w
    np.fill_diagonal(W, 1.0 - W.sum(axis=1))
    eigs = np.linalg.eigvalsh(W)
    nu = float(max(abs(eigs[0]), abs(eigs[-2]))) if g.n > 1 else 0.0
    nu = max(nu, 0.0)
    if nu >= 1.0 - 1e-12:
        raise ConfigurationError(f"consensus matrix has no spectral gap (nu={nu})")
    return ConsensusMatrix(W, nu, g.edge_count)


def exact_averaging_matrix(n: int, edge_count: int | None = None) -> ConsensusMatrix:
    """The idealized matrix 11^T/n (one step reaches the exact mean)."""
    if edge_count is None:
        edge_count = n * (n - 1) // 2
    return ConsensusMatrix(np.full((n, n), 1.0 / n), 0.0, edge_count)


def consensus_round(W: ConsensusMatrix, values: np.ndarray, phi: int,
                    ledger: MessageLedger | None = None) -> np.ndarray:
    """Apply ``v <- W v`` exactly ``phi`` times to per-node payloads.

    ``values`` has one row per node (any trailing payload shape).  The
    ledger, when given, is charged phi * 2|E| messages: one payload per
    directed edge per step.
    """
    if phi < 1:
        raise ValueError("phi must be at least 1")
    out = np.asarray(values, dtype=float)
    flat = out.reshape(out.shape[0], -1)
    for _ in range(phi):
        flat = W.W @ flat
    if ledger is not None:
        ledger.record(phi * 2 * W.edge_count)
    return flat.reshape(out.shape)


@dataclass(frozen=True)
class MinConsensusSteps:
    """Lower bound on consensus steps per iteration.

    ``exact`` follows the agreement analysis; ``simplified`` is the
    large-beta0 form log(1/(4n(1+d^2)))/log(nu), populated only when
    beta0 exceeds alpha*M by more than a factor 1e3.
    """

    exact: float
    simplified: float | None = None

    @property
    def phibar(self) -> float:
        return self.exact


def min_consensus_steps(beta0: float, alpha: float, M: float, n: int, d: int,
                        nu: float) -> MinConsensusSteps:
    """phibar = [log(beta0) - log(4 n (1+d^2) (beta0 + alpha M))] / log(nu).

    Running phi >= phibar consensus steps per iteration keeps the
    per-iteration payload disagreement within the geometric envelope the
    agreement theorem assumes.  nu = 0 (exact averaging) gives 0;
    beta0 = 0 likewise degenerates to 0 since deviations start and stay
    at zero under exact averaging.
    """
    if any(v < 0 for v in (beta0, alpha, M)) or n < 1 or d < 0:
        raise ValueError("arguments must be nonnegative (n >= 1)")
    if not (0.0 <= nu < 1.0):
        raise ValueError(f"nu={nu} must lie in [0, 1)")
    if beta0 == 0.0 or nu == 0.0:
        return MinConsensusSteps(0.0, 0.0)
    denom = 4.0 * n * (1 + d * d) * (beta0 + alpha * M)
    exact = (np.log(beta0) - np.log(denom)) / np.log(nu)
    simplified = None
    if alpha * M == 0.0 or beta0 / (alpha * M) > 1e3:
        simplified = float(np.log(1.0 / (4.0 * n * (1 + d * d))) / np.log(nu))
    return MinConsensusSteps(float(exact), simplified)


def check_consensus_conditions(W: np.ndarray, g: Graph,
                               atol: float = 1e-10) -> list[str]:
    """Violation messages for the consensus-matrix conditions.

    Checks graph sparsity, symmetry, row sums, nonnegativity, and the
    spectral gap; an empty list means the matrix is admissible.
    """
    W = np.asarray(W, dtype=float)
    problems = []
    if W.shape != (g.n, g.n):
        return [f"shape {W.shape} does not match n={g.n}"]
    allowed = np.eye(g.n, dtype=bool)
    for i, j in g.edges:
        allowed[i, j] = allowed[j, i] = True
    if np.any(np.abs(W[~allowed]) > atol):
        problems.append("nonzero weight on a non-edge")
    if np.max(np.abs(W - W.T)) > atol:
        problems.append("not symmetric")
    row_err = float(np.max(np.abs(W.sum(axis=1) - 1.0)))
    if row_err > atol:
        problems.append(f"row sums deviate from 1 by {row_err:.3e}")
    if np.min(W) < -atol:
        problems.append("negative entries")
    dev = W - np.full((g.n, g.n), 1.0 / g.n)
    rho = float(np.max(np.abs(np.linalg.eigvals(dev))))
    if rho >= 1.0 - 1e-12:
        problems.append(f"spectral radius of W - avg is {rho} >= 1")
    return problems
