"""Weighted undirected networks, cluster partitions and spectral checks.

A network is stored both as an edge list and as a dense symmetric
adjacency matrix.  Partitions group nodes into r >= 2 clusters whose
induced subgraphs must be connected; the external-equitability check
measures, for every ordered cluster pair, how unevenly the clusters are
coupled node by node.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ClusterNotConnected, GraphValidationError

#: Relative asymmetry above which symmetrization of an input matrix warns.
ASYMMETRY_WARN_REL = 1e-6


def eep_tolerance(net: "WeightedNetwork") -> float:
    """Absolute tolerance below which a weight-sum deviation counts as zero."""
    max_w = max((w for _, _, w in net.edges), default=0.0)
    return 1e-9 * (1.0 + max_w)


@dataclass(frozen=True)
class WeightedNetwork:
    """Connected undirected graph with positive edge weights."""

    n_nodes: int
    edges: tuple  # ((i, j, w), ...) with i < j, w > 0
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.adjacency.setflags(write=False)

    @classmethod
    def from_adjacency(cls, matrix) -> "WeightedNetwork":
        """Build from a square nonnegative matrix; symmetrizes if needed."""
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphValidationError(f"adjacency must be square, got {a.shape}")
        n = a.shape[0]
        if n < 2:
            raise GraphValidationError("network needs at least 2 nodes")
        if not np.all(np.isfinite(a)):
            raise GraphValidationError("adjacency contains non-finite entries")
        scale = 1.0 + np.abs(a).max()
        asym = np.abs(a - a.T).max() / scale
        if asym > ASYMMETRY_WARN_REL:
            warnings.warn(
                f"adjacency asymmetry {asym:.3g} exceeds {ASYMMETRY_WARN_REL}; "
                "symmetrizing as (A + A.T)/2",
                stacklevel=2,
            )
        a = (a + a.T) / 2.0
        if np.any(np.diag(a) != 0.0):
            raise GraphValidationError("adjacency must have zero diagonal")
        if np.any(a < 0.0):
            raise GraphValidationError("edge weights must be nonnegative")
        ii, jj = np.nonzero(np.triu(a, k=1))
        edges = tuple((int(i), int(j), float(a[i, j])) for i, j in zip(ii, jj))
        net = cls(n_nodes=n, edges=edges, adjacency=a)
        if not net.is_connected():
            raise GraphValidationError("network is disconnected")
        return net

    @classmethod
    def from_edges(cls, n_nodes: int, edges) -> "WeightedNetwork":
        a = np.zeros((n_nodes, n_nodes))
        for i, j, w in edges:
            if not (0 <= i < n_nodes and 0 <= j < n_nodes) or i == j:
                raise GraphValidationError(f"bad edge ({i}, {j})")
            if w <= 0:
                raise GraphValidationError(f"edge ({i}, {j}) has weight {w} <= 0")
            a[i, j] = w
            a[j, i] = w
        return cls.from_adjacency(a)

    def is_connected(self, nodes=None) -> bool:
        """BFS connectivity of the whole graph or of an induced subgraph."""
        nodes = list(range(self.n_nodes)) if nodes is None else sorted(nodes)
        if not nodes:
            return False
        inside = np.zeros(self.n_nodes, dtype=bool)
        inside[nodes] = True
        seen = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            u = stack.pop()
            for v in np.nonzero(self.adjacency[u])[0]:
                if inside[v] and int(v) not in seen:
                    seen.add(int(v))
                    stack.append(int(v))
        return len(seen) == len(nodes)

    def laplacian(self, nodes=None) -> np.ndarray:
        """Weighted Laplacian of the graph or of an induced subgraph."""
        a = self.adjacency
        if nodes is not None:
            idx = np.asarray(sorted(nodes))
            a = a[np.ix_(idx, idx)]
        return np.diag(a.sum(axis=1)) - a


@dataclass(frozen=True)
class Partition:
    """Clusters C_1..C_r: disjoint, covering, each of size >= 2 and connected."""

    clusters: tuple  # ((sorted node indices...), ...)

    @classmethod
    def from_lists(cls, clusters, net: WeightedNetwork) -> "Partition":
        groups = tuple(tuple(sorted(int(i) for i in c)) for c in clusters)
        if len(groups) < 2:
            raise GraphValidationError("partition needs at least 2 clusters")
        seen = set()
        for c in groups:
            if len(c) < 2:
                raise GraphValidationError(f"cluster {c} has fewer than 2 nodes")
            if seen & set(c):
                raise GraphValidationError("clusters overlap")
            seen |= set(c)
        if seen != set(range(net.n_nodes)):
            raise GraphValidationError("clusters do not cover all nodes")
        part = cls(clusters=groups)
        for p, c in enumerate(groups):
            if not net.is_connected(c):
                raise ClusterNotConnected(f"cluster {p} induces a disconnected subgraph")
        return part

    @property
    def r(self) -> int:
        return len(self.clusters)

    def cluster_of(self, node: int) -> int:
        for p, c in enumerate(self.clusters):
            if node in c:
                return p
        raise KeyError(node)

    def labels(self, n_nodes: int) -> np.ndarray:
        lab = np.empty(n_nodes, dtype=int)
        for p, c in enumerate(self.clusters):
            lab[list(c)] = p
        return lab


@dataclass(frozen=True)
class OrientedIncidence:
    """Oriented incidence matrix with a partition-conforming edge order.

    Columns list intra-cluster edges first (cluster 1, cluster 2, ...,
    lexicographic inside each cluster) and then inter-cluster edges.  Each
    edge is oriented from its smaller to its larger node index, so column
    e of ``matrix`` has -1 at the source and +1 at the sink and
    (B.T @ theta)[e] = theta_sink - theta_source.
    """

    matrix: np.ndarray  # N x |E|, entries in {-1, 0, +1}
    edge_order: tuple  # ((i, j), ...) matching columns
    weights: np.ndarray  # |E| diagonal entries
    n_intra: int  # number of intra-cluster columns (they come first)

    @property
    def weight_matrix(self) -> np.ndarray:
        return np.diag(self.weights)

    @property
    def b_intra(self) -> np.ndarray:
        return self.matrix[:, : self.n_intra]

    @property
    def b_inter(self) -> np.ndarray:
        return self.matrix[:, self.n_intra :]

    @property
    def w_intra(self) -> np.ndarray:
        return np.diag(self.weights[: self.n_intra])

    @property
    def w_inter(self) -> np.ndarray:
        return np.diag(self.weights[self.n_intra :])


@dataclass(frozen=True)
class EepReport:
    """Result of the external-equitability check."""

    is_exact: bool
    deviation_K: float
    worst_pair: tuple  # (cluster p, node i, node j, cluster q)
    tolerance: float


def build_incidence(net: WeightedNetwork, part: Partition | None = None) -> OrientedIncidence:
    """Oriented incidence and weight matrices with deterministic edge order.

    Without a partition all edges are enumerated lexicographically and
    counted as intra.  With a partition, intra edges come first grouped by
    cluster, then inter edges, matching the block forms
    B = [B_intra B_inter], W = blkdiag(W_intra, W_inter).
    """
    if part is None:
        order = sorted((i, j) for i, j, _ in net.edges)
        n_intra = len(order)
    else:
        labels = part.labels(net.n_nodes)
        intra = [[] for _ in range(part.r)]
        inter = []
        for i, j, _ in net.edges:
            if labels[i] == labels[j]:
                intra[labels[i]].append((i, j))
            else:
                inter.append((i, j))
        order = [e for block in intra for e in sorted(block)] + sorted(inter)
        n_intra = sum(len(block) for block in intra)
    b = np.zeros((net.n_nodes, len(order)))
    w = np.empty(len(order))
    for e, (i, j) in enumerate(order):
        b[i, e] = -1.0
        b[j, e] = +1.0
        w[e] = net.adjacency[i, j]
    return OrientedIncidence(matrix=b, edge_order=tuple(order), weights=w, n_intra=n_intra)


def check_partition(net: WeightedNetwork, part: Partition) -> EepReport:
    """Worst per-node deviation of cluster-to-cluster coupling sums.

    For every ordered pair of distinct clusters (p, q) and every pair of
    nodes i, j in cluster p, measures |sum_{k in C_q} a_ik - a_jk|; the
    maximum is the deviation bound K and the partition is externally
    equitable exactly when K falls below the ingestion tolerance.
    """
    tol = eep_tolerance(net)
    best = (0.0, (0, 0, 0, 0))
    for p, cp in enumerate(part.clusters):
        for q, cq in enumerate(part.clusters):
            if p == q:
                continue
            sums = net.adjacency[np.ix_(cp, cq)].sum(axis=1)
            i_min = int(np.argmin(sums))
            i_max = int(np.argmax(sums))
            dev = float(sums[i_max] - sums[i_min])
            if dev > best[0]:
                best = (dev, (p, cp[i_max], cp[i_min], q))
    dev, worst = best
    return EepReport(is_exact=dev <= tol, deviation_K=dev, worst_pair=worst, tolerance=tol)


def algebraic_connectivity(net: WeightedNetwork, part: Partition) -> float:
    """Smallest second Laplacian eigenvalue among the cluster subgraphs."""
    lam2 = np.inf
    for p, c in enumerate(part.clusters):
        if not net.is_connected(c):
            raise ClusterNotConnected(f"cluster {p} induces a disconnected subgraph")
        eigs = np.linalg.eigvalsh(net.laplacian(c))
        lam2 = min(lam2, float(eigs[1]))
    return lam2


def load_network_json(path) -> tuple:
    """Load ``{"nodes": N, "edges": [[i, j, w], ...], "partition": [[...], ...]}``.

    Returns (network, partition); partition is None when the key is absent.
    """
    with open(path) as fh:
        data = json.load(fh)
    if "nodes" not in data or "edges" not in data:
        raise GraphValidationError("network JSON needs 'nodes' and 'edges' keys")
    net = WeightedNetwork.from_edges(int(data["nodes"]), data["edges"])
    part = None
    if data.get("partition"):
        part = Partition.from_lists(data["partition"], net)
    return net, part


def load_adjacency_csv(path, clusters=None) -> tuple:
    """Load an N x N adjacency CSV; clusters (lists of indices) optional."""
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    net = WeightedNetwork.from_adjacency(np.array(rows))
    part = Partition.from_lists(clusters, net) if clusters else None
    return net, part


def save_network_json(path, net: WeightedNetwork, part: Partition | None = None) -> None:
    data = {"nodes": net.n_nodes, "edges": [[i, j, w] for i, j, w in net.edges]}
    if part is not None:
        data["partition"] = [list(c) for c in part.clusters]
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")
