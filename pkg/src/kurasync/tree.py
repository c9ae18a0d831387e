"""Spanning-tree coordinates for clustered networks.

The spanning tree is the union of one BFS tree per cluster subgraph plus
r - 1 greedily chosen inter-cluster edges.  Its incidence matrix splits
as Btilde = [Btilde_intra Btilde_inter]; the reduction matrix R with
B.T = R @ Btilde.T is computed blockwise from the partitioned
Moore-Penrose inverse, giving the closed forms

    R1 = B_intra.T @ pinv(Btilde_intra.T @ P_inter),   R2 = 0,
    R3 = B_inter.T @ pinv(Btilde_intra.T @ P_inter),
    R4 = B_inter.T @ pinv(Btilde_inter.T @ P_intra),

where P_intra / P_inter are the orthogonal projectors onto the kernels of
Btilde_intra.T / Btilde_inter.T.  Tree differences x = Btilde_intra.T @ theta
collect intra-cluster phase differences and z = Btilde_inter.T @ theta the
inter-cluster ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ImageOverlap, QuotientDisconnected, ReconstructionFailure
from .network import OrientedIncidence, Partition, WeightedNetwork, build_incidence

#: Relative singular-value cutoff for all pseudoinverses.
PINV_RCOND = 1e-12

#: Absolute tolerance for the exact reconstruction identity B.T = R @ Btilde.T.
RECONSTRUCTION_TOL = 1e-9


def partitioned_pinv(m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Pseudoinverse of [M1 M2] stacked from projected blocks.

    Valid when the column spaces of M1 and M2 intersect only at zero;
    checked via rank([M1 M2]) == rank(M1) + rank(M2).
    """
    m1 = np.atleast_2d(np.asarray(m1, dtype=float))
    m2 = np.atleast_2d(np.asarray(m2, dtype=float))
    r1 = np.linalg.matrix_rank(m1)
    r2 = np.linalg.matrix_rank(m2)
    r12 = np.linalg.matrix_rank(np.hstack([m1, m2]))
    if r12 != r1 + r2:
        raise ImageOverlap(
            f"column spaces overlap: rank [M1 M2] = {r12} != {r1} + {r2}"
        )
    n = m1.shape[0]
    p1 = np.eye(n) - m1 @ np.linalg.pinv(m1, rcond=PINV_RCOND)
    p2 = np.eye(n) - m2 @ np.linalg.pinv(m2, rcond=PINV_RCOND)
    top = np.linalg.pinv(p2 @ m1, rcond=PINV_RCOND)
    bottom = np.linalg.pinv(p1 @ m2, rcond=PINV_RCOND)
    return np.vstack([top, bottom])


@dataclass(frozen=True)
class TreeDecomposition:
    """Spanning-tree incidence blocks, reduction matrices and projectors."""

    net: WeightedNetwork = field(repr=False)
    part: Partition = field(repr=False)
    incidence: OrientedIncidence = field(repr=False)
    tree_edges: tuple  # ((i, j), ...) intra first, then inter
    tree_matrix: np.ndarray = field(repr=False)  # N x (N-1)
    n_intra: int  # columns of Btilde_intra (= n)
    r1: np.ndarray = field(repr=False)
    r3: np.ndarray = field(repr=False)
    r4: np.ndarray = field(repr=False)
    p_intra: np.ndarray = field(repr=False)
    p_inter: np.ndarray = field(repr=False)
    r4_is_selector: bool

    @property
    def n(self) -> int:
        """Dimension of the intra-difference coordinate x."""
        return self.n_intra

    @property
    def m(self) -> int:
        """Dimension of the inter-difference coordinate z."""
        return self.tree_matrix.shape[1] - self.n_intra

    @property
    def bt_intra(self) -> np.ndarray:
        return self.tree_matrix[:, : self.n_intra]

    @property
    def bt_inter(self) -> np.ndarray:
        return self.tree_matrix[:, self.n_intra :]

    @property
    def reduction(self) -> np.ndarray:
        """Full R = [[R1, 0], [R3, R4]]."""
        n_e_intra = self.r1.shape[0]
        top = np.hstack([self.r1, np.zeros((n_e_intra, self.m))])
        bottom = np.hstack([self.r3, self.r4])
        return np.vstack([top, bottom])

    def x_of(self, theta: np.ndarray) -> np.ndarray:
        return self.bt_intra.T @ np.asarray(theta, dtype=float)

    def z_of(self, theta: np.ndarray) -> np.ndarray:
        return self.bt_inter.T @ np.asarray(theta, dtype=float)


def _cluster_bfs_tree(net: WeightedNetwork, cluster) -> list:
    """BFS tree edges of a cluster subgraph, rooted at the lowest index."""
    nodes = sorted(cluster)
    inside = set(nodes)
    root = nodes[0]
    seen = {root}
    queue = [root]
    edges = []
    while queue:
        u = queue.pop(0)
        for v in np.nonzero(net.adjacency[u])[0]:
            v = int(v)
            if v in inside and v not in seen:
                seen.add(v)
                queue.append(v)
                edges.append((min(u, v), max(u, v)))
    return edges


def build_spanning_tree(net: WeightedNetwork, part: Partition) -> TreeDecomposition:
    """Deterministic spanning tree plus the R1/R3/R4 reduction matrices.

    Intra tree edges come from per-cluster BFS (lowest-index root, neighbors
    in index order); the r - 1 inter edges are the lowest-indexed ones that
    connect the cluster quotient graph.  Column order follows the full edge
    enumeration of :func:`build_incidence`.
    """
    inc = build_incidence(net, part)
    labels = part.labels(net.n_nodes)

    intra_tree = set()
    for cluster in part.clusters:
        intra_tree.update(_cluster_bfs_tree(net, cluster))

    # Greedy union-find over clusters, scanning inter edges in enumeration order.
    parent = list(range(part.r))

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    inter_tree = set()
    for i, j in inc.edge_order[inc.n_intra :]:
        p, q = find(labels[i]), find(labels[j])
        if p != q:
            parent[p] = q
            inter_tree.add((i, j))
    if len(inter_tree) != part.r - 1:
        raise QuotientDisconnected("inter-cluster edges do not connect all clusters")

    intra_cols = [e for e in range(inc.n_intra) if inc.edge_order[e] in intra_tree]
    inter_cols = [
        e for e in range(inc.n_intra, len(inc.edge_order)) if inc.edge_order[e] in inter_tree
    ]
    cols = intra_cols + inter_cols
    bt = inc.matrix[:, cols]
    n = len(intra_cols)

    bt_intra, bt_inter = bt[:, :n], bt[:, n:]
    p_intra = np.eye(net.n_nodes) - bt_intra @ np.linalg.pinv(bt_intra, rcond=PINV_RCOND)
    p_inter = np.eye(net.n_nodes) - bt_inter @ np.linalg.pinv(bt_inter, rcond=PINV_RCOND)

    core = np.linalg.pinv(bt_intra.T @ p_inter, rcond=PINV_RCOND)
    core_inter = np.linalg.pinv(bt_inter.T @ p_intra, rcond=PINV_RCOND)
    r1 = inc.b_intra.T @ core
    r3 = inc.b_inter.T @ core
    r4 = inc.b_inter.T @ core_inter
    r2 = inc.b_intra.T @ core_inter
    if r2.size and np.abs(r2).max() > RECONSTRUCTION_TOL:
        raise ReconstructionFailure(
            f"R2 block is not zero (max |entry| = {np.abs(r2).max():.3g})"
        )

    n_e_intra = inc.n_intra
    top = np.hstack([r1, np.zeros((n_e_intra, bt_inter.shape[1]))])
    reduction = np.vstack([top, np.hstack([r3, r4])])
    err = np.abs(inc.matrix.T - reduction @ bt.T).max()
    if err > RECONSTRUCTION_TOL:
        raise ReconstructionFailure(
            f"B.T = R @ Btilde.T fails (max residual {err:.3g}); "
            "tree or enumeration is inconsistent"
        )

    selector = _is_selector(r4)
    if not selector:
        warnings.warn(
            "R4 does not have a single +/-1 per row; conservative norm bounds "
            "will be used in the certificates",
            stacklevel=2,
        )

    return TreeDecomposition(
        net=net,
        part=part,
        incidence=inc,
        tree_edges=tuple(inc.edge_order[c] for c in cols),
        tree_matrix=bt,
        n_intra=n,
        r1=r1,
        r3=r3,
        r4=r4,
        p_intra=p_intra,
        p_inter=p_inter,
        r4_is_selector=selector,
    )


def _is_selector(r4: np.ndarray, tol: float = RECONSTRUCTION_TOL) -> bool:
    """True when every row of R4 is a signed standard basis vector."""
    for row in np.atleast_2d(r4):
        mags = np.sort(np.abs(row))[::-1]
        if abs(mags[0] - 1.0) > tol:
            return False
        if len(mags) > 1 and mags[1] > tol:
            return False
    return True


def reduction_matrices(decomp: TreeDecomposition) -> tuple:
    """(R1, R3, R4) of a built decomposition."""
    return decomp.r1, decomp.r3, decomp.r4


def dump_decomposition(decomp: TreeDecomposition, out_dir) -> None:
    """Write B, W, Btilde and the R blocks as CSV files into out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    blocks = {
        "B.csv": decomp.incidence.matrix,
        "W.csv": decomp.incidence.weight_matrix,
        "Btilde.csv": decomp.tree_matrix,
        "R1.csv": decomp.r1,
        "R3.csv": decomp.r3,
        "R4.csv": decomp.r4,
        "P_intra.csv": decomp.p_intra,
        "P_inter.csv": decomp.p_inter,
    }
    for name, mat in blocks.items():
        np.savetxt(os.path.join(out_dir, name), np.atleast_2d(mat), delimiter=",", fmt="%.17g")
