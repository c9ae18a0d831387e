"""Connectome ingestion and the synthetic fallback network.

Empirical inputs are per-subject subregion adjacency matrices plus a map
from subregions to cortical regions.  Preprocessing binarizes each
subject matrix, sums connections into region blocks (divided by the size
of the target region), averages subjects, symmetrizes, and rescales so
the largest weight is 10.

The synthetic fallback generates a 66-node modular network with three
22-node clusters so the full pipeline runs reproducibly with no data
files.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DisconnectedResult, EmptyInput
from .network import Partition, WeightedNetwork

#: Largest weight after preprocessing normalization.
WEIGHT_CAP = 10.0

BRAIN_REGIONS = 66
BRAIN_CLUSTERS = 3
BRAIN_CLUSTER_SIZE = 22

#: Synthetic generator knobs.  Intra-cluster edges are denser and heavier
#: than inter-cluster ones; the 0.06 scale keeps the intra coupling in the
#: moderately-locking regime at the 0.5 Hz frequency spread used by the
#: cluster scenarios (stiffer weights pin every cluster so tightly that the
#: heterogeneous runs lose their contrast between local and global order).
INTRA_EDGE_PROB = 0.6
INTRA_WEIGHT_RANGE = (5.0, 10.0)
INTRA_WEIGHT_SCALE = 0.06
INTER_EDGE_PROB = 0.1
INTER_WEIGHT_RANGE = (0.5, 2.0)


@dataclass(frozen=True)
class PreprocessReport:
    dropped_nodes: tuple = ()
    n_subjects: int = 0
    scale: float = 1.0


def preprocess_connectome(raw_matrices, region_map) -> tuple:
    """Aggregate subject subregion matrices into one region-level network.

    region_map[i] is the region index of subregion i.  Returns
    (network, report); if the aggregated graph is disconnected the largest
    component is kept and a warning is issued, with the dropped nodes
    listed in the report.
    """
    mats = [np.asarray(m, dtype=float) for m in raw_matrices]
    if not mats:
        raise EmptyInput("need at least one subject matrix")
    region_map = np.asarray(region_map, dtype=int)
    n_sub = region_map.shape[0]
    for m in mats:
        if m.shape != (n_sub, n_sub):
            raise EmptyInput(
                f"subject matrix shape {m.shape} does not match region map ({n_sub})"
            )
    n_regions = int(region_map.max()) + 1
    sizes = np.bincount(region_map, minlength=n_regions)
    if np.any(sizes == 0):
        raise EmptyInput("region map leaves some region empty")

    member = np.zeros((n_regions, n_sub))
    member[region_map, np.arange(n_sub)] = 1.0
    acc = np.zeros((n_regions, n_regions))
    for m in mats:
        binary = (m > 0).astype(float)
        block = member @ binary @ member.T  # directed block sums
        acc += block / sizes[None, :]  # divide by target-region size
    acc /= len(mats)
    acc = (acc + acc.T) / 2.0
    np.fill_diagonal(acc, 0.0)
    top = acc.max()
    if top <= 0:
        raise DisconnectedResult("aggregated network has no edges")
    scale = WEIGHT_CAP / top
    acc *= scale

    kept = _largest_component(acc)
    dropped = tuple(i for i in range(n_regions) if i not in kept)
    if dropped:
        warnings.warn(
            f"aggregated network is disconnected; keeping {len(kept)} of "
            f"{n_regions} regions",
            stacklevel=2,
        )
        acc = acc[np.ix_(kept, kept)]
    net = WeightedNetwork.from_adjacency(acc)
    return net, PreprocessReport(dropped_nodes=dropped, n_subjects=len(mats), scale=scale)


def _largest_component(adj: np.ndarray) -> list:
    n = adj.shape[0]
    unseen = set(range(n))
    best = []
    while unseen:
        root = min(unseen)
        comp = {root}
        stack = [root]
        while stack:
            u = stack.pop()
            for v in np.nonzero(adj[u])[0]:
                if int(v) in unseen and int(v) not in comp:
                    comp.add(int(v))
                    stack.append(int(v))
        unseen -= comp
        if len(comp) > len(best):
            best = sorted(comp)
    return best


def brain_partition(n_nodes: int = BRAIN_REGIONS) -> list:
    """Contiguous index blocks {0-21, 22-43, 44-65} (scaled to n_nodes)."""
    size = n_nodes // BRAIN_CLUSTERS
    return [list(range(p * size, (p + 1) * size if p < BRAIN_CLUSTERS - 1 else n_nodes))
            for p in range(BRAIN_CLUSTERS)]


def synthetic_connectome(seed: int) -> tuple:
    """Seeded 66-node modular network with three 22-node clusters.

    Returns (network, partition).  Connectivity is virtually guaranteed by
    the edge densities; in the rare disconnected draw, deterministic bridge
    edges are added between lowest-index nodes.
    """
    rng = np.random.default_rng(seed)
    n = BRAIN_REGIONS
    clusters = brain_partition(n)
    labels = np.empty(n, dtype=int)
    for p, c in enumerate(clusters):
        labels[c] = p
    a = np.zeros((n, n))
    lo_i, hi_i = INTRA_WEIGHT_RANGE
    lo_e, hi_e = INTER_WEIGHT_RANGE
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] == labels[j]:
                if rng.random() < INTRA_EDGE_PROB:
                    a[i, j] = a[j, i] = rng.uniform(lo_i, hi_i) * INTRA_WEIGHT_SCALE
            else:
                if rng.random() < INTER_EDGE_PROB:
                    a[i, j] = a[j, i] = rng.uniform(lo_e, hi_e)

    for c in clusters:  # deterministic connectivity fixups (rarely needed)
        _connect_component(a, c, weight=lo_i * INTRA_WEIGHT_SCALE)
    for p in range(len(clusters) - 1):
        i, j = clusters[p][0], clusters[p + 1][0]
        if not np.any(a[np.ix_(clusters[p], clusters[p + 1])] > 0):
            a[i, j] = a[j, i] = lo_e
    net = WeightedNetwork.from_adjacency(a)
    part = Partition.from_lists(clusters, net)
    return net, part


def _connect_component(a: np.ndarray, nodes, weight: float) -> None:
    """Bridge disconnected pieces of an induced subgraph in place."""
    nodes = sorted(nodes)
    inside = set(nodes)
    seen = set()
    comps = []
    for start in nodes:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in np.nonzero(a[u])[0]:
                if int(v) in inside and int(v) not in comp:
                    comp.add(int(v))
                    stack.append(int(v))
        seen |= comp
        comps.append(sorted(comp))
    for prev, nxt in zip(comps, comps[1:]):
        i, j = prev[0], nxt[0]
        a[i, j] = a[j, i] = weight
