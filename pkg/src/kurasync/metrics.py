"""Synchronization metrics: order parameters, Pearson correlation, distances.

The order parameter of a node set is the magnitude of the mean unit-circle
embedding of its phases: 1 at full coherence, 0 for equally spread phases.
Correlation matrices are computed on post-burn-in windows of per-node
signals (sin of phase for neural activity, BOLD output for functional
connectivity).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import SimulationRecord, manifold_distance  # noqa: F401  (re-export)
from .errors import EmptyInput
from .network import Partition


@dataclass(frozen=True)
class OrderParameterSeries:
    times: np.ndarray = field(repr=False)
    r_clusters: np.ndarray = field(repr=False)  # len(times) x r
    r_global: np.ndarray = field(repr=False)

    def time_average(self, t_from: float = 0.0) -> tuple:
        """(mean r_p vector, mean r_global) over times >= t_from."""
        mask = self.times >= t_from
        return self.r_clusters[mask].mean(axis=0), float(self.r_global[mask].mean())


@dataclass(frozen=True)
class CorrelationMatrix:
    matrix: np.ndarray = field(repr=False)  # N x N, NaN rows for constant signals
    burn_in: float
    constant_nodes: tuple = ()


def order_parameters(record: SimulationRecord, part: Partition) -> OrderParameterSeries:
    """Per-cluster and global order parameters at every sample."""
    if len(record.times) == 0:
        raise EmptyInput("record holds no samples")
    phases = np.exp(1j * record.thetas)
    r_clusters = np.empty((len(record.times), part.r))
    for p, cluster in enumerate(part.clusters):
        r_clusters[:, p] = np.abs(phases[:, list(cluster)].mean(axis=1))
    r_global = np.abs(phases.mean(axis=1))
    return OrderParameterSeries(times=record.times, r_clusters=r_clusters, r_global=r_global)


def pearson_matrix(times: np.ndarray, signals: np.ndarray, burn_in: float = 40.0) -> CorrelationMatrix:
    """Pearson correlations among node signals after discarding burn-in.

    Constant signals cannot be normalized; their rows/columns are flagged
    NaN and the node indices reported, never silently zeroed.
    """
    times = np.asarray(times, dtype=float)
    signals = np.asarray(signals, dtype=float)
    keep = times >= burn_in
    window = signals[keep]
    if window.shape[0] < 2:
        raise EmptyInput("fewer than 2 samples remain after burn-in")
    stds = window.std(axis=0)
    constant = np.nonzero(stds == 0.0)[0]
    if window.shape[1] - len(constant) == 0:
        raise EmptyInput("all signals are constant after burn-in")
    corr = np.full((signals.shape[1], signals.shape[1]), np.nan)
    live = np.nonzero(stds > 0.0)[0]
    sub = np.corrcoef(window[:, live], rowvar=False)
    sub = np.clip((sub + sub.T) / 2.0, -1.0, 1.0)
    corr[np.ix_(live, live)] = sub
    return CorrelationMatrix(
        matrix=corr, burn_in=burn_in, constant_nodes=tuple(int(i) for i in constant)
    )


def block_contrast(matrix: np.ndarray, part: Partition) -> float:
    """Mean intra-block correlation minus mean inter-block correlation.

    Diagonal entries are excluded; NaN entries are ignored.
    """
    n = matrix.shape[0]
    labels = part.labels(n)
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(n, dtype=bool)
    intra = matrix[same & off]
    inter = matrix[~same]
    return float(np.nanmean(intra) - np.nanmean(inter))


def save_order_parameters_csv(path, series: OrderParameterSeries) -> None:
    """Write ``t, r_global, r_1, ..., r_r`` rows."""
    r = series.r_clusters.shape[1]
    header = "t,r_global," + ",".join(f"r_{p + 1}" for p in range(r))
    data = np.column_stack([series.times, series.r_global, series.r_clusters])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def save_correlation_csv(path, corr: CorrelationMatrix) -> None:
    """Dense N x N comma-separated matrix, row major, no header."""
    np.savetxt(path, corr.matrix, delimiter=",", fmt="%.17g")
