"""Kuramoto phase dynamics and its slow/fast difference coordinates.

The oscillator network evolves as

    dtheta_i/dt = omega_i + sum_j a_ij sin(theta_j - theta_i)

integrated with fixed-step RK4.  With a tree decomposition the same flow
splits into intra-cluster differences x = Btilde_intra.T @ theta (slow)
and inter-cluster differences z = Btilde_inter.T @ theta (fast), with the
perturbation parameter eps the reciprocal of the smallest inter-cluster
natural-frequency gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    GraphValidationError,
    IntraFrequencyMismatch,
    StepTooLarge,
    ZeroInterFrequencyGap,
)
from .network import Partition, WeightedNetwork
from .tree import TreeDecomposition

#: dt * (max |omega| + 2 * max weighted degree) must stay below this.
STABILITY_BUDGET = 0.5


@dataclass(frozen=True)
class OscillatorConfig:
    """Everything needed to reproduce one integration run."""

    omega: np.ndarray
    theta0: np.ndarray
    dt: float = 1e-3
    t_end: float = 10.0
    record_stride: int = 1  # store every k-th step

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "theta0", np.asarray(self.theta0, dtype=float))
        if self.omega.shape != self.theta0.shape:
            raise GraphValidationError("omega and theta0 must have equal length")
        if not (np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.theta0))):
            raise GraphValidationError("omega and theta0 must be finite")
        if self.dt <= 0 or self.t_end <= 0:
            raise GraphValidationError("dt and t_end must be positive")
        if self.record_stride < 1:
            raise GraphValidationError("record_stride must be >= 1")


@dataclass(frozen=True)
class SimulationRecord:
    """Sampled trajectory; phases are stored unwrapped (cumulative reals)."""

    times: np.ndarray = field(repr=False)
    thetas: np.ndarray = field(repr=False)  # len(times) x N
    x_traj: np.ndarray | None = field(default=None, repr=False)
    z_traj: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.thetas.shape[1]

    def window(self, t_from: float, t_to: float = np.inf) -> "SimulationRecord":
        mask = (self.times >= t_from) & (self.times <= t_to)
        return SimulationRecord(
            times=self.times[mask],
            thetas=self.thetas[mask],
            x_traj=None if self.x_traj is None else self.x_traj[mask],
            z_traj=None if self.z_traj is None else self.z_traj[mask],
        )


def kuramoto_rhs(theta: np.ndarray, omega: np.ndarray, net: WeightedNetwork) -> np.ndarray:
    """Phase velocities omega_i + sum_j a_ij sin(theta_j - theta_i).

    Uses sin(theta_j - theta_i) = cos(theta_i) sin(theta_j) -
    sin(theta_i) cos(theta_j) so the coupling reduces to two mat-vecs.
    """
    s = np.sin(theta)
    c = np.cos(theta)
    a = net.adjacency
    return omega + c * (a @ s) - s * (a @ c)


def kuramoto_rhs_incidence(
    theta: np.ndarray, omega: np.ndarray, b: np.ndarray, w: np.ndarray
) -> np.ndarray:
    """Incidence form omega - B W sin(B.T theta); oracle for the node form."""
    return omega - b @ (w * np.sin(b.T @ theta))


def max_step(omega: np.ndarray, net: WeightedNetwork) -> float:
    """Largest dt passing the integration stability heuristic."""
    rate = np.abs(omega).max() + 2.0 * net.adjacency.sum(axis=1).max()
    return STABILITY_BUDGET / rate


def simulate(
    config: OscillatorConfig,
    net: WeightedNetwork,
    decomp: TreeDecomposition | None = None,
) -> SimulationRecord:
    """Fixed-step RK4 integration of the phase dynamics.

    Deterministic for a given config.  When a decomposition is supplied the
    x and z difference trajectories are stored alongside the phases.
    """
    omega = config.omega
    if omega.shape[0] != net.n_nodes:
        raise GraphValidationError("config size does not match the network")
    rate = np.abs(omega).max() + 2.0 * net.adjacency.sum(axis=1).max()
    if config.dt * rate > STABILITY_BUDGET:
        raise StepTooLarge(
            f"dt = {config.dt} too large: dt * (max|omega| + 2 max degree) = "
            f"{config.dt * rate:.3g} > {STABILITY_BUDGET}"
        )

    n_steps = int(round(config.t_end / config.dt))
    stride = config.record_stride
    n_rec = n_steps // stride + 1
    a = net.adjacency
    theta = config.theta0.astype(float).copy()
    times = np.empty(n_rec)
    thetas = np.empty((n_rec, net.n_nodes))
    times[0] = 0.0
    thetas[0] = theta
    dt = config.dt

    def rhs(th):
        s = np.sin(th)
        c = np.cos(th)
        return omega + c * (a @ s) - s * (a @ c)

    rec = 1
    for k in range(1, n_steps + 1):
        k1 = rhs(theta)
        k2 = rhs(theta + 0.5 * dt * k1)
        k3 = rhs(theta + 0.5 * dt * k2)
        k4 = rhs(theta + dt * k3)
        theta = theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if k % stride == 0:
            times[rec] = k * dt
            thetas[rec] = theta
            rec += 1
    times = times[:rec]
    thetas = thetas[:rec]

    x_traj = z_traj = None
    if decomp is not None:
        x_traj = thetas @ decomp.bt_intra
        z_traj = thetas @ decomp.bt_inter
    return SimulationRecord(times=times, thetas=thetas, x_traj=x_traj, z_traj=z_traj)


def epsilon(decomp: TreeDecomposition, omega: np.ndarray) -> tuple:
    """Perturbation parameter eps and the scaled gap vector eta.

    eps is the reciprocal of the smallest |omega_i - omega_j| over
    inter-cluster edges; eta = eps * Btilde_inter.T @ omega has every entry
    of magnitude >= 1 by construction.  Requires equal frequencies inside
    each cluster.
    """
    omega = np.asarray(omega, dtype=float)
    net, part = decomp.net, decomp.part
    tol = 1e-9 * (1.0 + np.abs(omega).max())
    for p, cluster in enumerate(part.clusters):
        vals = omega[list(cluster)]
        if vals.max() - vals.min() > tol:
            raise IntraFrequencyMismatch(
                f"cluster {p} frequencies differ by {vals.max() - vals.min():.3g}"
            )
    labels = part.labels(net.n_nodes)
    gaps = [
        abs(omega[i] - omega[j]) for i, j, _ in net.edges if labels[i] != labels[j]
    ]
    min_gap = min(gaps)
    if min_gap <= tol:
        raise ZeroInterFrequencyGap("an inter-cluster edge has zero frequency gap")
    eps = 1.0 / min_gap
    eta = eps * (decomp.bt_inter.T @ omega)
    assert np.all(np.abs(eta) >= 1.0 - 1e-12), "eta entries must have magnitude >= 1"
    return eps, eta


def perturbation_fields(decomp: TreeDecomposition) -> tuple:
    """Evaluators f(x, z) and g(x, z) of the difference-coordinate flow.

    f drives the intra coordinate (dx/dt = f) and g the scaled inter
    coordinate (eps dz/dt = eta + eps g).
    """
    inc = decomp.incidence
    mi = decomp.bt_intra.T @ inc.b_intra @ inc.w_intra  # n x |E_intra|
    me = decomp.bt_intra.T @ inc.b_inter @ inc.w_inter  # n x |E_inter|
    gi = decomp.bt_inter.T @ inc.b_intra @ inc.w_intra
    ge = decomp.bt_inter.T @ inc.b_inter @ inc.w_inter
    r1, r3, r4 = decomp.r1, decomp.r3, decomp.r4

    def f(x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return -mi @ np.sin(r1 @ x) - me @ np.sin(r3 @ x + r4 @ z)

    def g(x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return -gi @ np.sin(r1 @ x) - ge @ np.sin(r3 @ x + r4 @ z)

    return f, g


def wrap_angle(x: np.ndarray) -> np.ndarray:
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x), 2.0 * np.pi)


def manifold_distance(theta: np.ndarray, part: Partition) -> float:
    """Chordal distance to the cluster-synchronization set.

    Per cluster the circular mean direction is removed and the wrapped
    residuals are stacked; the distance is the Euclidean norm of the stack.
    Zero exactly when all intra-cluster phases coincide mod 2 pi, and
    invariant under common phase shifts.
    """
    theta = np.asarray(theta, dtype=float)
    total = 0.0
    for cluster in part.clusters:
        ph = theta[list(cluster)]
        vec = np.exp(1j * ph).sum()
        center = np.angle(vec) if np.abs(vec) > 1e-12 else ph[0]
        res = wrap_angle(ph - center)
        total += float(res @ res)
    return float(np.sqrt(total))


def max_intra_difference(theta: np.ndarray, part: Partition) -> float:
    """Largest wrapped pairwise phase difference inside any cluster."""
    theta = np.asarray(theta, dtype=float)
    worst = 0.0
    for cluster in part.clusters:
        ph = theta[list(cluster)]
        diffs = wrap_angle(ph[:, None] - ph[None, :])
        worst = max(worst, float(np.abs(diffs).max()))
    return worst


def intra_difference_series(record: SimulationRecord, part: Partition) -> np.ndarray:
    """Per-sample max wrapped intra-cluster difference, clusters stacked as columns."""
    out = np.empty((len(record.times), part.r))
    for p, cluster in enumerate(part.clusters):
        ph = record.thetas[:, list(cluster)]
        diffs = np.abs(wrap_angle(ph[:, :, None] - ph[:, None, :]))
        out[:, p] = diffs.reshape(len(record.times), -1).max(axis=1)
    return out


def near_manifold_initial(
    part: Partition,
    n_nodes: int,
    rng: np.random.Generator,
    amplitude: float = 0.1,
    max_dist: float | None = None,
) -> np.ndarray:
    """Seeded initial phases near the synchronization set.

    Each cluster gets a common phase uniform on [0, 2 pi) plus i.i.d.
    perturbations uniform on [-amplitude, amplitude] per node; when
    max_dist is given the perturbation is rescaled so the manifold
    distance does not exceed it.
    """
    theta = np.empty(n_nodes)
    offsets = np.empty(n_nodes)
    for cluster in part.clusters:
        base = rng.uniform(0.0, 2.0 * np.pi)
        for i in cluster:
            theta[i] = base
            offsets[i] = rng.uniform(-amplitude, amplitude)
    candidate = theta + offsets
    if max_dist is not None:
        d = manifold_distance(candidate, part)
        if d > max_dist:
            candidate = theta + offsets * (0.99 * max_dist / d)
    return candidate


def save_trajectory_csv(path, record: SimulationRecord) -> None:
    """Write ``t, theta_0, ..., theta_{N-1}`` rows."""
    header = "t," + ",".join(f"theta_{i}" for i in range(record.n_nodes))
    data = np.column_stack([record.times, record.thetas])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")
