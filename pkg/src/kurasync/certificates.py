"""Averaging-based stability certificates for cluster synchronization.

Linearizing the intra-cluster flow around the synchronized state, with
the inter-cluster differences frozen at their fast solution zeta(tau, eps),
gives the time-varying Jacobian

    J(tau, eps) = J_av - M_e @ diag(cos(R4 @ zeta(tau, eps))) @ R3,
    J_av        = -Btilde_intra.T @ B_intra @ W_intra @ R1,

with M_e = Btilde_intra.T @ B_inter @ W_inter.  The certificate bounds the
state-transition matrix over a window T by

    kappa(gamma, eps, T) = exp(-lambda2 eps T) + gamma eps T (1/T + eps)
                           + 2 (exp(rho eps T) - 1 - rho eps T)

and certifies exponential stability when kappa < 1 for some T.  gamma is
the analytic averaged-deviation constant, rho an upper bound on
sup ||J(tau, eps)||, and lambda2 the smallest cluster algebraic
connectivity.  For two clusters a sharper test applies: if the constant
parts J_intra and J_inter commute and the frequency gap dominates the
coupling sum, the transition matrix over one period of the fast flow is
exactly the averaged exponential, which is Schur.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import solve_continuous_lyapunov

from .dynamics import SimulationRecord, epsilon, perturbation_fields
from .errors import (
    AssumptionViolated,
    FrequencyDominanceViolated,
    IntraFrequencyMismatch,
    NoFeasibleEpsilon,
    ZeroInterFrequencyGap,
)
from .network import Partition, WeightedNetwork, algebraic_connectivity, check_partition
from .tree import TreeDecomposition, build_spanning_tree
from .util import worker_count

CERTIFIED = "CERTIFIED"
NOT_CERTIFIED = "NOT_CERTIFIED"
CERTIFIED_COMMUTING = "CERTIFIED_COMMUTING"
NOT_APPLICABLE = "NOT_APPLICABLE"

#: Window search domain: eps * T ranges over [S_MIN, S_MAX].
S_MIN, S_MAX = 1e-3, 1e3

#: Step of the frozen fast-flow integrator (in the fast time variable).
DT_TAU = 1e-3


# ---------------------------------------------------------------------------
# Jacobians


def average_jacobian(decomp: TreeDecomposition) -> np.ndarray:
    """J_av = -Btilde_intra.T @ B_intra @ W_intra @ R1 (block diagonal)."""
    inc = decomp.incidence
    return -decomp.bt_intra.T @ inc.b_intra @ inc.w_intra @ decomp.r1


def inter_jacobian_factor(decomp: TreeDecomposition) -> np.ndarray:
    """M_e = Btilde_intra.T @ B_inter @ W_inter, the inter-coupling factor."""
    inc = decomp.incidence
    return decomp.bt_intra.T @ inc.b_inter @ inc.w_inter


def two_cluster_jacobians(decomp: TreeDecomposition) -> tuple:
    """(J_intra, J_inter) with J(tau) = J_intra + J_inter cos(zeta) for r = 2."""
    j_intra = average_jacobian(decomp)
    j_inter = -inter_jacobian_factor(decomp) @ decomp.r3
    return j_intra, j_inter


def jacobian_at(decomp: TreeDecomposition, zeta: np.ndarray) -> np.ndarray:
    """J evaluated at a frozen inter-cluster state zeta."""
    me = inter_jacobian_factor(decomp)
    gate = np.cos(decomp.r4 @ np.atleast_1d(zeta))
    return average_jacobian(decomp) - me @ (gate[:, None] * decomp.r3)


# ---------------------------------------------------------------------------
# Frozen fast flow


@dataclass(frozen=True)
class FrozenFlow:
    """Grid solution of the fast subsystem dz/dtau = eta + eps g(0, z)."""

    taus: np.ndarray = field(repr=False)
    zetas: np.ndarray = field(repr=False)  # len(taus) x m
    eps: float
    eta: np.ndarray = field(repr=False)


def frozen_fast_flow(
    decomp: TreeDecomposition,
    omega: np.ndarray,
    tau_end: float,
    dt_tau: float = DT_TAU,
    z0: np.ndarray | None = None,
    eps_override: float | None = None,
) -> FrozenFlow:
    """RK4 solution of the inter-cluster flow with the intra state pinned at 0."""
    eps, eta = epsilon(decomp, omega)
    if eps_override is not None:
        eps = eps_override
    _, g = perturbation_fields(decomp)
    m = decomp.m
    z = np.zeros(m) if z0 is None else np.asarray(z0, dtype=float).copy()

    def rhs(zz):
        return eta + eps * g(np.zeros(decomp.n), zz)

    n_steps = int(round(tau_end / dt_tau))
    taus = np.linspace(0.0, n_steps * dt_tau, n_steps + 1)
    zetas = np.empty((n_steps + 1, m))
    zetas[0] = z
    for k in range(n_steps):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * dt_tau * k1)
        k3 = rhs(z + 0.5 * dt_tau * k2)
        k4 = rhs(z + dt_tau * k3)
        z = z + (dt_tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        zetas[k + 1] = z
    return FrozenFlow(taus=taus, zetas=zetas, eps=eps, eta=eta)


def averaged_deviation_norm(decomp: TreeDecomposition, flow: FrozenFlow, i0: int, i1: int) -> float:
    """Spectral norm of (1/T) int_tau^{tau+T} [J(s, eps) - J_av] ds on grid window [i0, i1]."""
    if i1 <= i0:
        raise ValueError("window must contain at least one step")
    gates = np.cos(flow.zetas[i0 : i1 + 1] @ decomp.r4.T)  # window x |E_inter|
    mean_gate = simpson(gates, x=flow.taus[i0 : i1 + 1], axis=0) / (
        flow.taus[i1] - flow.taus[i0]
    )
    me = inter_jacobian_factor(decomp)
    dev = -me @ (mean_gate[:, None] * decomp.r3)
    return float(np.linalg.norm(dev, 2))


def measure_frozen_period(
    decomp: TreeDecomposition, omega: np.ndarray, n_periods: int = 8
) -> float:
    """Measured period of the scalar frozen flow (two-cluster case).

    Tracks the fast coordinate through successive 2 pi advances and averages
    the crossing intervals, interpolating linearly inside grid steps.
    """
    if decomp.m != 1:
        raise ValueError("period measurement requires a single inter coordinate")
    eps, eta = epsilon(decomp, omega)
    a_hat = abs(float(coupling_sum(decomp)))
    guess = 2.0 * np.pi / max(abs(eta[0]) - eps * a_hat, 1e-3)
    flow = frozen_fast_flow(decomp, omega, tau_end=guess * (n_periods + 2))
    drift = (flow.zetas[:, 0] - flow.zetas[0, 0]) * np.sign(eta[0])
    crossings = []
    for k in range(1, n_periods + 1):
        idx = np.searchsorted(drift, 2.0 * np.pi * k)
        if idx >= len(drift):
            break
        frac = (2.0 * np.pi * k - drift[idx - 1]) / (drift[idx] - drift[idx - 1])
        crossings.append(flow.taus[idx - 1] + frac * DT_TAU)
    if len(crossings) < 2:
        raise ValueError("flow did not complete enough periods; increase n_periods")
    return float(np.diff(crossings).mean())


# ---------------------------------------------------------------------------
# Scalar bounds


def gamma_bound(decomp: TreeDecomposition) -> float:
    """Averaged-deviation constant ||M_e|| ||R3|| max{2, ||Psi||_inf}.

    Psi = Btilde_inter.T @ B_inter @ W_inter @ R4.  When R4 is not a signed
    selector the bound is padded by ||R4||_inf, since the derivation moves
    R4 through elementwise sin/cos.
    """
    inc = decomp.incidence
    me = inter_jacobian_factor(decomp)
    psi = decomp.bt_inter.T @ inc.b_inter @ inc.w_inter @ decomp.r4
    psi_inf = float(np.linalg.norm(np.atleast_2d(psi), np.inf)) if psi.size else 0.0
    factor = max(2.0, psi_inf)
    if not decomp.r4_is_selector:
        factor *= float(np.linalg.norm(np.atleast_2d(decomp.r4), np.inf))
    if me.size == 0:
        return 0.0
    return float(np.linalg.norm(me, 2) * np.linalg.norm(decomp.r3, 2) * factor)


def rho_bound(decomp: TreeDecomposition) -> float:
    """sup over frozen inter states of ||J(tau, eps)||.

    When R4 is a signed selector, the cosine gate of each inter coordinate
    sweeps [-1, 1] independently and the norm is convex in the gates, so
    the supremum is attained at a gate corner and is computed exactly.
    Otherwise (or for many inter coordinates) the conservative bound
    ||J_av|| + ||M_e|| ||R3|| applies, valid since the gate matrix has
    spectral norm at most 1.
    """
    j_av = average_jacobian(decomp)
    me = inter_jacobian_factor(decomp)
    if me.size == 0:
        return float(np.linalg.norm(j_av, 2))
    if decomp.r4_is_selector and decomp.m <= 16:
        groups = np.argmax(np.abs(decomp.r4), axis=1)
        terms = [
            me[:, groups == k] @ decomp.r3[groups == k, :] for k in range(decomp.m)
        ]
        best = 0.0
        for corner in range(2**decomp.m):
            signs = [1.0 if corner >> k & 1 else -1.0 for k in range(decomp.m)]
            j = j_av - sum(s * t for s, t in zip(signs, terms))
            best = max(best, float(np.linalg.norm(j, 2)))
        return best
    extra = float(np.linalg.norm(me, 2) * np.linalg.norm(decomp.r3, 2))
    return float(np.linalg.norm(j_av, 2) + extra)


def kappa(gamma: float, eps: float, T: float, rho: float, lambda2: float) -> float:
    """Transition-matrix norm bound over a window of length T (fast time)."""
    s = eps * T
    if rho * s > 700.0:
        return math.inf
    decay = math.exp(-lambda2 * s)
    drift = gamma * eps * T * (1.0 / T + eps)
    remainder = 2.0 * (math.expm1(rho * s) - rho * s)
    return decay + drift + remainder


def _golden_min(fn, lo: float, hi: float, tol: float = 1e-10) -> tuple:
    """Golden-section minimum of a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = (a + b) / 2.0
    return x, fn(x)


def minimize_kappa(
    gamma: float, eps: float, rho: float, lambda2: float, grid_points: int = 200
) -> tuple:
    """(T_star, min kappa) over the log-spaced window domain eps T in [1e-3, 1e3]."""
    log_lo, log_hi = math.log(S_MIN / eps), math.log(S_MAX / eps)
    logs = np.linspace(log_lo, log_hi, grid_points)
    vals = [kappa(gamma, eps, math.exp(lt), rho, lambda2) for lt in logs]
    i = int(np.argmin(vals))
    lo = logs[max(i - 1, 0)]
    hi = logs[min(i + 1, grid_points - 1)]
    log_t, k = _golden_min(lambda lt: kappa(gamma, eps, math.exp(lt), rho, lambda2), lo, hi)
    return math.exp(log_t), k


# ---------------------------------------------------------------------------
# Certification


@dataclass(frozen=True)
class StabilityCertificate:
    gamma: float
    rho: float
    lambda2: float
    epsilon: float
    T_star: float
    kappa_value: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "rho": self.rho,
            "lambda2": self.lambda2,
            "epsilon": self.epsilon,
            "T_star": self.T_star,
            "kappa": self.kappa_value,
            "verdict": self.verdict,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def _require_assumptions(net, part, decomp, omega) -> tuple:
    report = check_partition(net, part)
    if not report.is_exact:
        raise AssumptionViolated(
            f"partition is not externally equitable (deviation {report.deviation_K:.3g})",
            assumption="external_equitable_partition",
        )
    try:
        eps, eta = epsilon(decomp, omega)
    except (IntraFrequencyMismatch, ZeroInterFrequencyGap) as exc:
        raise AssumptionViolated(str(exc), assumption="equal_intra_frequencies") from exc
    return eps, eta


def certify(
    net: WeightedNetwork,
    part: Partition,
    omega: np.ndarray,
    decomp: TreeDecomposition | None = None,
) -> StabilityCertificate:
    """Search the window length T for kappa < 1; sufficient, not necessary."""
    decomp = decomp if decomp is not None else build_spanning_tree(net, part)
    eps, _ = _require_assumptions(net, part, decomp, omega)
    gamma = gamma_bound(decomp)
    rho = rho_bound(decomp)
    lam2 = algebraic_connectivity(net, part)
    t_star, k_min = minimize_kappa(gamma, eps, rho, lam2)
    verdict = CERTIFIED if k_min < 1.0 else NOT_CERTIFIED
    return StabilityCertificate(
        gamma=gamma,
        rho=rho,
        lambda2=lam2,
        epsilon=eps,
        T_star=t_star,
        kappa_value=k_min,
        verdict=verdict,
    )


def epsilon_star(gamma: float, rho: float, lambda2: float, rel_tol: float = 1e-4) -> float:
    """sup { eps : min_T kappa(gamma, eps, T) < 1 } by bisection.

    Returns inf when even very large eps stays certified (gamma ~ 0).
    """

    def feasible(eps):
        return minimize_kappa(gamma, eps, rho, lambda2)[1] < 1.0

    lo = 1e-12
    if not feasible(lo):
        raise NoFeasibleEpsilon(
            f"kappa cannot drop below 1 even as eps -> 0 (gamma={gamma:.3g}, rho={rho:.3g})"
        )
    hi = 1.0
    while feasible(hi):
        hi *= 2.0
        if hi > 1e9:
            return math.inf
    while hi - lo > rel_tol * hi:
        mid = math.sqrt(lo * hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def tradeoff_curve(
    net: WeightedNetwork,
    part: Partition,
    gamma_grid,
    decomp: TreeDecomposition | None = None,
) -> list:
    """Boundary points (gamma, eps*) of the certified region.

    rho and lambda2 are taken from the instance; the curve is nonincreasing
    in gamma because kappa increases with gamma.
    """
    decomp = decomp if decomp is not None else build_spanning_tree(net, part)
    rho = rho_bound(decomp)
    lam2 = algebraic_connectivity(net, part)
    gammas = [float(g) for g in gamma_grid]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        stars = list(pool.map(lambda g: epsilon_star(g, rho, lam2), gammas))
    points = list(zip(gammas, stars))
    finite = [s for _, s in points if math.isfinite(s)]
    for (g1, s1), (g2, s2) in zip(points, points[1:]):
        if g1 < g2 and s1 < s2 - 1e-9 * max(1.0, abs(s1)):
            raise AssertionError("tradeoff curve must be nonincreasing in gamma")
    del finite
    return points


def save_tradeoff_csv(path, points) -> None:
    with open(path, "w") as fh:
        fh.write("gamma,epsilon_star\n")
        for g, s in points:
            fh.write(f"{g:.17g},{s:.17g}\n")


# ---------------------------------------------------------------------------
# Two-cluster analysis


def coupling_sum(decomp: TreeDecomposition) -> float:
    """a_bar: inter-cluster weight sums seen by one node of each cluster (r = 2)."""
    part, net = decomp.part, decomp.net
    if part.r != 2:
        raise ValueError("coupling_sum is defined for two clusters")
    c1, c2 = part.clusters
    s1 = float(net.adjacency[np.ix_(c1, c2)][0].sum())
    s2 = float(net.adjacency[np.ix_(c2, c1)][0].sum())
    return s1 + s2


def frequency_gap(decomp: TreeDecomposition, omega: np.ndarray) -> float:
    """omega_bar: the (common) inter-cluster natural-frequency gap (r = 2)."""
    part = decomp.part
    if part.r != 2:
        raise ValueError("frequency_gap is defined for two clusters")
    omega = np.asarray(omega, dtype=float)
    return abs(float(omega[part.clusters[0][0]] - omega[part.clusters[1][0]]))


#: Relative Frobenius tolerance of the commutation test.
COMMUTATOR_RTOL = 1e-9


def two_cluster_test(
    net: WeightedNetwork,
    part: Partition,
    omega: np.ndarray,
    decomp: TreeDecomposition | None = None,
) -> str:
    """Commutation test for two clusters under frequency dominance.

    CERTIFIED_COMMUTING when J_intra and J_inter commute (relative Frobenius
    tolerance); NOT_APPLICABLE when r != 2 or the frequency gap does not
    exceed the coupling sum; NOT_CERTIFIED otherwise (no conclusion).
    """
    if part.r != 2:
        return NOT_APPLICABLE
    decomp = decomp if decomp is not None else build_spanning_tree(net, part)
    _require_assumptions(net, part, decomp, omega)
    if frequency_gap(decomp, omega) <= coupling_sum(decomp):
        return NOT_APPLICABLE
    j_intra, j_inter = two_cluster_jacobians(decomp)
    comm = j_intra @ j_inter - j_inter @ j_intra
    bound = COMMUTATOR_RTOL * (
        1.0 + np.linalg.norm(j_intra, "fro") * np.linalg.norm(j_inter, "fro")
    )
    return CERTIFIED_COMMUTING if np.linalg.norm(comm, "fro") <= bound else NOT_CERTIFIED


def period_T2(omega_bar: float, a_bar: float) -> float:
    """Period 2 pi omega_bar / sqrt(omega_bar^2 - a_bar^2) of the fast flow."""
    if a_bar < 0:
        raise ValueError("a_bar must be nonnegative")
    if omega_bar <= a_bar:
        raise FrequencyDominanceViolated(
            f"needs omega_bar > a_bar, got {omega_bar} <= {a_bar}: the inter "
            "flow locks to a constant (frequency synchronization)"
        )
    return 2.0 * math.pi * omega_bar / math.sqrt(omega_bar**2 - a_bar**2)


# ---------------------------------------------------------------------------
# Sampled Lyapunov check


@dataclass(frozen=True)
class SampledLyapunovReport:
    sample_times: np.ndarray = field(repr=False)
    v_values: np.ndarray = field(repr=False)
    differences: np.ndarray = field(repr=False)
    c3: float
    n_violations: int

    @property
    def all_decreasing(self) -> bool:
        return self.n_violations == 0


def lyapunov_sampled_check(
    decomp: TreeDecomposition,
    record: SimulationRecord,
    t_star: float,
    eps: float,
) -> SampledLyapunovReport:
    """Check V(x) = x.T P x decreases at the sampled instants t_k.

    P solves J_av.T P + P J_av = -I.  Samples are spaced eps * t_star
    seconds apart (one certificate window in real time); V may grow in
    between.  Violations are reported as data, and c3 is the largest
    constant for which the sampled decrease condition holds.
    """
    j_av = average_jacobian(decomp)
    p = solve_continuous_lyapunov(j_av.T, -np.eye(j_av.shape[0]))
    x = record.x_traj if record.x_traj is not None else record.thetas @ decomp.bt_intra
    spacing = eps * t_star
    stride = max(1, int(round(spacing / (record.times[1] - record.times[0]))))
    idx = np.arange(0, len(record.times), stride)
    samples = x[idx]
    times = record.times[idx]
    v = np.einsum("ki,ij,kj->k", samples, p, samples)
    dv = np.diff(v)
    dt = np.diff(times)
    norms = np.einsum("ki,ki->k", samples, samples)[:-1]
    live = norms > 1e-24
    rates = np.full(dv.shape, -np.inf)
    rates[live] = dv[live] / (dt[live] * norms[live])
    n_viol = int(np.sum(rates[live] >= 0.0))
    c3 = float(-rates[live].max()) if live.any() else math.inf
    return SampledLyapunovReport(
        sample_times=times,
        v_values=v,
        differences=dv,
        c3=c3,
        n_violations=n_viol,
    )
