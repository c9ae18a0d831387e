"""Balloon-Windkessel hemodynamics and the BOLD readout.

Neural activity z drives, per region, the vasodilatory signal s, blood
inflow f, blood volume v and deoxyhemoglobin content q:

    ds/dt = z - kappa_s s - gamma_s (f - 1)
    df/dt = s
    tau_b dv/dt = f - v**(1/alpha_s)
    tau_b dq/dt = f E(f)/E0 - v**(1/alpha_s) q / v,   E(f) = 1 - (1 - E0)**(1/f)

with BOLD output y = V0 (k1 (1 - q) + k2 (1 - q/v) + k3 (1 - v)).
Parameter names carry suffixes (kappa_s, gamma_s, tau_b, alpha_s) to avoid
clashing with the certificate quantities of the same Greek letters.

Around the equilibrium (s, f, v, q) = (0, 1, 1, 1) the model linearizes to
two 2x2 stages in series (z -> f, then f -> y), both Hurwitz, acting as a
low-pass filter from neural activity to BOLD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPhysiologicalState

#: Integration step for the hemodynamic states (seconds).
DT_HEMO = 1e-3


@dataclass(frozen=True)
class HemoParams:
    """Friston-estimate constants of the hemodynamic model."""

    kappa_s: float = 0.65  # signal decay rate (1/s)
    gamma_s: float = 0.41  # flow-dependent elimination rate (1/s)
    tau_b: float = 0.98  # blood-flow time constant (s)
    alpha_s: float = 0.33  # vessel stiffness exponent
    e0: float = 0.34  # resting oxygen extraction fraction
    v0: float = 0.02  # resting blood volume fraction

    def __post_init__(self):
        if min(self.kappa_s, self.gamma_s, self.tau_b) <= 0:
            raise ValueError("rates and time constant must be positive")
        if not (0 < self.e0 < 1 and 0 < self.alpha_s < 1):
            raise ValueError("need 0 < e0 < 1 and 0 < alpha_s < 1")

    @property
    def k1(self) -> float:
        return 7.0 * self.e0

    @property
    def k2(self) -> float:
        return 2.0

    @property
    def k3(self) -> float:
        return 2.0 * self.e0 - 0.2

    @property
    def beta_input(self) -> float:
        """Linearized oxygen-extraction input gain [E0 + (1-E0) ln(1-E0)] / (tau_b E0)."""
        return (self.e0 + (1.0 - self.e0) * math.log(1.0 - self.e0)) / (self.tau_b * self.e0)


EQUILIBRIUM = np.array([0.0, 1.0, 1.0, 1.0])


def hemo_rhs(state: np.ndarray, z: np.ndarray, params: HemoParams) -> np.ndarray:
    """Time derivative of stacked states; state has shape (4,) or (4, N)."""
    state = np.asarray(state, dtype=float)
    s, f, v, q = state[0], state[1], state[2], state[3]
    if np.any(f <= 0) or np.any(v <= 0) or np.any(q <= 0):
        raise NonPhysiologicalState("f, v, q must stay positive")
    inv_alpha = 1.0 / params.alpha_s
    outflow = v**inv_alpha
    extraction = 1.0 - (1.0 - params.e0) ** (1.0 / f)
    ds = z - params.kappa_s * s - params.gamma_s * (f - 1.0)
    df = s
    dv = (f - outflow) / params.tau_b
    dq = (f * extraction / params.e0 - outflow * q / v) / params.tau_b
    return np.stack([ds, df, dv, dq])


def bold(state: np.ndarray, params: HemoParams) -> np.ndarray:
    """BOLD readout y = V0 (k1 (1-q) + k2 (1 - q/v) + k3 (1-v))."""
    state = np.asarray(state, dtype=float)
    v, q = state[2], state[3]
    if np.any(v <= 0):
        raise NonPhysiologicalState("v must stay positive")
    return params.v0 * (
        params.k1 * (1.0 - q) + params.k2 * (1.0 - q / v) + params.k3 * (1.0 - v)
    )


def simulate_bold(
    times: np.ndarray, neural: np.ndarray, params: HemoParams | None = None
) -> np.ndarray:
    """BOLD responses to per-region neural input series.

    neural has shape (len(times), N).  Integration starts from the
    equilibrium with RK4 at DT_HEMO; the input is zero-order held between
    its samples.  The output is emitted on the input time grid.
    """
    params = params or HemoParams()
    times = np.asarray(times, dtype=float)
    neural = np.atleast_2d(np.asarray(neural, dtype=float))
    if neural.shape[0] != len(times):
        raise ValueError("neural input must have one row per time sample")
    if not np.all(np.isfinite(neural)):
        raise ValueError("neural input must be finite")
    n = neural.shape[1]
    state = np.repeat(EQUILIBRIUM[:, None], n, axis=1)
    out = np.empty((len(times), n))
    out[0] = bold(state, params)
    for k in range(len(times) - 1):
        z = neural[k]
        span = times[k + 1] - times[k]
        substeps = max(1, int(round(span / DT_HEMO)))
        h = span / substeps
        for _ in range(substeps):
            try:
                k1 = hemo_rhs(state, z, params)
                k2 = hemo_rhs(state + 0.5 * h * k1, z, params)
                k3 = hemo_rhs(state + 0.5 * h * k2, z, params)
                k4 = hemo_rhs(state + h * k3, z, params)
            except NonPhysiologicalState as exc:
                raise NonPhysiologicalState(
                    f"state left the physiological region near t = {times[k]:.6g}",
                    time=float(times[k]),
                ) from exc
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.any(state[1:] <= 0):
            raise NonPhysiologicalState(
                f"state left the physiological region at t = {times[k + 1]:.6g}",
                time=float(times[k + 1]),
            )
        out[k + 1] = bold(state, params)
    return out


def linearized_stages(params: HemoParams | None = None) -> tuple:
    """State-space matrices ((A1, B1, C1), (A2, B2, C2)) of the two stages.

    Stage 1 maps neural activity to inflow deviation, stage 2 maps inflow to
    BOLD.  Both A matrices are Hurwitz.
    """
    p = params or HemoParams()
    a1 = np.array([[-p.kappa_s, -p.gamma_s], [1.0, 0.0]])
    b1 = np.array([[1.0], [0.0]])
    c1 = np.array([[0.0, 1.0]])
    ta = p.tau_b * p.alpha_s
    a2 = np.array([[-1.0 / ta, 0.0], [-(1.0 - p.alpha_s) / ta, -1.0 / p.tau_b]])
    b2 = np.array([[1.0 / p.tau_b], [p.beta_input]])
    c2 = p.v0 * np.array([[p.k2 - p.k3, -p.k1 - p.k2]])
    return (a1, b1, c1), (a2, b2, c2)


def linearized_response(frequency_hz: float, params: HemoParams | None = None) -> complex:
    """Complex gain of the linearized cascade at a given frequency."""
    if frequency_hz < 0:
        raise ValueError("frequency must be nonnegative")
    (a1, b1, c1), (a2, b2, c2) = linearized_stages(params)
    s = 2j * math.pi * frequency_hz
    g1 = c1 @ np.linalg.solve(s * np.eye(2) - a1, b1)
    g2 = c2 @ np.linalg.solve(s * np.eye(2) - a2, b2)
    return complex(g1[0, 0] * g2[0, 0])


def equilibrium_jacobian(params: HemoParams | None = None) -> tuple:
    """(A, b) of the linearized 4-state model at (0, 1, 1, 1).

    A is the 4x4 state Jacobian in (s, f, v, q) order and b the input
    column for the neural drive.
    """
    p = params or HemoParams()
    ta = p.tau_b * p.alpha_s
    a = np.array(
        [
            [-p.kappa_s, -p.gamma_s, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0 / p.tau_b, -1.0 / ta, 0.0],
            [0.0, p.beta_input, -(1.0 - p.alpha_s) / ta, -1.0 / p.tau_b],
        ]
    )
    b = np.array([1.0, 0.0, 0.0, 0.0])
    return a, b


def frequency_sweep(freqs_hz, params: HemoParams | None = None) -> np.ndarray:
    """Rows of (f_hz, magnitude, phase) over a frequency grid."""
    rows = []
    for f in freqs_hz:
        g = linearized_response(float(f), params)
        rows.append([float(f), abs(g), math.atan2(g.imag, g.real)])
    return np.array(rows)


def save_bold_csv(path, times: np.ndarray, bold_series: np.ndarray) -> None:
    """Write ``t, y_0, ..., y_{N-1}`` rows."""
    n = bold_series.shape[1]
    header = "t," + ",".join(f"y_{i}" for i in range(n))
    data = np.column_stack([times, bold_series])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def save_frequency_response_csv(path, sweep: np.ndarray) -> None:
    np.savetxt(
        path, sweep, delimiter=",", header="f_hz,magnitude,phase", comments="", fmt="%.17g"
    )
