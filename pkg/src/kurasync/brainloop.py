"""Fused fixed-step integrator for the brain pipeline.

The 66-region runs need one million RK4 steps with the hemodynamic states
advanced on the same fine grid: coarser neural sampling leaves zero-order
hold artifacts far above the microscopic demodulated BOLD fluctuations
that carry the functional-connectivity pattern.  The fused kernel steps
the phase dynamics and the per-region hemodynamics together and records
strided samples; it is a jit-compiled twin of ``dynamics.simulate`` plus
``hemodynamics.simulate_bold`` and is tested against both.
"""

from __future__ import annotations

import numba
import numpy as np

from .errors import NonPhysiologicalState
from .hemodynamics import EQUILIBRIUM, HemoParams


@numba.njit(fastmath=False)
def _hemo_rhs(state, z, kappa_s, gamma_s, tau_b, alpha_s, e0):
    s = state[0]
    f = state[1]
    v = state[2]
    q = state[3]
    out = np.empty_like(state)
    inv_alpha = 1.0 / alpha_s
    outфлow = v**inv_alpha
    extraction = 1.0 - (1.0 - e0) ** (1.0 / f)
    out[0] = z - kappa_s * s - gamma_s * (f - 1.0)
    out[1] = s
    out[2] = (f - outflow) / tau_b
    out[3] = (f * extraction / e0 - outflow * q / v) / tau_b
    return out
