"""kurasync: cluster synchronization of Kuramoto oscillator networks.

Simulation, partition verification, averaging-based stability
certificates, and the brain functional-connectivity pipeline with
Balloon-Windkessel hemodynamics.
"""

from .network import (
    EepReport,
    OrientedIncidence,
    Partition,
    WeightedNetwork,
    algebraic_connectivity,
    build_incidence,
    check_partition,
)
from .tree import TreeDecomposition, build_spanning_tree, partitioned_pinv
from .dynamics import (
    OscillatorConfig,
    SimulationRecord,
    epsilon,
    kuramoto_rhs,
    manifold_distance,
    perturbation_fields,
    simulate,
)
from .certificates import (
    StabilityCertificate,
    average_jacobian,
    certify,
    gamma_bound,
    kappa,
    period_T2,
    rho_bound,
    tradeoff_curve,
    two_cluster_test,
)
from .metrics import CorrelationMatrix, OrderParameterSeries, order_parameters, pearson_matrix
from .hemodynamics import HemoParams, bold, hemo_rhs, linearized_response, simulate_bold

__version__ = "0.1.0"

__all__ = [
    "EepReport",
    "OrientedIncidence",
    "Partition",
    "WeightedNetwork",
    "algebraic_connectivity",
    "build_incidence",
    "check_partition",
    "TreeDecomposition",
    "build_spanning_tree",
    "partitioned_pinv",
    "OscillatorConfig",
    "SimulationRecord",
    "epsilon",
    "kuramoto_rhs",
    "manifold_distance",
    "perturbation_fields",
    "simulate",
    "StabilityCertificate",
    "average_jacobian",
    "certify",
    "gamma_bound",
    "kappa",
    "period_T2",
    "rho_bound",
    "tradeoff_curve",
    "two_cluster_test",
    "CorrelationMatrix",
    "OrderParameterSeries",
    "order_parameters",
    "pearson_matrix",
    "HemoParams",
    "bold",
    "hemo_rhs",
    "linearized_response",
    "simulate_bold",
    "__version__",
]
