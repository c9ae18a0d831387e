"""Exception hierarchy for kurasync.

Every failure raised by the toolkit derives from :class:`KurasyncError`
so the CLI can catch one type and emit a machine-readable error report.
"""


class KurasyncError(Exception):
    """Base class for all kurasync errors."""

    code = "error"

    def payload(self) -> dict:
        """Machine-readable form used by the CLI error channel."""
        return {"error": self.code, "message": str(self)}


class GraphValidationError(KurasyncError):
    code = "graph_validation"


class ClusterNotConnected(KurasyncError):
    code = "cluster_not_connected"


class QuotientDisconnected(KurasyncError):
    code = "quotient_disconnected"


class ImageOverlap(KurasyncError):
    """The column spaces of the two blocks intersect nontrivially."""

    code = "image_overlap"


class ReconstructionFailure(KurasyncError):
    """Edge differences could not be reconstructed from tree differences."""

    code = "reconstruction_failure"


class ZeroInterFrequencyGap(KurasyncError):
    code = "zero_inter_frequency_gap"


class IntraFrequencyMismatch(KurasyncError):
    code = "intra_frequency_mismatch"


class StepTooLarge(KurasyncError):
    code = "step_too_large"


class AssumptionViolated(KurasyncError):
    """A structural assumption required by a certificate does not hold."""

    code = "assumption_violated"

    def __init__(self, message: str, assumption: str = ""):
        super().__init__(message)
        self.assumption = assumption

    def payload(self) -> dict:
        out = super().payload()
        if self.assumption:
            out["assumption"] = self.assumption
        return out


class FrequencyDominanceViolated(KurasyncError):
    """Inter-cluster frequency gap does not dominate the coupling sum."""

    code = "frequency_dominance_violated"


class NoFeasibleEpsilon(KurasyncError):
    code = "no_feasible_epsilon"


class NonPhysiologicalState(KurasyncError):
    """Hemodynamic state left the positive-valued physiological region."""

    code = "non_physiological_state"

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time

    def payload(self) -> dict:
        out = super().payload()
        if self.time is not None:
            out["time"] = self.time
        return out


class EmptyInput(KurasyncError):
    code = "empty_input"


class DisconnectedResult(KurasyncError):
    """Preprocessing produced a disconnected network (largest component kept)."""

    code = "disconnected_result"


class ConfigError(KurasyncError):
    code = "config_error"
