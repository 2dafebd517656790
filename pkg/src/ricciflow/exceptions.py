"""Exception types shared across the package."""


class RicciFlowError(Exception):
    """Base class for all package errors."""


class GridError(RicciFlowError):
    """Invalid grid geometry (shape, spacing, periodicity)."""


class ConfigError(RicciFlowError):
    """Invalid family, scenario, or run configuration."""


class DegenerateMetricError(RicciFlowError):
    """Metric lost positive definiteness at a grid node."""

    def __init__(self, node, detail=""):
        self.node = tuple(int(i) for i in node)
        msg = f"metric is not positive definite at node {self.node}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class CurvatureBlowupError(RicciFlowError):
    """Flow step destroyed positive definiteness; curvature has blown up."""

    def __init__(self, t, node):
        self.t = float(t)
        self.node = tuple(int(i) for i in node)
        super().__init__(
            f"flow lost positive definiteness at t={self.t:.6g}, node {self.node}; "
            "curvature blow-up"
        )


class StabilityError(RicciFlowError):
    """Requested time step exceeds the parabolic stability bound."""


class HistoryError(RicciFlowError):
    """Residual evaluation needs more stored trajectory states."""


class ExtinctionError(RicciFlowError):
    """Closed-form sphere flow evaluated at or beyond its extinction time."""

    def __init__(self, t, extinction_time):
        self.t = float(t)
        self.extinction_time = float(extinction_time)
        super().__init__(
            f"t={self.t:.6g} is at or beyond the extinction time "
            f"{self.extinction_time:.6g}"
        )


class ClosedManifoldRequiredError(RicciFlowError):
    """Operation needs a closed (all axes periodic) grid."""


class InapplicableCheckError(RicciFlowError):
    """Check requested on data it does not apply to (e.g. gradient-only check)."""


class ScenarioError(ConfigError):
    """Scenario file failed validation; message names the offending key."""
