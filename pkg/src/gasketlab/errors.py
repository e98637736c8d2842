"""Exception hierarchy.

Every error carries a stable ``code`` string; the CLI prints it in its JSON
error payload and maps it to an exit status.
"""


class GasketError(Exception):
    code = "error"
    exit_status = 1

    def to_dict(self):
        return {"code": self.code, "message": str(self)}


class LevelError(GasketError, ValueError):
    """Requested level is negative or above the configured maximum."""

    code = "level_out_of_range"


class PointOutsideCellError(GasketError, ValueError):
    code = "point_outside_cell"


class SampleError(GasketError, ValueError):
    code = "sample_failed"

    def __init__(self, vertex_id, message):
        super().__init__(f"vertex {vertex_id}: {message}")
        self.vertex_id = vertex_id

    def to_dict(self):
        d = super().to_dict()
        d["vertex_id"] = int(self.vertex_id)
        return d


class JunctionError(GasketError):
    """Cascade candidates at a shared vertex disagree beyond tolerance."""

    code = "junction_inconsistency"

    def __init__(self, message, discrepancy):
        super().__init__(message)
        self.discrepancy = discrepancy


class ScalingBoundError(GasketError, ValueError):
    code = "scaling_bound_violation"


class JoinUpError(GasketError, ValueError):
    """Base function does not agree with f on the boundary vertices."""

    code = "join_up_violation"


class InfeasibleError(GasketError):
    code = "infeasible"


class SolverError(GasketError):
    code = "solver_failure"


class RankDeficiencyError(GasketError):
    code = "rank_deficient"

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DegenerateFitError(GasketError, ValueError):
    code = "degenerate_fit"


class RefinementError(GasketError, ValueError):
    code = "insufficient_refinement"
