"""Exception hierarchy shared by every entrolab module."""


class EntrolabError(Exception):
    """Base class for all library errors."""


class InadmissibleState(EntrolabError, ValueError):
    pass


class NotConservative(EntrolabError):
    """The system is only given in quasi-linear form and has no flux."""


class NonSmoothAt(EntrolabError):
    """Raised when a Lipschitz-only entropy is differentiated at its kink."""

    def __init__(self, msg, left=None, right=None):
        super().__init__(msg)
        self.left = left
        self.right = right


class NotStrictlyConvex(EntrolabError):
    pass


class NewtonDiverged(EntrolabError):
    pass


class QuadratureNotConverged(EntrolabError):
    pass


class RankDeficiency(EntrolabError):
    pass


class ZeroState(EntrolabError, ValueError):
    pass


class NonConvexFlux(EntrolabError):
    pass


class VacuumFormation(EntrolabError):
    pass


class OutsideDomain(EntrolabError, ValueError):
    pass


class SupportViolation(EntrolabError, ValueError):
    pass


class AdmissibilityViolation(EntrolabError, ValueError):
    pass


class WindowInvalid(EntrolabError, ValueError):
    pass


class PairNotCompatible(EntrolabError):
    pass


class CandidatesDisagreeAtT(EntrolabError):
    pass


class NonCompactWaveSupport(EntrolabError):
    pass


class NotWeakSolution(EntrolabError, ValueError):
    """A ranking candidate carries a discontinuity that violates the jump relation."""


class ScenarioError(EntrolabError):
    """Scenario file failed to parse or validate."""
