"""Exception hierarchy.

Validation problems derive from :class:`ScenarioError` (CLI exit code 1),
numerical and structural solver failures from :class:`SolverError`
(CLI exit code 2).
"""


class RatAggError(Exception):
    """Base class for all package errors."""


class ScenarioError(RatAggError, ValueError):
    pass


class ZeroCoverageUser(ScenarioError):
    def __init__(self, user):
        self.user = user
        super().__init__(f"user {user} has zero peak rate on every RAT")


class EmptyRat(ScenarioError):
    def __init__(self, rat):
        self.rat = rat
        super().__init__(f"RAT {rat} covers no user (all-zero column)")


class NonFinite(ScenarioError):
    pass


class NegativeAlpha(ScenarioError):
    pass


class DegenerateInstance(ScenarioError):
    pass


class DomainError(RatAggError, ValueError):
    pass


class ZeroThroughput(RatAggError, ValueError):
    def __init__(self, user):
        self.user = user
        super().__init__(f"user {user} has zero throughput; split ratios undefined")


class SolverError(RatAggError):
    pass


class AlphaZeroUnsupported(SolverError):
    def __init__(self, msg="alpha=0 has no finite rho; use primal_recovery.alpha_zero_solution"):
        super().__init__(msg)


class InfeasibleTieStructure(SolverError):
    pass


class NegativeFraction(SolverError):
    pass


class TooManySplitters(SolverError):
    pass


class TieSetTooLarge(SolverError):
    pass


class TooLarge(RatAggError, ValueError):
    pass


class VerifyMismatch(RatAggError):
    pass
