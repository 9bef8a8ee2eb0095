"""Exception hierarchy shared by all engine modules.

Every error carries a stable ``code`` string so the session layer can map
failures onto wire-level error messages without string matching.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine failures."""

    code = "engine-error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


# --- domain / world state -------------------------------------------------

class DomainError(EngineError):
    code = "domain-error"


class DuplicateIdError(DomainError):
    code = "duplicate-id"


class UnknownTypeError(DomainError):
    code = "unknown-type"


class UnknownParentError(DomainError):
    code = "unknown-parent-type"


class VocabularyError(DomainError):
    code = "bad-literal"


class FunctionalViolation(DomainError):
    code = "functional-violation"


class CapacityViolation(DomainError):
    code = "capacity-violation"


class DeviceFlagViolation(DomainError):
    code = "flag-on-non-device"


class ContainmentCycle(DomainError):
    code = "containment-cycle"


class UnknownIdError(EngineError):
    code = "unknown-id"


class ActionError(EngineError):
    """An action's built-in precondition does not hold.

    ``condition`` names the failing literal or check, e.g. ``"open(fridge1)"``.
    """

    code = "precondition-unmet"

    def __init__(self, message: str, condition: str = "", **details):
        super().__init__(message, **details)
        self.condition = condition


class RegistryMismatch(EngineError):
    code = "registry-mismatch"


# --- episodes ---------------------------------------------------------------

class RecordingError(EngineError):
    code = "already-recording"


class NotRecordingError(EngineError):
    code = "not-recording"


# --- skills / curiosity -----------------------------------------------------

class DegenerateEpisodeError(EngineError):
    code = "degenerate-episode"


class KnowledgeBaseError(EngineError):
    code = "knowledge-base-error"


class NoInstanceError(EngineError):
    code = "no-instance-present"


class AlreadyAnsweredError(EngineError):
    code = "already-answered"


# --- planning ---------------------------------------------------------------

class UnknownCommandError(EngineError):
    code = "unknown-command"


class GoalInstanceError(EngineError):
    code = "no-instance"


class UnsolvableError(EngineError):
    code = "unsolvable"


class PlanBudgetError(EngineError):
    code = "timeout"


class StepInfeasibleError(EngineError):
    code = "step-infeasible"

    def __init__(self, message: str, index: int, condition: str = "", **details):
        super().__init__(message, **details)
        self.index = index
        self.condition = condition


# --- assistance ---------------------------------------------------------------

class UnreachablePoseError(EngineError):
    code = "unreachable"


class AllGoalsUnreachableError(EngineError):
    code = "all-goals-unreachable"


class StaleProposalError(EngineError):
    code = "object-moved-since-proposal"


# --- session / protocol -----------------------------------------------------

class ProtocolError(EngineError):
    code = "protocol-error"

    def __init__(self, message: str, line: int | None = None, **details):
        super().__init__(message, **details)
        self.line = line


class IllegalTransition(EngineError):
    code = "illegal-transition"
