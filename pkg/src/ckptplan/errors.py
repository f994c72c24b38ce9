"""Exception hierarchy shared by every ckptplan module."""


class CkptPlanError(Exception):
    """Base class for all ckptplan errors."""


class InputError(CkptPlanError, ValueError):
    """Invalid argument or malformed input."""


class EmptyLog(InputError):
    pass


class NoFailures(CkptPlanError, ValueError):
    """The log contains no failures, so the MTTF estimator is undefined."""


class NonPositiveMttf(InputError):
    pass


class NegativeTime(InputError):
    pass


class ProbabilityOutOfRange(InputError):
    pass


class NonPositiveInterval(InputError):
    pass


class BelowBranchPoint(InputError):
    pass


class DegenerateInput(InputError):
    """Inputs for which no finite interior optimum exists."""


class NonPositiveResult(InputError):
    pass


class OutOfSweepRange(InputError):
    pass


class WorkNotDivisible(InputError):
    pass


class LogParseError(InputError):
    """A CSV input row could not be parsed.  ``lineno`` is 1-based."""

    def __init__(self, path, lineno, message):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class NoConvergence(CkptPlanError, RuntimeError):
    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class BudgetExceeded(CkptPlanError, RuntimeError):
    pass
