"""Exception types shared across the package."""

from __future__ import annotations


class GibbsLinesError(Exception):
    """Base class for every error raised by this package."""


class InvalidGrid(GibbsLinesError):
    pass


class InvalidInterval(GibbsLinesError):
    pass


class NonPositiveArgument(GibbsLinesError):
    pass


class LengthMismatch(GibbsLinesError):
    pass


class GridMismatch(GibbsLinesError):
    pass


class OrderViolationInput(GibbsLinesError):
    pass


class ZeroHits(GibbsLinesError):
    """An estimator saw no qualifying samples and cannot report a value."""


class RejectionBudgetExhausted(GibbsLinesError):
    """The candidate/accept loop ran out of attempts before accepting."""

    def __init__(self, attempts: int, detail: str = ""):
        self.attempts = attempts
        msg = f"no acceptance after {attempts} candidate draws"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class EffectiveSampleSizeTooSmall(GibbsLinesError):
    """Importance weights degenerated below the usable threshold."""

    def __init__(self, ess: float, threshold: float = 100.0, label: str = ""):
        self.ess = ess
        self.threshold = threshold
        where = f" for {label}" if label else ""
        super().__init__(f"effective sample size {ess:.2f}{where} is below {threshold:g}")


class MixingDiagnosticFailure(GibbsLinesError):
    """Split-chain halves of an experiment disagree beyond statistical noise."""

    def __init__(self, label: str, gap: float, allowance: float):
        self.label = label
        self.gap = gap
        self.allowance = allowance
        super().__init__(
            f"split-chain halves of {label} differ by {gap:.3g} "
            f"(allowance {allowance:.3g})"
        )


class ParseError(GibbsLinesError):
    """A config file line could not be read at all."""


class ValidationError(GibbsLinesError):
    """One or more config fields failed validation; carries the full list."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
