"""Exception types shared across the toolkit.

Every operation that can fail for a mathematical reason (as opposed to a
programming error) raises a subclass of :class:`QholoError`, so callers and
the CLI can distinguish "the input has no answer" from bugs.
"""


class QholoError(Exception):
    """Base class for all toolkit errors."""


# --- series ---------------------------------------------------------------

class ZeroOrTruncated(QholoError):
    """A degree/leading-term query hit a series with no nonzero tracked term."""


class NotPolynomial(QholoError):
    """An exact-polynomial-only operation was applied to a truncated series."""


class NotDivisible(QholoError):
    """Exact polynomial division left a nonzero remainder."""


class PrecisionRequired(QholoError):
    """Inverting/dividing exact series needs an explicit truncation target."""


# --- operators ------------------------------------------------------------

class TruncationUnderflow(QholoError):
    """An operator product would carry no certified coefficient window."""


class LeadingCoefficientVanishes(QholoError):
    """Unrolling hit an index where the leading coefficient is zero."""

    def __init__(self, n: int):
        super().__init__(f"leading coefficient vanishes at n={n}")
        self.n = n


class RamificationError(QholoError):
    """A gauge transform's exponents do not fit the operator's M-lattice."""


class NotRegularSingular(QholoError):
    """A slim-part/eigenvalue operation needs a horizontal Newton polygon."""


# --- newton geometry --------------------------------------------------------

class NotASlope(QholoError):
    """The requested slope does not occur in the operator's Newton polygon."""


# --- factorization --------------------------------------------------------

class NotMonic(QholoError):
    """Hensel splitting requires a monic operator (leading coefficient 1)."""


class SlopesNotPartition(QholoError):
    """The requested slope sets do not partition the Newton polygon slopes."""


class FactorsNotCoprime(QholoError):
    """The requested slim-part factors share a root (possibly after q-shift)."""


class SlimPartMismatch(QholoError):
    """The supplied slim-part factors do not multiply to the slim part."""


class ResonantEigenvalues(QholoError):
    """A q-power-ratio eigenvalue class has multiplicity > 1; deferred."""


class NonRationalEigenvalue(QholoError):
    """An eigenvalue branch leaves the rational Puiseux field."""


# --- wkb ------------------------------------------------------------------

class Resonant(QholoError):
    """The non-resonant solver was applied to a resonant operator."""


class EvaluationBelowThreshold(QholoError):
    """WKB evaluation requested at an index below the validity threshold."""

    def __init__(self, n: int):
        super().__init__(f"evaluation index n={n} is below the validity threshold")
        self.n = n


class SingularMatch(QholoError):
    """The basis evaluations do not determine the matching coordinates."""


# --- asymptotics ----------------------------------------------------------

class NoFit(QholoError):
    """No quadratic quasi-polynomial fits within the period/skip bounds."""


class NoRecurrence(QholoError):
    """No constant-coefficient linear recurrence within the probed orders."""


class WindowTooSmall(QholoError):
    """The data window cannot support the requested pattern search."""


class InconclusiveTruncation(QholoError):
    """Competing asymptotic branches tie beyond the tracked precision."""


class RangeTooShort(QholoError):
    """A degree sequence is too short for the requested support check."""


# --- annihilator tools ----------------------------------------------------

class NoOperatorInBox(QholoError):
    """The exact nullspace in the requested degree box is trivial."""


class FailsAt(QholoError):
    """Certificate verification failed at a specific index."""

    def __init__(self, n: int, message: str = ""):
        detail = f" ({message})" if message else ""
        super().__init__(f"verification fails at n={n}{detail}")
        self.n = n


# --- linear algebra (internal) ---------------------------------------------

class SingularSystem(QholoError):
    """Exact elimination found no usable pivot."""
