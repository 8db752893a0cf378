"""Exception types shared across the toolkit."""


class CltlError(Exception):
    """Base class for all toolkit errors."""


class SpecSyntaxError(CltlError):
    """Concrete-syntax error, carrying position and expected tokens."""

    def __init__(self, message, line, column, expected=()):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.expected = tuple(expected)


class ValidationError(CltlError):
    """A parsed spec violates a static invariant."""


class MixedAtomError(ValidationError):
    """An atom mixes look-ahead terms with future-blind variables."""


class OwnershipError(ValidationError):
    """Variable ownership/kind violates the declared game mode."""


class UnknownVariable(ValidationError):
    """A formula names a variable that was never declared."""


class SizeMismatch(CltlError):
    """Frame/partial-frame sizes do not fit any compatibility clause."""


class WindowTooLong(CltlError):
    """A valuation window exceeds the k+1 aperture."""


class TermOutOfRange(CltlError):
    """An atom's term depth exceeds what the frame can see."""


class IncompatibleTarget(CltlError):
    """A realizer was handed a target frame its history cannot induce."""


class NotGapCompatible(CltlError):
    """Gap compatibility precondition violated."""


class UnachievableGap(CltlError):
    """Gap-compatible target whose exact gap function no integer extension
    reproduces (ceiled gaps are subadditive; wide env gaps admit no strict
    insertions)."""


class NotRealizable(CltlError):
    """Strategy extraction requested for an unrealizable spec."""


class AlphabetMismatch(CltlError):
    """Automata over different alphabets were combined."""


class NonTotalGame(CltlError):
    """A parity game has a vertex without outgoing edges."""


class ResourceExceeded(CltlError):
    """A construction grew past the configured state cap."""

    def __init__(self, what, limit):
        super().__init__(f"{what} exceeded the configured cap of {limit} states")
        self.what = what
        self.limit = limit


class UndecidableClass(CltlError):
    """The spec falls in the class proved undecidable (general games over Z)."""
