"""Exception types shared across the package."""


class FreechoiceError(Exception):
    """Base class for user-facing errors (bad input, invalid data)."""


class FamilyError(FreechoiceError):
    """Invalid family of input blocks."""


class EmptyBlockError(FamilyError):
    pass


class OverlappingBlocksError(FamilyError):
    pass


class InvalidSymbolError(FamilyError):
    pass


class BlockTooLargeError(FamilyError):
    """Block exceeds the subset-closure safety cap."""


class NotMemberError(FreechoiceError):
    """Word is not an element of the subgroup."""


class NotBijectionError(FreechoiceError):
    """Cycle decomposition requested for a non-injective map."""


class MissingSubsetChoiceError(FreechoiceError):
    """A required lower-level choice is absent (solver bug)."""


class InternalProofViolation(Exception):
    """An identity that is supposed to hold unconditionally failed.

    This always indicates an implementation bug, never bad input; it is
    deliberately not a FreechoiceError so it cannot be swallowed by
    input-validation handlers.
    """
