"""Exception types shared across the engine."""


class Eq20Error(Exception):
    """Base class for every error this package raises on purpose."""


class KBParseError(Eq20Error):
    """Document violates the knowledge-base file schema; message names the offending path."""


class KBReferenceError(Eq20Error):
    """An id points at a category, concept, question, or option that does not exist."""


class KBValidationError(Eq20Error):
    """Structurally valid document that breaks a knowledge-base invariant."""


class DegeneratePriorError(Eq20Error):
    """All prior weights are zero, so no belief distribution can be formed."""


class CollapsedBeliefError(Eq20Error):
    """An answer annihilated every concept and no rescue floor is active."""


class EmptySelectionError(Eq20Error):
    """An answer must select at least one option."""


class ExhaustedQuestionsError(Eq20Error):
    """Every question in the category has already been asked."""


class DimensionError(Eq20Error):
    """Vector or matrix shapes do not line up."""


class MaskError(Eq20Error):
    """A selection mask excludes every output."""


class NumericalError(Eq20Error):
    """Non-finite values appeared where finite numbers are required.

    Carries the last finite checkpoint when training aborts mid-run.
    """

    def __init__(self, message: str, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class ConfigurationError(Eq20Error):
    """Invalid or inconsistent configuration values."""


class UnscriptedQuestionError(Eq20Error):
    """Replay reached a question the script does not cover and no fallback target was given."""


class SessionError(Eq20Error):
    """Base for game-session protocol violations; `code` is the stable machine-readable tag."""

    code = "VALIDATION"


class SessionClosedError(SessionError):
    code = "SESSION_CLOSED"


class OutOfOrderError(SessionError):
    code = "OUT_OF_ORDER"


class InvalidOptionError(SessionError):
    code = "INVALID_OPTION"


class UnknownCategoryError(SessionError):
    code = "UNKNOWN_CATEGORY"


class StillActiveError(SessionError):
    # Asking for a result mid-game is a sequencing problem, same family as
    # answering the wrong question, so it shares the OUT_OF_ORDER tag.
    code = "OUT_OF_ORDER"
