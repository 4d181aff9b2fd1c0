"""Exception hierarchy.

Every error raised by the package derives from :class:`KnockoffGCError`, and
each subclass carries a stable ``code`` used by the command line to report a
machine-readable error class.
"""


class KnockoffGCError(Exception):
    code = "error"


class ConstantColumn(KnockoffGCError, ValueError):
    code = "constant_column"


class DimensionMismatch(KnockoffGCError, ValueError):
    code = "dimension_mismatch"


class OutOfRange(KnockoffGCError, IndexError):
    code = "out_of_range"


class NearZeroActual(KnockoffGCError, ValueError):
    code = "near_zero_actual"


class LengthMismatch(KnockoffGCError, ValueError):
    code = "length_mismatch"


class TooFewSamples(KnockoffGCError, ValueError):
    code = "too_few_samples"


class NotPositiveDefinite(KnockoffGCError, ValueError):
    code = "not_positive_definite"


class InvalidConfig(KnockoffGCError, ValueError):
    code = "invalid_config"


class NonFiniteLoss(KnockoffGCError, FloatingPointError):
    code = "non_finite_loss"


class UntrainedModel(KnockoffGCError, RuntimeError):
    code = "untrained_model"


class TooShort(KnockoffGCError, ValueError):
    code = "too_short"


class SingularDesign(KnockoffGCError, ValueError):
    code = "singular_design"


class BadIndex(KnockoffGCError, IndexError):
    code = "bad_index"


class DegenerateMape(KnockoffGCError, ValueError):
    code = "degenerate_mape"


class TooFewRealizations(KnockoffGCError, ValueError):
    code = "too_few_realizations"


class NonFiniteTrajectory(KnockoffGCError, FloatingPointError):
    code = "non_finite_trajectory"


class Unstable(KnockoffGCError, ValueError):
    code = "unstable"


class ShapeMismatch(KnockoffGCError, ValueError):
    code = "shape_mismatch"


class ParseError(KnockoffGCError, ValueError):
    code = "parse_error"


class MissingValue(KnockoffGCError, ValueError):
    code = "missing_value"


class DuplicateHeader(KnockoffGCError, ValueError):
    code = "duplicate_header"


class IoError(KnockoffGCError, OSError):
    code = "io_error"
