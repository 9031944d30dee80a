"""Exception types shared across the toolkit."""


class CultDiffError(Exception):
    """Base class for all toolkit errors."""


# catalog
class DuplicateArtifact(CultDiffError):
    pass


class UnknownCountry(CultDiffError):
    pass


class EmptyName(CultDiffError):
    pass


class MissingArtifact(CultDiffError):
    pass


class MissingModelId(CultDiffError):
    pass


class UnreadableImage(CultDiffError):
    pass


# prompt rendering / generation clients
class MissingDemonym(CultDiffError):
    pass


class ClientUnavailable(CultDiffError):
    pass


class QuotaExceeded(CultDiffError):
    pass


class GenerationRejected(CultDiffError):
    pass


class UnknownModel(CultDiffError):
    pass


# survey
class InsufficientImages(CultDiffError):
    pass


class LikertOutOfRange(CultDiffError):
    pass


class UnknownQuestion(CultDiffError):
    pass


class DuplicateResponse(CultDiffError):
    pass


class UnequalRaterCounts(CultDiffError):
    pass


class DegenerateAgreement(CultDiffError):
    """Chance agreement is 1: kappa is undefined, not a number."""


# pairs
class OutOfRange(CultDiffError):
    pass


class MissingReferences(CultDiffError):
    pass


class UnplannedPrompt(CultDiffError):
    pass


class SplitOverlap(CultDiffError):
    pass


# training
class DimensionMismatch(CultDiffError):
    pass


class EmptyBatch(CultDiffError):
    pass


class EmptySplit(CultDiffError):
    pass


class NonFiniteLoss(CultDiffError):
    pass


class EncoderNotLoaded(CultDiffError):
    pass


# evaluation
class EmptyReferences(CultDiffError):
    pass


class FeatureExtractorUnavailable(CultDiffError):
    pass


class NoAnnotations(CultDiffError):
    pass


class LengthMismatch(CultDiffError):
    pass


class ZeroVariance(CultDiffError):
    """A correlation statistic is undefined because one input is constant."""


class EmptySlice(CultDiffError):
    pass


# pipeline
class StageInputMissing(CultDiffError):
    pass


class PipelineLocked(CultDiffError):
    pass
