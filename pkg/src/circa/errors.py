"""Exception hierarchy shared across the engine.

Every error raised by the public API derives from CircaError so callers can
catch engine failures without swallowing programming errors.
"""


class CircaError(Exception):
    """Base class for all engine errors."""


# -- imaging ---------------------------------------------------------------

class UnsupportedFormat(CircaError):
    """Input bytes are not one of the accepted image formats."""


class CorruptStream(CircaError):
    """Input claims a supported format but cannot be decoded."""


class NonImageDicom(CircaError):
    """DICOM stream without decodable monochrome pixel data."""


class PatchShapeMismatch(CircaError):
    """A patch handed to assembly has the wrong dimensions."""


# -- segmentation ----------------------------------------------------------

class NoLungFound(CircaError):
    """Probability map contains no foreground after binarization."""


class EmptyMask(CircaError):
    """Operation requires at least one foreground pixel."""


class TooFewSamples(CircaError):
    """Outlier fence needs at least 4 samples."""


# -- radiomics -------------------------------------------------------------

class EmptySegment(CircaError):
    """Feature extraction requires a non-empty pixel set."""


class DegenerateGroups(CircaError):
    """Rank test requires at least two non-empty groups."""


# -- models ----------------------------------------------------------------

class DegenerateMatrix(CircaError):
    """Matrix has rank zero; no principal axes exist."""


class TooFewPoints(CircaError):
    """Mixture fit needs at least k points per class."""


class EmptyTrainSet(CircaError):
    """Embedding requires a non-empty training set."""


class ShapeMismatch(CircaError):
    """Tensor shape violates the declared contract."""


class EmptyDataset(CircaError):
    """Training requires at least one sample."""


class NonFiniteLoss(CircaError):
    """Training loss became NaN or infinite; aborted with diagnostics."""


class BackendUnavailable(CircaError):
    """Inference backend is not reachable or not installed."""


class InferenceFailure(CircaError):
    """Backend raised while computing its output."""


# -- metrics ---------------------------------------------------------------

class DimensionMismatch(CircaError):
    """Masks compared with different dimensions."""


class EmptyMatrix(CircaError):
    """Confusion matrix has zero total count."""


class ZeroTotalWeight(CircaError):
    """Weighted aggregation over all-zero weights."""


class MissingPredictions(CircaError):
    """Evaluation input lacks predictions for some manifest ids."""

    def __init__(self, missing_ids):
        self.missing_ids = list(missing_ids)
        super().__init__(f"missing predictions for {len(self.missing_ids)} case(s)")


# -- pipeline --------------------------------------------------------------

class InsufficientClassCases(CircaError):
    """A class within a dataset cannot reach its sampling quota."""


class ArtifactError(CircaError):
    """Model artifact file is malformed or fails its checksum."""
