"""Exception hierarchy shared by all mskvar modules."""


class MskvarError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(MskvarError):
    """Array shapes are inconsistent with the model layout."""


class DegenerateModel(MskvarError):
    """The model has no criticality scale (all-zero variance profile)."""


class AsymmetricInput(MskvarError):
    """A matrix that must be symmetric is not."""


class NegativeEntry(MskvarError):
    """A matrix that must have non-negative entries has a negative one."""


class OutOfDomain(MskvarError):
    """A parameter lies outside the domain of the requested formula."""


class NotPSD(MskvarError):
    """Operation requires a positive semi-definite variance profile."""


class TooLarge(MskvarError):
    """System size exceeds the exhaustive-enumeration limit."""


class NonFinite(MskvarError):
    """An input array contains NaN or infinity."""


class TooFewReplicates(MskvarError):
    """Variance estimation needs at least two disorder replicates."""


class ModelFileError(MskvarError):
    """A model description file failed validation; message names the field."""


class CouplingFileError(MskvarError):
    """A binary coupling dump is malformed or truncated."""
