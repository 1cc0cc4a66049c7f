"""Exception hierarchy shared by all xmorph modules.

Every error class carries a distinct process exit code so the command-line
front end can map failures to stable, scriptable statuses.
"""

from __future__ import annotations


class XmorphError(Exception):
    """Base class for all xmorph errors."""

    exit_code = 10


# -- dataset / manifest --------------------------------------------------

class MissingFile(XmorphError):
    exit_code = 11


class SchemaViolation(XmorphError):
    exit_code = 12


class DimensionMismatch(XmorphError):
    """Feature length or matrix shape differs from the declared dimension."""

    exit_code = 13


class UnknownName(XmorphError):
    exit_code = 14


# -- featurization -------------------------------------------------------

class SignalTooShort(XmorphError):
    exit_code = 15


class TooFewFrames(XmorphError):
    exit_code = 16


class TooFewBands(XmorphError):
    exit_code = 17


class TooFewSamples(XmorphError):
    exit_code = 18


# -- augmentation --------------------------------------------------------

class EmptyInput(XmorphError):
    exit_code = 19


class MixedContext(XmorphError):
    exit_code = 20


# -- correspondence ------------------------------------------------------

class ContextMismatch(XmorphError):
    exit_code = 21


class UnknownLabel(XmorphError):
    exit_code = 22


# -- encoder-decoder projection -------------------------------------------

class EmptyCorrespondence(XmorphError):
    exit_code = 23


class NonFiniteLoss(XmorphError):
    """Training diverged; message includes the offending epoch."""

    exit_code = 24


# -- manifold alignment ----------------------------------------------------

class NonPositiveBandwidth(XmorphError):
    exit_code = 25


class EmptyDomain(XmorphError):
    exit_code = 26


class DegenerateLabels(XmorphError):
    exit_code = 27


class NotSymmetric(XmorphError):
    exit_code = 28


class CholeskyFailure(XmorphError):
    """B + eps*I was not positive definite; the regularization is too small."""

    exit_code = 29


class UnknownDomain(XmorphError):
    exit_code = 30


# -- classification --------------------------------------------------------

class SingleClass(XmorphError):
    exit_code = 31


class NonFiniteFeature(XmorphError):
    exit_code = 32


# -- evaluation harness ------------------------------------------------------

class TooFewBudgets(XmorphError):
    exit_code = 33


class InconsistentClassSets(XmorphError):
    exit_code = 34


class AllZeroWeights(XmorphError):
    exit_code = 35


class BudgetExceedsPool(XmorphError):
    exit_code = 36


class InsufficientUniqueObjects(XmorphError):
    exit_code = 37


# -- synthetic data -----------------------------------------------------------

class InvalidConfig(XmorphError):
    exit_code = 38


class InsufficientDirectionsWarning(UserWarning):
    """Fewer valid eigendirections exist than requested; all available kept."""
