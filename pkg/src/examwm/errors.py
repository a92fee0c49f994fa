"""Exception hierarchy shared by all examwm modules.

Every error carries an ``exit_class`` used by the CLI to map failures to
distinct process exit codes (sysexits-style).
"""

from __future__ import annotations


class ExamWmError(Exception):
    """Base class for all toolkit errors."""

    exit_class = "internal"


class UsageError(ExamWmError):
    exit_class = "usage"


# --- PDF substrate -----------------------------------------------------------

class MalformedPdf(ExamWmError):
    """Input is not a PDF or its cross-reference structure is broken."""

    exit_class = "data"


class EncryptedPdf(ExamWmError):
    """Password-protected input; the toolkit requires an open text layer."""

    exit_class = "data"


# --- ingestion ----------------------------------------------------------------

class NoItemsFound(ExamWmError):
    """No recognizable question numbering in the extracted spans."""

    exit_class = "data"


class KeyMismatch(ExamWmError):
    """Answer-key entry references an item id absent from the schema."""

    exit_class = "data"


class InvalidGold(ExamWmError):
    """Gold label is not one of the item's option labels."""

    exit_class = "data"


# --- planning -----------------------------------------------------------------

class MissingGold(ExamWmError):
    """Objective item lacks a gold answer required for distractor planning."""

    exit_class = "data"


class ConfigInvalid(ExamWmError):
    exit_class = "data"


class NotObjective(ExamWmError):
    exit_class = "data"


class NotLongForm(ExamWmError):
    exit_class = "data"


class TiedSetTooLarge(ExamWmError):
    """Requested tied set exceeds the item's incorrect-option pool."""

    exit_class = "data"


# --- embedding ----------------------------------------------------------------

class RewriteFailure(ExamWmError):
    """The PDF object graph cannot be safely rewritten."""

    exit_class = "data"


class AnchorNotFound(ExamWmError):
    """Item coordinates from the schema cannot be located in the document."""

    exit_class = "data"


class FontNotEmbeddable(ExamWmError):
    """Span font cannot be cloned for glyph-map remapping."""

    exit_class = "data"


# --- rendering / verification ---------------------------------------------------

class RasterizerUnavailable(ExamWmError):
    exit_class = "unavailable"


class RasterizerCrash(ExamWmError):
    exit_class = "unavailable"


class ShapeMismatch(ExamWmError):
    """Raster page lists differ in page count or dimensions."""

    exit_class = "data"


# --- calibration / scoring ------------------------------------------------------

class ClientError(ExamWmError):
    """Model client transport failure."""

    exit_class = "unavailable"


class EmptyDenominator(ExamWmError):
    exit_class = "data"


class ManifestMissing(ExamWmError):
    exit_class = "data"


class SchemaMismatch(ExamWmError):
    exit_class = "data"


class EmptySignature(ExamWmError):
    exit_class = "data"


class EmptyExam(ExamWmError):
    exit_class = "data"


class MixedExams(ExamWmError):
    exit_class = "data"


# --- storage --------------------------------------------------------------------

class NotFound(ExamWmError):
    exit_class = "noinput"


class StorageFull(ExamWmError):
    exit_class = "io"


class PermissionDenied(ExamWmError):
    exit_class = "io"


class StageViolation(ExamWmError):
    """Workflow stage requested out of order (e.g. score before embed)."""

    exit_class = "data"
