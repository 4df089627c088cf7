"""Exception types shared across the warehouse engine."""

import re

_CAMEL = re.compile(r"(?<!^)(?=[A-Z])")


class XolapError(Exception):
    """Base class for every engine error."""

    def code(self) -> str:
        """Machine-readable snake_case error code derived from the class name."""
        return _CAMEL.sub("_", type(self).__name__).lower()


class MalformedXml(XolapError):
    """Input text is not well-formed XML."""


class MissingDocument(XolapError):
    """A referenced warehouse document does not exist on disk."""


class SchemaViolation(XolapError):
    """Metadata document breaks a structural invariant; message names the element path."""


class IntegrityError(XolapError):
    """Dimension or fact document content is inconsistent with the schema."""


class UnknownDimension(XolapError):
    pass


class UnknownLevel(XolapError):
    pass


class UnknownMember(XolapError):
    pass


class UnknownFactClass(XolapError):
    pass


class UnknownMeasure(XolapError):
    pass


class UnknownAttribute(XolapError):
    pass


class DuplicateAxis(XolapError):
    pass


class DuplicateMeasure(XolapError):
    pass


class NotAnAxis(XolapError):
    pass


class NotCoarser(XolapError):
    pass


class NotFiner(XolapError):
    pass


class NotAPermutation(XolapError):
    pass


class InvalidPermutation(XolapError):
    pass


class EmptyMemberSet(XolapError):
    pass


class EmptySubset(XolapError):
    pass


class NonNumericAttribute(XolapError):
    pass


class EmptyGroupError(XolapError):
    """min/max/avg requested over a group with no members."""


class InvalidSplit(XolapError):
    pass


class PipelineError(XolapError):
    """A pipeline description could not be parsed or applied.

    Carries the zero-based index of the offending op (None when the failure
    is not attributable to a single op, e.g. malformed JSON).
    """

    def __init__(self, code: str, message: str, op_index: int | None = None):
        super().__init__(message)
        self._code = code
        self.op_index = op_index

    def code(self) -> str:
        return self._code


class UnsupportedInDialect(XolapError):
    """Reserved: raised if a pipeline cannot be expressed in the chosen dialect."""


class ProcessorUnavailable(XolapError):
    """No external XQuery processor is configured."""


class ProcessorFailure(XolapError):
    """The external XQuery processor exited with an error."""


class OutputParseError(XolapError):
    """The external processor's output is not a parseable result document."""
