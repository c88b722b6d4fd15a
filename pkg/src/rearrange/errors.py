"""Exception hierarchy shared across the package."""


class RearrangeError(Exception):
    """Base class for all package errors."""


class SceneParseError(RearrangeError):
    """Scene or experience document could not be parsed."""


class SceneValidationError(RearrangeError):
    """Scene violates an invariant (overlap, bounds, duplicate id)."""

    def __init__(self, message, object_ids=()):
        super().__init__(message)
        self.object_ids = list(object_ids)


class BackendError(RearrangeError):
    """Chat or embedding backend failed (transport, status, retries exhausted)."""


class StructuredReplyError(RearrangeError):
    """No well-formed candidate found in a backend reply; carries the raw text."""

    def __init__(self, message, text=""):
        super().__init__(message)
        self.text = text


class RelationParseError(RearrangeError):
    """Instruction contains a relation phrase outside the supported vocabulary."""


class RepairExhaustedError(RearrangeError):
    """No collision-free pose found in the repair schedule."""

    def __init__(self, message, blockers=()):
        super().__init__(message)
        self.blockers = list(blockers)


class PipelineError(RearrangeError):
    """A pipeline stage failed; carries the stage name and partial transition log."""

    def __init__(self, stage, message, log=()):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.log = list(log)


class StoreError(RearrangeError):
    """Experience store is missing, corrupt, or failed to persist."""
