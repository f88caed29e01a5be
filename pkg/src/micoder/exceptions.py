"""Error types shared across the package."""


class SpecError(ValueError):
    """Invalid network or experiment specification."""


class ShapeMismatchError(ValueError):
    """Array shape incompatible with the declared model shape."""


class StaleTapeError(RuntimeError):
    """A gradient tape was reused after the parameters changed."""


class DegenerateInputError(ValueError):
    """Input batch is degenerate (e.g. all-zero before power normalization)."""


class CheckpointError(ValueError):
    """Checkpoint stream could not be parsed.

    `offset` is the byte position where parsing failed.
    """

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class NanAbortError(RuntimeError):
    """A NaN appeared during a forward pass; the training step was aborted.

    When raised inside a training loop, `trace` holds the value trace
    recorded up to the aborted iteration.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
