"""Exception types shared across the package."""


class StyleError(ValueError):
    """Invalid input or a violated data invariant."""


class CorpusError(StyleError):
    pass


class TreeParseError(StyleError):
    """Malformed bracketed tree; ``offset`` is a UTF-8 byte offset into the input."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at byte offset {offset}")
        self.reason = message
        self.offset = offset
