class ExtractorError(Exception):
    """Base for everything this package raises on purpose."""


class UsageError(ExtractorError):
    """Bad flags, bad config, or a model that contradicts the config."""


class DataError(ExtractorError):
    """Unreadable or malformed input/output files."""


class LrfError(DataError):
    """Malformed LRF1 file; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset
