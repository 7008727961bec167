"""Exception hierarchy shared by every module."""


class SyllabudgetError(Exception):
    """Base class for all library errors."""


class ValidationError(SyllabudgetError, ValueError):
    """Bad input or configuration; maps to CLI exit code 1."""


class UnsupportedLanguageError(ValidationError):
    def __init__(self, code):
        super().__init__(f"unsupported language code: {code!r}")
        self.code = code


class MissingBackTranslationError(ValidationError):
    pass


class EmptyInputError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class UpstreamError(SyllabudgetError):
    """An external client call failed; maps to CLI exit code 2."""


class TransientUpstreamError(UpstreamError):
    """A failure worth retrying (transport error, 5xx, 429)."""


class RetryExhaustedError(UpstreamError):
    def __init__(self, attempts, last_error=None):
        super().__init__(f"upstream call failed after {attempts} attempts: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


class EmptyCompletionError(UpstreamError):
    pass


class VerdictParseError(SyllabudgetError, ValueError):
    """A judge completion did not match its documented grammar."""


class TaggerError(SyllabudgetError):
    pass
