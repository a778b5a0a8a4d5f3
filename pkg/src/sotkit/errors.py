"""Exception hierarchy shared across the engine.

Exit-code families: 1 config, 2 transport, 3 parse/fallback, 4 integrity.
"""


class SotkitError(Exception):
    exit_code = 1


class ConfigError(SotkitError):
    exit_code = 1


class TemplateError(ConfigError):
    """A placeholder was left unbound or a template is malformed."""


class TransportError(SotkitError):
    exit_code = 2


class RateLimited(TransportError):
    """HTTP 429 persisted through every retry."""


class ProtocolError(TransportError):
    """The endpoint returned a body we cannot interpret."""


class EmptySkeleton(SotkitError):
    """The skeleton response contained no parseable numbered points."""

    exit_code = 3

    def __init__(self, raw: str):
        super().__init__("no numbered points found in skeleton response")
        self.raw = raw


class SotFallback(SotkitError):
    """The skeleton stage failed; callers may rerun as normal generation."""

    exit_code = 3

    def __init__(self, raw_skeleton: str):
        super().__init__("skeleton stage unusable, fall back to normal generation")
        self.raw_skeleton = raw_skeleton


class IntegrityError(SotkitError):
    exit_code = 4
