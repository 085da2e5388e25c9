"""Shared exception hierarchy for the splcmap toolchain."""


class SplcmapError(Exception):
    """Base class for every error raised by this package."""
