"""Exception hierarchy. Everything raised on purpose derives from ArchiveError."""


class ArchiveError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class UnknownStatusString(ArchiveError):
    def __init__(self, value):
        super().__init__(f"unknown status string: {value!r}")
        self.value = value


class SchemaViolation(ArchiveError):
    pass


class ConfigError(ArchiveError):
    pass


class TransportError(ArchiveError):
    pass


class AuthError(ArchiveError):
    pass


class RateLimited(ArchiveError):
    pass


class RobotsDisallowed(ArchiveError):
    pass


class EmptyInput(ArchiveError):
    pass


class ClockSkew(ArchiveError):
    pass


class KeyMismatch(ArchiveError):
    pass


class UnknownPaper(ArchiveError):
    pass


class EmptyYear(ArchiveError):
    pass


class DegenerateFit(ArchiveError):
    pass


class MissingPhaseDates(ArchiveError):
    pass


class InvalidSpec(ArchiveError):
    pass


class NothingToExport(ArchiveError):
    pass


class ManifestConflict(ArchiveError):
    pass


class UnknownFigure(ArchiveError):
    pass
