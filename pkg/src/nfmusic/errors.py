"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Inputs violate a documented configuration constraint."""


class DegenerateGeometryError(ValueError):
    """A geometric construction has no usable solution.

    Carries the offending source index when the failure is per-source
    (e.g. all bearing lines parallel during triangulation).
    """

    def __init__(self, message, source_index=None):
        super().__init__(message)
        self.source_index = source_index
