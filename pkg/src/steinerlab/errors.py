"""Exception types shared across the package."""


class InputError(ValueError):
    """An argument violates an operation's precondition."""


class GeometryError(ValueError):
    """The body/frame combination is geometrically invalid (e.g. origin not interior)."""


class DomainError(ValueError):
    """A point lies outside the active domain of a graph function."""
