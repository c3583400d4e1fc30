"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Inputs have inconsistent shapes, sizes, or grid geometry."""
