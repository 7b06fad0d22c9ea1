"""Exception types shared across the package."""


class DropletLabError(Exception):
    """Base class for all package errors."""


class OutOfRegion(DropletLabError):
    pass


class NonConvergence(DropletLabError):
    def __init__(self, msg, gap=None):
        super().__init__(msg)
        self.gap = gap


class DegenerateSupport(DropletLabError):
    pass


class OutOfGrid(DropletLabError):
    pass


class NotUnivalent(DropletLabError):
    pass


class NoSolution(DropletLabError):
    pass


class NotACusp(DropletLabError):
    pass


class Unclassifiable(DropletLabError):
    pass


class QuadratureFailure(DropletLabError):
    pass


class Unreachable(DropletLabError):
    pass


class AtSingularPoint(DropletLabError):
    pass


class IllConditioned(DropletLabError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class Collision(DropletLabError):
    pass


class InsufficientSamples(DropletLabError):
    pass


class DegenerateDiagonal(DropletLabError):
    pass


class ConfigError(DropletLabError):
    pass
