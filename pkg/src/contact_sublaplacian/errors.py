"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the domain where an object is defined."""


class SingularityError(DomainError):
    """Evaluation requested at a characteristic point of a hypersurface."""


class NumericalError(ArithmeticError):
    """A numerical procedure broke down (e.g. Gram-Schmidt on a near-singular basis)."""


class UnsupportedError(NotImplementedError):
    """The requested operation is not defined for this model case."""
