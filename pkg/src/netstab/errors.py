"""Exception hierarchy shared by all netstab modules."""


class NetstabError(ValueError):
    """Base class for every error raised by netstab."""


class ConvergenceError(NetstabError):
    """An iterative method ran out of iterations.

    ``residual`` carries the last measured residual (or off-diagonal norm),
    ``partial`` any diagnostics collected before giving up.
    """

    def __init__(self, message, residual=None, partial=None):
        super().__init__(message)
        self.residual = residual
        self.partial = partial


class DomainError(NetstabError):
    """A model was evaluated at a state outside its domain (a pole)."""


class ScenarioError(NetstabError):
    """A scenario document failed validation.

    ``path`` is a JSON-pointer style location of the offending value.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path or "/"
