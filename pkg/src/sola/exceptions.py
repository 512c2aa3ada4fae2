"""Exception types shared across the package."""


class SolaError(Exception):
    """Base class for all package errors."""


class GraphError(SolaError, ValueError):
    pass


class CycleError(GraphError):
    """The hierarchy subgraph contains a directed cycle."""


class SelfLoopError(GraphError):
    """An exclusion edge joins a node to itself."""


class NotATree(GraphError):
    """The operation needs a hierarchy that is a single rooted tree."""


class CapExceeded(SolaError):
    """An exhaustive enumeration would exceed the configured size cap."""


class InfeasibleError(SolaError):
    pass


class UnboundedError(SolaError):
    pass
