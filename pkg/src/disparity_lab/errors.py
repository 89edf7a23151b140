class GraphError(ValueError):
    """Invalid graph structure or an operation the graph does not support."""


class DisconnectedGraphError(GraphError):
    pass


class ReducibleChainError(ValueError):
    """Transition matrix whose support is not strongly connected."""


class GraphTooLargeError(GraphError):
    pass
