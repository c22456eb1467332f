"""Exception hierarchy for the line coverage package."""


class LinecovError(Exception):
    """Base class for all package errors."""


class GraphError(LinecovError):
    pass


class DisconnectedGraph(GraphError):
    pass


class NegativeCost(GraphError):
    pass


class MissingServiceValues(GraphError):
    pass


class UnreachablePair(GraphError):
    pass


class WindExceedsAirspeed(LinecovError):
    pass


class GeometryError(LinecovError):
    pass


class InfeasibleEdge(LinecovError):
    """A required edge cannot be serviced within capacity from any allowed depot."""

    def __init__(self, edges, message=None):
        self.edges = list(edges)
        super().__init__(message or f"edges not serviceable within capacity: {self.edges}")


class InfeasibleInstance(InfeasibleEdge):
    pass


class TooLarge(LinecovError):
    """Size guard tripped (oracle enumeration, LP export)."""


class TooManyVariables(TooLarge):
    pass


class KTooLarge(LinecovError):
    pass


class SchemaError(LinecovError):
    pass
