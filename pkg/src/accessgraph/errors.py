"""Exception types shared across the package."""

from __future__ import annotations


class AccessGraphError(Exception):
    """Base class for all errors raised by this package."""


class EmptyScene(AccessGraphError):
    """A scene was built from an empty mesh list."""


class EmptyWalkableSet(AccessGraphError):
    """Labels exclude every object from the walkable set."""


class SceneFormatError(AccessGraphError):
    """A mesh or label file could not be parsed."""


class DuplicateEdge(AccessGraphError):
    """An edge (parent, child) was inserted twice; signals a builder bug."""


class GraphFinalized(AccessGraphError):
    """Topology mutation attempted after CSR finalization."""


class MissingAttribute(AccessGraphError):
    """A named node attribute is absent from the graph."""


class ChildlessVertex(AccessGraphError):
    """An aggregate score was requested for a vertex with no outgoing edges."""


class InvalidStart(AccessGraphError):
    """The start point's downward cast does not land on a walkable surface."""

    def __init__(self, tau, reason: str = "no walkable surface under start point"):
        self.tau = tuple(float(v) for v in tau)
        super().__init__(f"{reason}: tau={self.tau}")


class NonPositiveEdgeCost(AccessGraphError):
    """The composed cost coefficients produce a non-positive edge cost."""


class NotFound(AccessGraphError):
    """A named scene, graph, or result is not present in the store."""


class DuplicateName(AccessGraphError):
    """A store name is already taken by different content."""
