"""Exception types shared across the package.

Errors raised inside a node while the graph is firing keep their own type; the
engine tags them with a ``node_id`` attribute so callers can tell which node
failed (see :func:`fhegraph.firing.apply_signal`).
"""


class FheGraphError(Exception):
    """Base class for every error raised by fhegraph."""

    node_id = None


# graph structure
class DuplicateNode(FheGraphError, KeyError):
    pass


class UnknownNode(FheGraphError, KeyError):
    pass


class SchemaError(FheGraphError, ValueError):
    pass


# firing engine
class ArityError(FheGraphError, ValueError):
    pass


class GeneratorUnderrun(FheGraphError):
    pass


class StateError(FheGraphError, RuntimeError):
    pass


# analysis
class CycleError(FheGraphError, RuntimeError):
    pass


class DomainError(FheGraphError, ValueError):
    pass


# ciphertext container
class CapacityError(FheGraphError, ValueError):
    pass


class KeyMismatch(FheGraphError):
    pass


class ShapeMismatch(FheGraphError, ValueError):
    pass


class LevelExhausted(FheGraphError, ArithmeticError):
    pass


class SliceError(FheGraphError, IndexError):
    pass


class PlaintextRequired(FheGraphError, TypeError):
    pass


class ShapeError(FheGraphError, ValueError):
    pass


# harness
class ParseError(FheGraphError, ValueError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
