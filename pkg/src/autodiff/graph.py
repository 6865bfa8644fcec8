"""Define-by-run computation graph with reverse-mode differentiation.

Every op is evaluated as soon as it is recorded, so a graph doubles as a tape.
``Graph.forward`` replays the recorded ops against rebound leaves, and
``Graph.backward`` walks the tape in reverse to produce parameter gradients.
"""

import logging
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from ..errors import ContractError, NumericError, ShapeError
from .ops import KERNELS

logger = logging.getLogger(__name__)

LEAF_OPS = ("param", "constant")


class Node:
    """A recorded value in a Graph."""

    __slots__ = ("graph", "id", "op", "inputs", "attrs", "value", "cache", "name")

    def __init__(self, graph: "Graph", node_id: int, op: str, inputs: tuple, attrs: dict,
                 value: np.ndarray, cache: Any = None, name: Optional[str] = None):
        self.graph = graph
        self.id = node_id
        self.op = op
        self.inputs = inputs
        self.attrs = attrs
        self.value = value
        self.cache = cache
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def __float__(self) -> float:
        if self.value.size != 1:
            raise ContractError(f"node {self.id} ({self.op}) is not scalar: shape {self.shape}")
        return float(self.value.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Node({self.id}, {self.op}{label}, shape={self.shape})"

    def __add__(self, other):
        return self.graph.apply("add", self, other)

    def __radd__(self, other):
        return self.graph.apply("add", other, self)

    def __sub__(self, other):
        return self.graph.apply("sub", self, other)

    def __rsub__(self, other):
        return self.graph.apply("sub", other, self)

    def __mul__(self, other):
        return self.graph.apply("mul", self, other)

    def __rmul__(self, other):
        return self.graph.apply("mul", other, self)

    def __truediv__(self, other):
        return self.graph.apply("div", self, other)

    def __rtruediv__(self, other):
        return self.graph.apply("div", other, self)

    def __neg__(self):
        return self.graph.apply("neg", self)

    def __matmul__(self, other):
        return self.graph.apply("matmul", self, other)

    def __getitem__(self, key):
        return self.graph.apply("slice", self, key=key)


Operand = Union[Node, np.ndarray, float, int, Sequence[float]]


class Graph:
    """Records ops and parameters for one computation.

    Args:
        dtype: "float64" (default) or "float32"
        check_finite: raise NumericError when an op yields NaN/Inf
    """

    def __init__(self, dtype: str = "float64", check_finite: bool = True):
        self.dtype = np.dtype(dtype)
        self.check_finite = check_finite
        self.nodes: List[Node] = []
        self.params: Dict[str, Node] = {}
        self.outputs: Dict[str, Node] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    # -- leaves ---------------------------------------------------------------

    def _leaf(self, op: str, value, name: Optional[str] = None) -> Node:
        arr = np.asarray(value, dtype=self.dtype)
        node = Node(self, len(self.nodes), op, (), {}, arr, name=name)
        self.nodes.append(node)
        return node

    def param(self, name: str, value) -> Node:
        """Register a named parameter leaf; names are unique per graph."""
        if name in self.params:
            raise ContractError(f"parameter {name!r} is already registered")
        node = self._leaf("param", value, name)
        self.params[name] = node
        return node

    def constant(self, value) -> Node:
        """Record a fixed leaf; no gradient is reported for it."""
        return self._leaf("constant", value)

    def bind(self, store: Mapping[str, np.ndarray]) -> Dict[str, Node]:
        """Register every array of a parameter store as a parameter leaf."""
        return {name: self.param(name, value) for name, value in store.items()}

    def output(self, name: str, node: Node) -> Node:
        self.outputs[name] = node
        return node

    # -- ops ------------------------------------------------------------------

    def _as_node(self, x: Operand) -> Node:
        if isinstance(x, Node):
            if x.graph is not self:
                raise ContractError(f"node {x.id} belongs to another graph")
            return x
        return self.constant(x)

    def _evaluate(self, node_id: int, op: str, values: Sequence[np.ndarray], attrs: dict):
        kernel = KERNELS[op]
        try:
            with np.errstate(all="ignore"):
                out, cache = kernel.forward(values, attrs)
        except ValueError as e:
            raise ShapeError(f"node {node_id} ({op}): {e}") from None
        out = np.asarray(out, dtype=self.dtype)
        if self.check_finite and not np.all(np.isfinite(out)):
            raise NumericError(f"non-finite output at node {node_id} ({op})", node_id=node_id)
        return out, cache

    def apply(self, op: str, *operands: Operand, **attrs) -> Node:
        """Record and evaluate a primitive op."""
        if op not in KERNELS:
            raise ContractError(f"unknown op {op!r}")
        kernel = KERNELS[op]
        if kernel.arity >= 0 and len(operands) != kernel.arity:
            raise ContractError(f"op {op} takes {kernel.arity} inputs, got {len(operands)}")
        inputs = tuple(self._as_node(x) for x in operands)
        node_id = len(self.nodes)
        out, cache = self._evaluate(node_id, op, [n.value for n in inputs], attrs)
        node = Node(self, node_id, op, tuple(n.id for n in inputs), attrs, out, cache)
        self.nodes.append(node)
        return node

    # -- evaluation -----------------------------------------------------------

    def forward(self, inputs: Optional[Mapping[str, Any]] = None) -> Dict[str, np.ndarray]:
        """Rebind named parameters and re-evaluate every recorded op in order.

        Args:
            inputs: new parameter values, by name

        Returns:
            Values of the named outputs
        """
        for name, value in (inputs or {}).items():
            leaf = self.params.get(name)
            if leaf is None:
                raise ContractError(f"no parameter named {name!r}")
            arr = np.asarray(value, dtype=self.dtype)
            if arr.shape != leaf.value.shape:
                raise ShapeError(
                    f"node {leaf.id} ({name}): rebinding shape {arr.shape} != {leaf.value.shape}"
                )
            leaf.value = arr
        for node in self.nodes:
            if node.op in LEAF_OPS:
                continue
            values = [self.nodes[i].value for i in node.inputs]
            node.value, node.cache = self._evaluate(node.id, node.op, values, node.attrs)
        return {name: node.value.copy() for name, node in self.outputs.items()}

    def backward(self, output: Node) -> Dict[str, np.ndarray]:
        """Gradient of a scalar node with respect to every registered parameter.

        Parameters the output does not depend on get zero gradients.
        """
        if output.graph is not self:
            raise ContractError("output node belongs to another graph")
        if output.size != 1:
            raise ContractError(f"backward needs a scalar output, node {output.id} has shape {output.shape}")

        grads: Dict[int, np.ndarray] = {output.id: np.ones_like(output.value)}
        for node in reversed(self.nodes[: output.id + 1]):
            g = grads.get(node.id)
            if g is None or node.op in LEAF_OPS:
                continue
            del grads[node.id]
            values = [self.nodes[i].value for i in node.inputs]
            input_grads = KERNELS[node.op].backward(g, values, node.value, node.cache, node.attrs)
            for i, ig in zip(node.inputs, input_grads):
                if ig is None:
                    continue
                if i in grads:
                    grads[i] = grads[i] + ig
                else:
                    grads[i] = ig

        return {
            name: np.asarray(grads[leaf.id], dtype=self.dtype).reshape(leaf.shape)
            if leaf.id in grads else np.zeros_like(leaf.value)
            for name, leaf in self.params.items()
        }


# -- functional helpers ------------------------------------------------------

def _graph_of(*xs) -> Graph:
    for x in xs:
        if isinstance(x, Node):
            return x.graph
    raise ContractError("at least one operand must be a graph node")


def matmul(a: Operand, b: Operand) -> Node:
    """Matrix product; one side may be a vector."""
    return _graph_of(a, b).apply("matmul", a, b)


def transpose(x: Node) -> Node:
    """Swap the two axes of a matrix."""
    return x.graph.apply("transpose", x)


def tanh(x: Node) -> Node:
    """Elementwise hyperbolic tangent."""
    return x.graph.apply("tanh", x)


def sigmoid(x: Node) -> Node:
    """Logistic function, evaluated through tanh."""
    return x.graph.apply("sigmoid", x)


def exp(x: Node) -> Node:
    """Elementwise exponential."""
    return x.graph.apply("exp", x)


def log(x: Node) -> Node:
    """Natural log; non-positive inputs raise NumericError."""
    return x.graph.apply("log", x)


def softplus(x: Node) -> Node:
    """log(1 + e^x) without overflow."""
    return x.graph.apply("softplus", x)


def relu(x: Node) -> Node:
    """Elementwise max(x, 0)."""
    return x.graph.apply("relu", x)


def square(x: Node) -> Node:
    """Elementwise square."""
    return x.graph.apply("square", x)


def softmax(x: Node) -> Node:
    """Normalized exponentials along the last axis."""
    return x.graph.apply("softmax", x)


def log_softmax(x: Node) -> Node:
    """Log of softmax along the last axis, via log-sum-exp."""
    return x.graph.apply("log_softmax", x)


def concat(xs: Iterable[Operand]) -> Node:
    """Join along the last axis; leading shapes must agree."""
    xs = list(xs)
    return _graph_of(*xs).apply("concat", *xs)


def reduce_sum(x: Node, axis: Optional[int] = None) -> Node:
    """Sum of every entry, or along one axis."""
    if axis is None:
        return x.graph.apply("sum", x)
    return x.graph.apply("sum", x, axis=axis)


def reduce_mean(x: Node) -> Node:
    """Mean of every entry."""
    return x.graph.apply("mean", x)


def clip(x: Node, lo: float, hi: float) -> Node:
    """Clamp to [lo, hi]; entries outside get no gradient."""
    return x.graph.apply("clip", x, lo=lo, hi=hi)


def stop_gradient(x: Node) -> Node:
    """Identity in the forward pass, zero gradient in the backward pass."""
    return x.graph.apply("stop_gradient", x)


def add_n(xs: Iterable[Node]) -> Node:
    """Sum a non-empty sequence of nodes."""
    xs = list(xs)
    if not xs:
        raise ContractError("add_n needs at least one node")
    total = xs[0]
    for x in xs[1:]:
        total = total + x
    return total
