# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Tuple, Union

from .gp2_graph import Atom, Graph, HostLabel, Mark

INT = "int"
CHAR = "char"
STRING = "string"
ATOM = "atom"
LIST = "list"

VARIABLE_TYPES = (INT, CHAR, STRING, ATOM, LIST)

# Variables whose repeated occurrence makes matching cost depend on label size
NON_CONSTANT_TYPES = frozenset({LIST, STRING, ATOM})

Value = Union[int, str, Tuple[Atom, ...]]
Assignment = Dict[str, Value]


class RuleError(ValueError):
    pass


class EvalError(ArithmeticError):
    pass


# Expressions


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Degree:
    kind: str
    node: str


@dataclass(frozen=True)
class Length:
    name: str


@dataclass(frozen=True)
class ListExpr:
    """A ':'-separated list; the empty tuple is the label 'empty'"""

    items: Tuple["Expr", ...] = ()


Expr = Union[IntLit, StrLit, Var, Neg, BinOp, Degree, Length, ListExpr]


# Conditions


@dataclass(frozen=True)
class Compare:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class EdgePred:
    source: str
    target: str
    label: Optional["PatternLabel"] = None


@dataclass(frozen=True)
class TypePred:
    type_name: str
    name: str


@dataclass(frozen=True)
class Not:
    operand: "Cond"


@dataclass(frozen=True)
class And:
    left: "Cond"
    right: "Cond"


@dataclass(frozen=True)
class Or:
    left: "Cond"
    right: "Cond"


Cond = Union[Compare, EdgePred, TypePred, Not, And, Or]


# Patterns


@dataclass(frozen=True)
class PatternLabel:
    items: Tuple[Expr, ...] = ()
    mark: Mark = Mark.NONE


@dataclass
class PatternNode:
    key: str
    label: PatternLabel = PatternLabel()
    root: bool = False


@dataclass
class PatternEdge:
    key: str
    source: str
    target: str
    label: PatternLabel = PatternLabel()
    bidirectional: bool = False


@dataclass
class PatternGraph:
    nodes: List[PatternNode] = field(default_factory=list)
    edges: List[PatternEdge] = field(default_factory=list)

    def keys(self) -> List[str]:
        return [node.key for node in self.nodes]

    def index(self) -> Dict[str, int]:
        return {node.key: i for i, node in enumerate(self.nodes)}


@dataclass
class Rule:
    name: str
    variables: List[Tuple[str, str]]
    lhs: PatternGraph
    rhs: PatternGraph
    condition: Optional[Cond] = None
    var_types: Dict[str, str] = field(init=False, repr=False)
    interface: FrozenSet[str] = field(init=False, repr=False)
    # LHS positions of the nodes an application removes
    deleted_nodes: List[int] = field(init=False, repr=False)
    lhs_index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.var_types = dict(self.variables)
        self.interface = frozenset(self.lhs.keys()) & frozenset(self.rhs.keys())
        self.deleted_nodes = [
            i for i, n in enumerate(self.lhs.nodes) if n.key not in self.interface
        ]
        self.lhs_index = self.lhs.index()


@dataclass
class RhsInstance:
    """RHS labels and marks evaluated under one match"""

    nodes: List[Tuple[HostLabel, Mark]]
    edges: List[Tuple[HostLabel, Mark]]


# Walkers


def expr_variables(e: Expr) -> Iterator[str]:
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, Length):
        yield e.name
    elif isinstance(e, Neg):
        yield from expr_variables(e.operand)
    elif isinstance(e, BinOp):
        yield from expr_variables(e.left)
        yield from expr_variables(e.right)
    elif isinstance(e, ListExpr):
        for item in e.items:
            yield from expr_variables(item)


def expr_node_refs(e: Expr) -> Iterator[str]:
    if isinstance(e, Degree):
        yield e.node
    elif isinstance(e, Neg):
        yield from expr_node_refs(e.operand)
    elif isinstance(e, BinOp):
        yield from expr_node_refs(e.left)
        yield from expr_node_refs(e.right)
    elif isinstance(e, ListExpr):
        for item in e.items:
            yield from expr_node_refs(item)


def label_variables(label: PatternLabel) -> Iterator[str]:
    for item in label.items:
        yield from expr_variables(item)


def cond_parts(c: Cond) -> Iterator[Cond]:
    """Every atomic predicate of a condition, left to right"""
    if isinstance(c, Not):
        yield from cond_parts(c.operand)
    elif isinstance(c, (And, Or)):
        yield from cond_parts(c.left)
        yield from cond_parts(c.right)
    else:
        yield c


def cond_variables(c: Cond) -> Iterator[str]:
    for part in cond_parts(c):
        if isinstance(part, Compare):
            yield from expr_variables(part.left)
            yield from expr_variables(part.right)
        elif isinstance(part, TypePred):
            yield part.name
        elif isinstance(part, EdgePred) and part.label is not None:
            yield from label_variables(part.label)


def cond_node_refs(c: Cond) -> Iterator[str]:
    for part in cond_parts(c):
        if isinstance(part, Compare):
            yield from expr_node_refs(part.left)
            yield from expr_node_refs(part.right)
        elif isinstance(part, EdgePred):
            yield part.source
            yield part.target


# Evaluation


def wrap32(value: int) -> int:
    return ((value + 2**31) % 2**32) - 2**31


def _as_list(value: Value) -> Tuple[Atom, ...]:
    return value if isinstance(value, tuple) else (value,)


def _as_int(value: Value) -> int:
    if isinstance(value, tuple) and len(value) == 1:
        value = value[0]
    if not isinstance(value, int):
        raise EvalError(f"{value!r} is not an integer")
    return value


def _as_str(value: Value) -> str:
    if isinstance(value, tuple) and len(value) == 1:
        value = value[0]
    if not isinstance(value, str):
        raise EvalError(f"{value!r} is not a string")
    return value


def _lookup(a: Mapping[str, Value], name: str) -> Value:
    try:
        return a[name]
    except KeyError:
        raise EvalError(f"Variable {name} is unbound") from None


def eval_expr(
    e: Expr, a: Mapping[str, Value], nodes: Mapping[str, int], g: Graph
) -> Value:
    """
    Evaluate an expression under an assignment. `nodes` maps LHS node keys
    to host handles for indeg/outdeg.
    """
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, StrLit):
        return e.value
    if isinstance(e, Var):
        return _lookup(a, e.name)
    if isinstance(e, Neg):
        return wrap32(-_as_int(eval_expr(e.operand, a, nodes, g)))
    if isinstance(e, BinOp):
        left = eval_expr(e.left, a, nodes, g)
        right = eval_expr(e.right, a, nodes, g)
        if e.op == ".":
            return _as_str(left) + _as_str(right)
        x, y = _as_int(left), _as_int(right)
        if e.op == "+":
            return wrap32(x + y)
        if e.op == "-":
            return wrap32(x - y)
        if e.op == "*":
            return wrap32(x * y)
        if y == 0:
            raise EvalError("Division by zero")
        q = abs(x) // abs(y)
        return wrap32(-q if (x < 0) != (y < 0) else q)
    if isinstance(e, Degree):
        node = g.node(nodes[e.node])
        return node.indegree if e.kind == "indeg" else node.outdegree
    if isinstance(e, Length):
        value = _lookup(a, e.name)
        if isinstance(value, int):
            return 1
        return len(value)
    if isinstance(e, ListExpr):
        result: Tuple[Atom, ...] = ()
        for item in e.items:
            result += _as_list(eval_expr(item, a, nodes, g))
        return result
    raise EvalError(f"Unknown expression {e!r}")


def eval_label(
    label: PatternLabel, a: Mapping[str, Value], nodes: Mapping[str, int], g: Graph
) -> HostLabel:
    return _as_list(eval_expr(ListExpr(label.items), a, nodes, g))


def value_has_type(value: Value, type_name: str) -> bool:
    if type_name == LIST:
        return isinstance(value, tuple)
    if isinstance(value, tuple):
        return False
    if type_name == INT:
        return isinstance(value, int)
    if type_name == STRING:
        return isinstance(value, str)
    if type_name == CHAR:
        return isinstance(value, str) and len(value) == 1
    return True


_RELATIONS = {
    "<": lambda x, y: x < y,
    "<=": lambda x, y: x <= y,
    ">": lambda x, y: x > y,
    ">=": lambda x, y: x >= y,
}


def eval_cond(
    c: Cond,
    a: Mapping[str, Value],
    nodes: Mapping[str, int],
    g: Graph,
    var_types: Optional[Mapping[str, str]] = None,
) -> bool:
    """Short-circuit, left to right"""
    if isinstance(c, Not):
        return not eval_cond(c.operand, a, nodes, g, var_types)
    if isinstance(c, And):
        return eval_cond(c.left, a, nodes, g, var_types) and eval_cond(
            c.right, a, nodes, g, var_types
        )
    if isinstance(c, Or):
        return eval_cond(c.left, a, nodes, g, var_types) or eval_cond(
            c.right, a, nodes, g, var_types
        )
    if isinstance(c, Compare):
        left = eval_expr(c.left, a, nodes, g)
        right = eval_expr(c.right, a, nodes, g)
        if c.op == "=":
            return _as_list(left) == _as_list(right)
        if c.op == "!=":
            return _as_list(left) != _as_list(right)
        return _RELATIONS[c.op](_as_int(left), _as_int(right))
    if isinstance(c, TypePred):
        value = _lookup(a, c.name)
        if c.type_name == LIST:
            return True
        if isinstance(value, tuple):
            if len(value) != 1:
                return False
            value = value[0]
        return value_has_type(value, c.type_name)
    if isinstance(c, EdgePred):
        source, target = nodes[c.source], nodes[c.target]
        for e in g.out_edges(source):
            edge = g.edge(e)
            if edge.target != target:
                continue
            if c.label is None:
                return True
            if c.label.mark not in (Mark.ANY, edge.mark):
                continue
            if label_match(c.label.items, edge.label, a, var_types or {}) is not None:
                return True
        return False
    raise EvalError(f"Unknown condition {c!r}")


def _bind(item: Expr, host: Value, a: Assignment, var_types: Mapping[str, str]) -> bool:
    if isinstance(item, IntLit) or isinstance(item, StrLit):
        return type(host) is type(item.value) and host == item.value
    if isinstance(item, Var):
        if item.name in a:
            return _as_list(a[item.name]) == _as_list(host)
        if not value_has_type(host, var_types.get(item.name, ATOM)):
            return False
        a[item.name] = host
        return True
    return False


def label_match(
    items: Tuple[Expr, ...],
    host_label: HostLabel,
    assignment: Mapping[str, Value],
    var_types: Mapping[str, str],
) -> Optional[Assignment]:
    """
    Unify a simple pattern label with a host label. Atoms before the list
    variable match the host prefix, atoms after it the suffix, and the list
    variable takes whatever remains. Returns the extended assignment or None.
    """
    split = None
    for i, item in enumerate(items):
        if isinstance(item, Var) and var_types.get(item.name) == LIST:
            split = i
            break
    if split is None:
        if len(items) != len(host_label):
            return None
        prefix, middle, suffix = items, None, ()
    else:
        prefix, middle, suffix = items[:split], items[split], items[split + 1:]
        if len(prefix) + len(suffix) > len(host_label):
            return None

    extended = dict(assignment)
    for item, atom in zip(prefix, host_label):
        if not _bind(item, atom, extended, var_types):
            return None
    if suffix:
        for item, atom in zip(suffix, host_label[len(host_label) - len(suffix):]):
            if not _bind(item, atom, extended, var_types):
                return None
    if middle is not None:
        rest = host_label[len(prefix): len(host_label) - len(suffix)]
        if not _bind(middle, rest, extended, var_types):
            return None
    return extended


def instantiate_rhs(
    r: Rule, a: Mapping[str, Value], nodes: Mapping[str, int], g: Graph
) -> RhsInstance:
    """
    Evaluate every RHS label before the graph changes. An `any` mark on an
    interface node keeps the mark of its host image.
    """
    node_values = []
    for node in r.rhs.nodes:
        label = eval_label(node.label, a, nodes, g)
        mark = node.label.mark
        if mark is Mark.ANY:
            mark = g.node(nodes[node.key]).mark
        node_values.append((label, mark))
    edge_values = []
    for edge in r.rhs.edges:
        edge_values.append((eval_label(edge.label, a, nodes, g), edge.label.mark))
    return RhsInstance(node_values, edge_values)


# Fast rules


@dataclass
class FastRuleReport:
    failed_clauses: List[int] = field(default_factory=list)
    problems: List[str] = field(default_factory=list)

    @property
    def fast(self) -> bool:
        return not self.failed_clauses

    def fail(self, clause: int, problem: str) -> None:
        if clause not in self.failed_clauses:
            self.failed_clauses.append(clause)
        self.problems.append(problem)


def unreachable_from_roots(pattern: PatternGraph) -> List[str]:
    """Keys of pattern nodes no root reaches along edges of either direction"""
    neighbours: Dict[str, List[str]] = {key: [] for key in pattern.keys()}
    for edge in pattern.edges:
        neighbours[edge.source].append(edge.target)
        neighbours[edge.target].append(edge.source)
    seen = {node.key for node in pattern.nodes if node.root}
    queue = deque(seen)
    while queue:
        key = queue.popleft()
        for other in neighbours[key]:
            if other not in seen:
                seen.add(other)
                queue.append(other)
    return [key for key in pattern.keys() if key not in seen]


def _side_occurrences(pattern: PatternGraph) -> Counter:
    counts: Counter = Counter()
    for item in pattern.nodes + pattern.edges:
        counts.update(label_variables(item.label))
    return counts


def check_fast_rule(r: Rule) -> FastRuleReport:
    report = FastRuleReport()

    for key in unreachable_from_roots(r.lhs):
        report.fail(1, f"Node {key} of {r.name} is not reachable from a root")

    for side, pattern in (("left", r.lhs), ("right", r.rhs)):
        for name, count in _side_occurrences(pattern).items():
            if count > 1 and r.var_types.get(name) in NON_CONSTANT_TYPES:
                report.fail(
                    2, f"Variable {name} occurs {count} times in the {side} side"
                )

    def constrained(e: Expr) -> bool:
        return any(r.var_types.get(v) in NON_CONSTANT_TYPES for v in expr_variables(e))

    if r.condition is not None:
        for part in cond_parts(r.condition):
            if isinstance(part, EdgePred):
                report.fail(3, f"Condition of {r.name} uses the edge predicate")
            elif (
                isinstance(part, Compare)
                and part.op in ("=", "!=")
                and constrained(part.left)
                and constrained(part.right)
            ):
                report.fail(3, f"Condition of {r.name} compares two list-like values")
    return report
