# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import enum
import itertools

from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .gp2_graph import EDGE_MATCHED, NODE_MATCHED, ROOT, Backend, Edge, Graph, Mark
from .gp2_rules import Assignment, PatternGraph, Rule, eval_cond, label_match
from .gp2_storage import NIL


class RootMode(enum.Enum):
    PRESERVE = "preserve"
    REFLECT = "reflect"


@dataclass(frozen=True)
class MatchRoot:
    node: int


@dataclass(frozen=True)
class MatchNode:
    node: int


@dataclass(frozen=True)
class ExtendOut:
    source: int
    edge: int
    target: int


@dataclass(frozen=True)
class ExtendIn:
    target: int
    edge: int
    source: int


@dataclass(frozen=True)
class ExtendLoop:
    node: int
    edge: int


@dataclass(frozen=True)
class ExtendBidirectional:
    start: int
    edge: int
    other: int


PlanStep = Union[
    MatchRoot, MatchNode, ExtendOut, ExtendIn, ExtendLoop, ExtendBidirectional
]
SearchPlan = List[PlanStep]


@dataclass
class Match:
    nodes: Dict[str, int]
    edges: Dict[str, int]
    assignment: Assignment


def _edge_step(pattern: PatternGraph, e: int, start: int) -> PlanStep:
    edge = pattern.edges[e]
    index = pattern.index()
    source, target = index[edge.source], index[edge.target]
    if source == target:
        return ExtendLoop(source, e)
    other = target if start == source else source
    if edge.bidirectional:
        return ExtendBidirectional(start, e, other)
    if start == source:
        return ExtendOut(source, e, target)
    return ExtendIn(target, e, source)


def compile_plan(rule: Rule, optimize: bool = True) -> SearchPlan:
    """
    Order the LHS into plan steps. Optimised plans start at the roots and
    grow breadth-first along incident edges; anything unreachable from a
    root is found by a global node search. Unoptimised plans take nodes and
    then edges in textual order.
    """
    pattern = rule.lhs
    index = pattern.index()
    plan: SearchPlan = []

    if not optimize:
        plan.extend(MatchNode(i) for i in range(len(pattern.nodes)))
        for e, edge in enumerate(pattern.edges):
            plan.append(_edge_step(pattern, e, index[edge.source]))
        return plan

    incident: List[List[int]] = [[] for _ in pattern.nodes]
    for e, edge in enumerate(pattern.edges):
        incident[index[edge.source]].append(e)
        if edge.target != edge.source:
            incident[index[edge.target]].append(e)

    placed = set()
    used_edges = set()

    def expand(start: int) -> None:
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for e in incident[node]:
                if e in used_edges:
                    continue
                used_edges.add(e)
                step = _edge_step(pattern, e, node)
                plan.append(step)
                edge = pattern.edges[e]
                for end in (index[edge.source], index[edge.target]):
                    if end not in placed:
                        placed.add(end)
                        queue.append(end)

    for i, node in enumerate(pattern.nodes):
        if node.root and i not in placed:
            placed.add(i)
            plan.append(MatchRoot(i))
            expand(i)
    for i in range(len(pattern.nodes)):
        if i not in placed:
            placed.add(i)
            plan.append(MatchNode(i))
            expand(i)
    return plan


def _step_ends(step: PlanStep) -> Tuple[int, int]:
    """(already matched node, node reached) of an extend step"""
    if isinstance(step, ExtendLoop):
        return step.node, step.node
    if isinstance(step, ExtendOut):
        return step.source, step.target
    if isinstance(step, ExtendIn):
        return step.target, step.source
    return step.start, step.other


def plan_problems(plan: SearchPlan, rule: Rule) -> List[str]:
    """Well-formedness of a plan: one producer per item, no forward references"""
    problems = []
    placed = set()
    edges = []
    for step in plan:
        if isinstance(step, (MatchRoot, MatchNode)):
            if step.node in placed:
                problems.append(f"Node {step.node} is produced twice")
            placed.add(step.node)
            continue
        start, other = _step_ends(step)
        if start not in placed:
            problems.append(f"Step {step} extends from an unmatched node")
        edges.append(step.edge)
        placed.add(other)
    if placed != set(range(len(rule.lhs.nodes))):
        problems.append("Plan does not produce every node exactly once")
    if sorted(edges) != list(range(len(rule.lhs.edges))):
        problems.append("Plan does not produce every edge exactly once")
    return problems


def _pattern_degrees(rule: Rule) -> List[int]:
    index = rule.lhs.index()
    degrees = [0] * len(rule.lhs.nodes)
    for edge in rule.lhs.edges:
        degrees[index[edge.source]] += 1
        degrees[index[edge.target]] += 1
    return degrees


class _Search:
    def __init__(
        self, plan: SearchPlan, rule: Rule, g: Graph, mode: RootMode, backend: Backend
    ):
        self.plan = plan
        self.rule = rule
        self.g = g
        self.reflect = mode is RootMode.REFLECT
        self.backend = backend
        self.pattern = rule.lhs
        self.node_image = [NIL] * len(rule.lhs.nodes)
        self.edge_image = [NIL] * len(rule.lhs.edges)
        self.degrees = _pattern_degrees(rule)
        self.deleted = frozenset(rule.deleted_nodes)

    def bind_node(self, p: int, h: int, a: Assignment) -> Optional[Assignment]:
        node = self.g.node(h)
        if node.flags & NODE_MATCHED:
            return None
        pattern_node = self.pattern.nodes[p]
        mark = pattern_node.label.mark
        if mark is not Mark.ANY and mark != node.mark:
            return None
        if pattern_node.root:
            if not node.flags & ROOT:
                return None
        elif self.reflect and node.flags & ROOT:
            return None
        if p in self.deleted and node.indegree + node.outdegree != self.degrees[p]:
            return None
        return label_match(pattern_node.label.items, node.label, a, self.rule.var_types)

    def bind_edge(self, e: int, edge: Edge, a: Assignment) -> Optional[Assignment]:
        if edge.flags & EDGE_MATCHED:
            return None
        pattern_edge = self.pattern.edges[e]
        mark = pattern_edge.label.mark
        if mark is not Mark.ANY and mark != edge.mark:
            return None
        return label_match(pattern_edge.label.items, edge.label, a, self.rule.var_types)

    def run(self) -> Optional[Match]:
        try:
            return self.step(0, {})
        finally:
            for h in self.node_image:
                if h != NIL:
                    self.g.node(h).flags &= ~NODE_MATCHED
            for e in self.edge_image:
                if e != NIL:
                    self.g.edge(e).flags &= ~EDGE_MATCHED

    def finish(self, a: Assignment) -> Optional[Match]:
        keys = self.pattern.keys()
        nodes = {keys[i]: h for i, h in enumerate(self.node_image)}
        condition = self.rule.condition
        if condition is not None and not eval_cond(
            condition, a, nodes, self.g, self.rule.var_types
        ):
            return None
        edges = {
            edge.key: self.edge_image[i] for i, edge in enumerate(self.pattern.edges)
        }
        return Match(nodes, edges, a)

    def step(self, i: int, a: Assignment) -> Optional[Match]:
        if i == len(self.plan):
            return self.finish(a)
        step = self.plan[i]
        if isinstance(step, (MatchRoot, MatchNode)):
            if isinstance(step, MatchRoot):
                candidates: Iterable[int] = self.g.roots()
            else:
                candidates = self.g.nodes(self.backend)
            return self.try_nodes(i, step.node, candidates, a)
        if isinstance(step, ExtendLoop):
            return self.try_edges(i, step.edge, step.node, step.node, "target", a)
        if isinstance(step, ExtendOut):
            return self.try_edges(i, step.edge, step.source, step.target, "target", a)
        if isinstance(step, ExtendIn):
            return self.try_edges(i, step.edge, step.target, step.source, "source", a)
        found = self.try_edges(i, step.edge, step.start, step.other, "target", a)
        if found is None:
            found = self.try_edges(i, step.edge, step.start, step.other, "source", a)
        return found

    def try_nodes(
        self, i: int, p: int, candidates: Iterable[int], a: Assignment
    ) -> Optional[Match]:
        for h in candidates:
            bound = self.bind_node(p, h, a)
            if bound is None:
                continue
            node = self.g.node(h)
            node.flags |= NODE_MATCHED
            self.node_image[p] = h
            found = self.step(i + 1, bound)
            if found is not None:
                return found
            node.flags &= ~NODE_MATCHED
            self.node_image[p] = NIL
        return None

    def try_edges(
        self, i: int, e: int, start: int, other: int, end: str, a: Assignment
    ) -> Optional[Match]:
        g = self.g
        host_start = self.node_image[start]
        edges = g.out_edges(host_start) if end == "target" else g.in_edges(host_start)
        for he in edges:
            edge = g.edge(he)
            far = edge.target if end == "target" else edge.source
            known = self.node_image[other]
            if known != NIL and far != known:
                continue
            bound = self.bind_edge(e, edge, a)
            if bound is None:
                continue
            fresh = known == NIL
            if fresh:
                bound = self.bind_node(other, far, bound)
                if bound is None:
                    continue
                g.node(far).flags |= NODE_MATCHED
                self.node_image[other] = far
            edge.flags |= EDGE_MATCHED
            self.edge_image[e] = he
            found = self.step(i + 1, bound)
            if found is not None:
                return found
            edge.flags &= ~EDGE_MATCHED
            self.edge_image[e] = NIL
            if fresh:
                g.node(far).flags &= ~NODE_MATCHED
                self.node_image[other] = NIL
        return None


def find_match(
    plan: SearchPlan,
    rule: Rule,
    g: Graph,
    mode: RootMode = RootMode.PRESERVE,
    backend: Backend = Backend.CHAIN,
) -> Optional[Match]:
    """First valid match in plan order, or None. Condition errors propagate."""
    return _Search(plan, rule, g, mode, backend).run()


def _node_compatible(rule: Rule, p: int, g: Graph, h: int, mode: RootMode) -> bool:
    pattern_node = rule.lhs.nodes[p]
    node = g.node(h)
    mark = pattern_node.label.mark
    if mark is not Mark.ANY and mark != node.mark:
        return False
    if pattern_node.root and not node.is_root:
        return False
    return not (mode is RootMode.REFLECT and not pattern_node.root and node.is_root)


def _edge_candidates(rule: Rule, e: int, g: Graph, images: Dict[str, int]) -> List[int]:
    pattern_edge = rule.lhs.edges[e]
    source, target = images[pattern_edge.source], images[pattern_edge.target]
    found = []
    for he in g.out_edges(source):
        if g.edge(he).target == target:
            found.append(he)
    if pattern_edge.bidirectional and source != target:
        for he in g.out_edges(target):
            if g.edge(he).target == source:
                found.append(he)
    mark = pattern_edge.label.mark
    return [he for he in found if mark is Mark.ANY or g.edge(he).mark == mark]


def brute_force_match(
    rule: Rule, g: Graph, mode: RootMode = RootMode.PRESERVE
) -> List[Match]:
    """Every valid match, by exhaustive enumeration of injective node maps"""
    keys = rule.lhs.keys()
    hosts = list(g.nodes())
    degrees = _pattern_degrees(rule)
    deleted = set(rule.deleted_nodes)
    results = []
    for images in itertools.permutations(hosts, len(keys)):
        if not all(_node_compatible(rule, p, g, h, mode) for p, h in enumerate(images)):
            continue
        if any(
            g.node(images[p]).indegree + g.node(images[p]).outdegree != degrees[p]
            for p in deleted
        ):
            continue
        node_map = dict(zip(keys, images))
        a: Optional[Assignment] = {}
        for p, h in enumerate(images):
            items = rule.lhs.nodes[p].label.items
            a = label_match(items, g.node(h).label, a, rule.var_types)
            if a is None:
                break
        if a is None:
            continue
        candidates = [
            _edge_candidates(rule, e, g, node_map) for e in range(len(rule.lhs.edges))
        ]
        for choice in itertools.product(*candidates):
            if len(set(choice)) != len(choice):
                continue
            full: Optional[Assignment] = a
            for e, he in enumerate(choice):
                items = rule.lhs.edges[e].label.items
                full = label_match(items, g.edge(he).label, full, rule.var_types)
                if full is None:
                    break
            if full is None:
                continue
            if rule.condition is not None and not eval_cond(
                rule.condition, full, node_map, g, rule.var_types
            ):
                continue
            edge_map = {edge.key: he for edge, he in zip(rule.lhs.edges, choice)}
            results.append(Match(dict(node_map), edge_map, full))
    return results


def audit_match(
    rule: Rule, g: Graph, m: Match, mode: RootMode = RootMode.PRESERVE
) -> List[str]:
    """Everything wrong with a claimed match; empty when it is valid"""
    problems = []
    index = rule.lhs.index()
    if len(set(m.nodes.values())) != len(m.nodes):
        problems.append("Node map is not injective")
    if len(set(m.edges.values())) != len(m.edges):
        problems.append("Edge map is not injective")
    for key, h in m.nodes.items():
        if not g.node(h).in_graph:
            problems.append(f"Node {key} maps to a deleted node")
            continue
        if not _node_compatible(rule, index[key], g, h, mode):
            problems.append(f"Node {key} has the wrong mark or root flag")
        items = rule.lhs.nodes[index[key]].label.items
        matched = label_match(items, g.node(h).label, m.assignment, rule.var_types)
        if matched != m.assignment:
            problems.append(f"Label of node {key} does not match")
    for edge in rule.lhs.edges:
        he = m.edges[edge.key]
        host = g.edge(he)
        ends = (host.source, host.target)
        wanted = (m.nodes[edge.source], m.nodes[edge.target])
        if ends != wanted and not (edge.bidirectional and ends == wanted[::-1]):
            problems.append(f"Edge {edge.key} does not commute with its endpoints")
        if edge.label.mark is not Mark.ANY and edge.label.mark != host.mark:
            problems.append(f"Edge {edge.key} has the wrong mark")
        matched = label_match(
            edge.label.items, host.label, m.assignment, rule.var_types
        )
        if matched != m.assignment:
            problems.append(f"Label of edge {edge.key} does not match")
    degrees = _pattern_degrees(rule)
    for p in rule.deleted_nodes:
        node = g.node(m.nodes[rule.lhs.nodes[p].key])
        if node.indegree + node.outdegree != degrees[p]:
            key = rule.lhs.nodes[p].key
            problems.append(f"Deleting node {key} would leave dangling edges")
    if rule.condition is not None and not eval_cond(
        rule.condition, m.assignment, m.nodes, g, rule.var_types
    ):
        problems.append("Condition does not hold")
    return problems
