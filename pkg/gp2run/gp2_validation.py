# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

from typing import List, Mapping, Optional

from .gp2_graph import EDGE_MARKS, INT_MAX, INT_MIN, NODE_MARKS, Mark
from .gp2_rules import (
    CHAR,
    INT,
    LIST,
    STRING,
    BinOp,
    Compare,
    Degree,
    EdgePred,
    Expr,
    IntLit,
    Length,
    ListExpr,
    Neg,
    PatternGraph,
    PatternLabel,
    Rule,
    RuleError,
    StrLit,
    TypePred,
    Var,
    cond_parts,
    cond_node_refs,
    cond_variables,
    expr_node_refs,
    label_variables,
)


def infer_type(
    e: Expr, var_types: Mapping[str, str], problems: List[str]
) -> Optional[str]:
    """Type of an expression, or None after recording why it has none"""
    if isinstance(e, IntLit):
        if not INT_MIN <= e.value <= INT_MAX:
            problems.append(f"Integer {e.value} does not fit a signed 32-bit integer")
        return INT
    if isinstance(e, StrLit):
        return STRING
    if isinstance(e, Var):
        if e.name not in var_types:
            problems.append(f"Variable {e.name} is not declared")
            return None
        return var_types[e.name]
    if isinstance(e, Neg):
        if infer_type(e.operand, var_types, problems) not in (INT, None):
            problems.append("Unary minus needs an integer operand")
            return None
        return INT
    if isinstance(e, BinOp):
        left = infer_type(e.left, var_types, problems)
        right = infer_type(e.right, var_types, problems)
        if e.op == ".":
            if left not in (STRING, CHAR, None) or right not in (STRING, CHAR, None):
                problems.append("'.' needs string operands")
                return None
            return STRING
        if left not in (INT, None) or right not in (INT, None):
            problems.append(f"'{e.op}' needs integer operands")
            return None
        return INT
    if isinstance(e, Degree):
        return INT
    if isinstance(e, Length):
        kind = var_types.get(e.name)
        if kind is None:
            problems.append(f"Variable {e.name} is not declared")
        elif kind == INT:
            problems.append(
                f"length needs a list, atom or string variable, not {e.name}"
            )
        return INT
    if isinstance(e, ListExpr):
        types = [infer_type(item, var_types, problems) for item in e.items]
        if len(types) == 1:
            return types[0]
        return LIST
    problems.append(f"Unknown expression {e!r}")
    return None


def _is_simple(item: Expr) -> bool:
    return isinstance(item, (IntLit, StrLit, Var))


def _check_label(
    label: PatternLabel, where: str, var_types: Mapping[str, str], problems: List[str]
) -> None:
    lists = [v for v in label_variables(label) if var_types.get(v) == LIST]
    if len(lists) > 1:
        problems.append(f"Label of {where} has more than one list variable")
    for item in label.items:
        infer_type(item, var_types, problems)


def _check_side(
    pattern: PatternGraph, side: str, var_types: Mapping[str, str], problems: List[str]
) -> None:
    keys = set()
    for node in pattern.nodes:
        if node.key in keys:
            problems.append(f"Node {node.key} appears twice in the {side} side")
        keys.add(node.key)
        if node.label.mark not in NODE_MARKS and node.label.mark is not Mark.ANY:
            mark = node.label.mark.name.lower()
            problems.append(f"Node {node.key} cannot be marked {mark}")
        _check_label(node.label, f"node {node.key}", var_types, problems)
    edge_keys = set()
    for edge in pattern.edges:
        if edge.key in edge_keys:
            problems.append(f"Edge {edge.key} appears twice in the {side} side")
        edge_keys.add(edge.key)
        if edge.label.mark not in EDGE_MARKS and edge.label.mark is not Mark.ANY:
            mark = edge.label.mark.name.lower()
            problems.append(f"Edge {edge.key} cannot be marked {mark}")
        for end in (edge.source, edge.target):
            if end not in keys:
                problems.append(f"Edge {edge.key} refers to unknown node {end}")
        _check_label(edge.label, f"edge {edge.key}", var_types, problems)


def validate_rule(rule: Rule) -> None:
    problems = []

    declared = set()
    for name, _ in rule.variables:
        if name in declared:
            problems.append(f"Variable {name} is declared twice")
        declared.add(name)
    var_types = rule.var_types

    _check_side(rule.lhs, "left", var_types, problems)
    _check_side(rule.rhs, "right", var_types, problems)

    for item in rule.lhs.nodes + rule.lhs.edges:
        if not all(_is_simple(e) for e in item.label.items):
            problems.append(f"Left-hand label of {item.key} must be simple")

    lhs_vars = set()
    for item in rule.lhs.nodes + rule.lhs.edges:
        lhs_vars.update(label_variables(item.label))
    rhs_vars = set()
    for item in rule.rhs.nodes + rule.rhs.edges:
        rhs_vars.update(label_variables(item.label))
    cond_vars = set()
    if rule.condition is not None:
        cond_vars.update(cond_variables(rule.condition))
    for name in sorted((rhs_vars | cond_vars) - lhs_vars):
        problems.append(f"Variable {name} is not bound by the left-hand side")

    lhs_keys = set(rule.lhs.keys())
    refs = set()
    for item in rule.rhs.nodes + rule.rhs.edges:
        for e in item.label.items:
            refs.update(expr_node_refs(e))
    if rule.condition is not None:
        refs.update(cond_node_refs(rule.condition))
    for key in sorted(refs - lhs_keys):
        problems.append(f"Node {key} is not a left-hand node")

    for node in rule.rhs.nodes:
        if node.label.mark is Mark.ANY and node.key not in rule.interface:
            problems.append(f"Created node {node.key} cannot be marked any")
    for edge in rule.rhs.edges:
        if edge.label.mark is Mark.ANY:
            problems.append(f"Created edge {edge.key} cannot be marked any")
        if edge.bidirectional:
            problems.append(f"Created edge {edge.key} cannot be bidirectional")

    if rule.condition is not None:
        for part in cond_parts(rule.condition):
            if isinstance(part, Compare):
                left = infer_type(part.left, var_types, problems)
                right = infer_type(part.right, var_types, problems)
                ordered = part.op not in ("=", "!=")
                if ordered and (left not in (INT, None) or right not in (INT, None)):
                    problems.append(f"'{part.op}' needs integer operands")
            elif isinstance(part, TypePred):
                if part.name not in var_types:
                    problems.append(f"Variable {part.name} is not declared")
            elif isinstance(part, EdgePred) and part.label is not None:
                _check_label(part.label, "edge predicate", var_types, problems)

    if problems:
        problem_string = "\n".join(f"{rule.name}: {p}" for p in problems)
        raise RuleError(problem_string)
