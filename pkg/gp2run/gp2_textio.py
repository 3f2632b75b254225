# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import logging
import re

from typing import Dict, List, NamedTuple, Optional, Tuple

from .gp2_graph import (
    Backend,
    Graph,
    GraphError,
    HostLabel,
    IdMap,
    Mark,
    check_label,
)
from .gp2_program import (
    SKIP,
    Break,
    Call,
    Command,
    Fail,
    If,
    Loop,
    Program,
    RuleSet,
    Seq,
    SourceError,
    Try,
    check_breaks,
    inline_procedures,
)
from .gp2_rules import (
    VARIABLE_TYPES,
    And,
    BinOp,
    Compare,
    Cond,
    Degree,
    EdgePred,
    Expr,
    IntLit,
    Length,
    ListExpr,
    Neg,
    Not,
    Or,
    PatternEdge,
    PatternGraph,
    PatternLabel,
    PatternNode,
    Rule,
    RuleError,
    StrLit,
    TypePred,
    Var,
)
from .gp2_validation import validate_rule

__all__ = [
    "SourceError",
    "parse_host_graph",
    "parse_program",
    "parse_rule",
    "print_graph",
    "validate",
]

logger = logging.getLogger(__name__)

MARK_NAMES = {
    "red": Mark.RED,
    "green": Mark.GREEN,
    "blue": Mark.BLUE,
    "grey": Mark.GREY,
    "dashed": Mark.DASHED,
    "any": Mark.ANY,
}

KEYWORDS = frozenset(
    {"if", "then", "else", "try", "break", "skip", "fail", "where", "and", "or", "not"}
)

RELATIONS = ("=", "!=", "<", "<=", ">", ">=")

_TOKEN_RE = re.compile(
    r"""
    (?P<SKIP>[ \t\r\n]+|//[^\n]*|/\*.*?\*/)
    |(?P<INT>\d+)
    |(?P<STRING>"[ !\#-~]*")
    |(?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<SYMBOL>=>|!=|>=|<=|[()\[\]{}|,;:=!\#+\-*/.<>])
    """,
    re.VERBOSE | re.DOTALL,
)


class Token(NamedTuple):
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise SourceError(
                "lex", line, pos - line_start + 1, f"Unexpected character {text[pos]!r}"
            )
        kind = match.lastgroup
        value = match.group()
        if kind != "SKIP":
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = match.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # Token helpers

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != "EOF":
            self.pos += 1
        return token

    def at(self, text: str, ahead: int = 0) -> bool:
        token = self.peek(ahead)
        return token.kind in ("SYMBOL", "IDENT") and token.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"Expected '{text}'")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.peek().kind != kind:
            self.fail(f"Expected {what}")
        return self.advance()

    def fail(self, message: str, token: Optional[Token] = None) -> None:
        token = token or self.peek()
        found = token.text or "end of input"
        raise SourceError(
            "syntax", token.line, token.column, f"{message}, found '{found}'"
        )

    def semantic(self, message: str, token: Token) -> SourceError:
        return SourceError("semantic", token.line, token.column, message)

    def done(self) -> None:
        if self.peek().kind != "EOF":
            self.fail("Expected end of input")

    # Host graphs

    def host_graph(self, g: Graph, ids: IdMap) -> None:
        self.expect("[")
        while self.at("("):
            self.host_node(g, ids)
        self.expect("|")
        edge_ids = set()
        while self.at("("):
            self.host_edge(g, ids, edge_ids)
        self.expect("]")
        self.done()

    def host_node(self, g: Graph, ids: IdMap) -> None:
        self.expect("(")
        token = self.expect_kind("INT", "an integer node ID")
        root = self.root_marker("R")
        self.expect(",")
        label, mark = self.host_label()
        self.expect(")")
        node_id = int(token.text)
        if node_id in ids:
            raise self.semantic(f"Duplicate node ID {node_id}", token)
        try:
            ids.insert(node_id, g.add_node(label, mark, root))
        except GraphError as e:
            raise self.semantic(str(e), token) from None

    def host_edge(self, g: Graph, ids: IdMap, edge_ids: set) -> None:
        self.expect("(")
        token = self.expect_kind("INT", "an integer edge ID")
        if token.text in edge_ids:
            raise self.semantic(f"Duplicate edge ID {token.text}", token)
        edge_ids.add(token.text)
        self.expect(",")
        ends = []
        for _ in range(2):
            end = self.expect_kind("INT", "an integer node ID")
            handle = ids.lookup(int(end.text))
            if handle is None:
                raise self.semantic(f"Edge refers to unknown node {end.text}", end)
            ends.append(handle)
            self.expect(",")
        label, mark = self.host_label()
        self.expect(")")
        try:
            g.add_edge(ends[0], ends[1], label, mark)
        except GraphError as e:
            raise self.semantic(str(e), token) from None

    def host_label(self) -> Tuple[HostLabel, Mark]:
        start = self.peek()
        atoms = []
        if not self.accept("empty"):
            atoms.append(self.host_atom())
            while self.accept(":"):
                atoms.append(self.host_atom())
        mark = self.mark()
        if mark is Mark.ANY:
            raise self.semantic("Host graphs cannot use the any mark", start)
        try:
            return check_label(atoms), mark
        except GraphError as e:
            raise self.semantic(str(e), start) from None

    def host_atom(self):
        negative = self.accept("-")
        token = self.peek()
        if token.kind == "INT":
            self.advance()
            return -int(token.text) if negative else int(token.text)
        if token.kind == "STRING" and not negative:
            self.advance()
            return token.text[1:-1]
        self.fail("Expected an integer or string")

    def mark(self) -> Mark:
        if not self.accept("#"):
            return Mark.NONE
        token = self.expect_kind("IDENT", "a mark name")
        if token.text not in MARK_NAMES:
            raise self.semantic(f"Unknown mark {token.text}", token)
        return MARK_NAMES[token.text]

    def root_marker(self, letter: str) -> bool:
        if self.at("(") and self.at(letter, 1) and self.at(")", 2):
            self.pos += 3
            return True
        return False

    # Programs

    def program(self) -> Program:
        rules: Dict[str, Rule] = {}
        procedures: Dict[str, Command] = {}
        main: Optional[Command] = None
        names: Dict[str, Token] = {}
        while self.peek().kind != "EOF":
            token = self.expect_kind("IDENT", "a declaration")
            if token.text in KEYWORDS:
                self.fail("Expected a declaration name", token)
            if token.text in names:
                raise self.semantic(f"{token.text} is declared twice", token)
            names[token.text] = token
            if self.accept("="):
                body = self.command_sequence()
                if token.text == "Main":
                    main = body
                else:
                    procedures[token.text] = body
            elif self.at("("):
                rules[token.text] = self.rule_body(token)
            else:
                self.fail("Expected '=' or '('")
        if main is None:
            raise SourceError("semantic", 1, 1, "Program has no Main declaration")
        return Program(rules, procedures, main)

    def command_sequence(self) -> Command:
        commands = [self.command()]
        while self.accept(";"):
            commands.append(self.command())
        return commands[0] if len(commands) == 1 else Seq(tuple(commands))

    def command(self) -> Command:
        if self.accept("if"):
            condition = self.loopable()
            self.expect("then")
            then = self.loopable()
            else_ = self.loopable() if self.accept("else") else SKIP
            return If(condition, then, else_)
        if self.accept("try"):
            condition = self.loopable()
            then = self.loopable() if self.accept("then") else SKIP
            else_ = self.loopable() if self.accept("else") else SKIP
            return Try(condition, then, else_)
        return self.loopable()

    def loopable(self) -> Command:
        block = self.block()
        if self.accept("!"):
            return Loop(block)
        return block

    def block(self) -> Command:
        token = self.peek()
        if self.accept("("):
            body = self.command_sequence()
            self.expect(")")
            return body
        if self.accept("{"):
            names = [self.expect_kind("IDENT", "a rule name").text]
            while self.accept(","):
                names.append(self.expect_kind("IDENT", "a rule name").text)
            self.expect("}")
            return RuleSet(tuple(names))
        if self.accept("break"):
            return Break(token.line, token.column)
        if self.accept("skip"):
            return SKIP
        if self.accept("fail"):
            return Fail()
        if token.kind == "IDENT" and token.text not in KEYWORDS:
            self.advance()
            return Call(token.text, token.line, token.column)
        self.fail("Expected a command")

    # Rules

    def rule_body(self, name: Token) -> Rule:
        self.expect("(")
        variables = []
        if not self.at(")"):
            variables.extend(self.variable_group())
            while self.accept(";"):
                variables.extend(self.variable_group())
        self.expect(")")
        lhs = self.rule_graph()
        self.expect("=>")
        rhs = self.rule_graph()
        condition = self.condition() if self.accept("where") else None
        rule = Rule(name.text, variables, lhs, rhs, condition)
        try:
            validate_rule(rule)
        except RuleError as e:
            raise self.semantic(str(e), name) from None
        return rule

    def variable_group(self) -> List[Tuple[str, str]]:
        names = [self.expect_kind("IDENT", "a variable name").text]
        while self.accept(","):
            names.append(self.expect_kind("IDENT", "a variable name").text)
        self.expect(":")
        kind = self.expect_kind("IDENT", "a type")
        if kind.text not in VARIABLE_TYPES:
            raise self.semantic(f"Unknown type {kind.text}", kind)
        return [(name, kind.text) for name in names]

    def item_id(self, what: str) -> str:
        token = self.peek()
        if token.kind == "INT":
            self.advance()
            return str(int(token.text))
        if token.kind == "IDENT" and token.text not in KEYWORDS:
            self.advance()
            return token.text
        self.fail(f"Expected {what}")

    def rule_graph(self) -> PatternGraph:
        pattern = PatternGraph()
        self.expect("[")
        while self.at("("):
            self.advance()
            key = self.item_id("a node ID")
            root = self.root_marker("R")
            self.expect(",")
            label = self.rule_label()
            self.expect(")")
            pattern.nodes.append(PatternNode(key, label, root))
        self.expect("|")
        while self.at("("):
            self.advance()
            key = self.item_id("an edge ID")
            bidirectional = self.root_marker("B")
            self.expect(",")
            source = self.item_id("a node ID")
            self.expect(",")
            target = self.item_id("a node ID")
            self.expect(",")
            label = self.rule_label()
            self.expect(")")
            pattern.edges.append(PatternEdge(key, source, target, label, bidirectional))
        self.expect("]")
        return pattern

    def rule_label(self) -> PatternLabel:
        if self.accept("empty"):
            items: Tuple[Expr, ...] = ()
        else:
            items = self.list_items()
        return PatternLabel(items, self.mark())

    # Expressions, loosest binding first

    def list_items(self) -> Tuple[Expr, ...]:
        items = [self.concat()]
        while self.accept(":"):
            items.append(self.concat())
        return tuple(items)

    def expression(self) -> Expr:
        if self.accept("empty"):
            return ListExpr(())
        items = self.list_items()
        return items[0] if len(items) == 1 else ListExpr(items)

    def concat(self) -> Expr:
        e = self.sum()
        while self.accept("."):
            e = BinOp(".", e, self.sum())
        return e

    def sum(self) -> Expr:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.accept("-"):
            operand = self.unary()
            if isinstance(operand, IntLit):
                return IntLit(-operand.value)
            return Neg(operand)
        return self.primary()

    def primary(self) -> Expr:
        token = self.peek()
        if token.kind == "INT":
            self.advance()
            return IntLit(int(token.text))
        if token.kind == "STRING":
            self.advance()
            return StrLit(token.text[1:-1])
        degree = token.kind == "IDENT" and token.text in ("indeg", "outdeg")
        if degree and self.at("(", 1):
            self.advance()
            self.expect("(")
            node = self.item_id("a node ID")
            self.expect(")")
            return Degree(token.text, node)
        if token.kind == "IDENT" and token.text == "length" and self.at("(", 1):
            self.advance()
            self.expect("(")
            name = self.expect_kind("IDENT", "a variable").text
            self.expect(")")
            return Length(name)
        if token.kind == "IDENT" and token.text not in KEYWORDS:
            self.advance()
            return Var(token.text)
        if self.accept("("):
            e = self.concat()
            self.expect(")")
            return e
        self.fail("Expected an expression")

    # Conditions

    def condition(self) -> Cond:
        c = self.conjunction()
        while self.accept("or"):
            c = Or(c, self.conjunction())
        return c

    def conjunction(self) -> Cond:
        c = self.negation()
        while self.accept("and"):
            c = And(c, self.negation())
        return c

    def negation(self) -> Cond:
        if self.accept("not"):
            return Not(self.negation())
        return self.predicate()

    def predicate(self) -> Cond:
        token = self.peek()
        if self.at("edge") and self.at("(", 1):
            self.pos += 2
            source = self.item_id("a node ID")
            self.expect(",")
            target = self.item_id("a node ID")
            label = self.rule_label() if self.accept(",") else None
            self.expect(")")
            return EdgePred(source, target, label)
        if token.kind == "IDENT" and token.text in VARIABLE_TYPES and self.at("(", 1):
            self.pos += 2
            name = self.expect_kind("IDENT", "a variable").text
            self.expect(")")
            return TypePred(token.text, name)
        if self.at("("):
            saved = self.pos
            try:
                self.advance()
                c = self.condition()
                self.expect(")")
                return c
            except SourceError:
                self.pos = saved
        left = self.expression()
        op = self.peek()
        if op.text not in RELATIONS or op.kind != "SYMBOL":
            self.fail("Expected a comparison")
        self.advance()
        return Compare(op.text, left, self.expression())


def parse_host_graph(
    text: str, graph: Optional[Graph] = None, ids: Optional[IdMap] = None
) -> Graph:
    """
    Parse host graph text into `graph` (a fresh Graph by default). Node IDs
    are resolved through `ids`, which callers may pass in to inspect.
    """
    g = graph if graph is not None else Graph()
    parser = _Parser(text)
    parser.host_graph(g, ids if ids is not None else IdMap())
    logger.debug(
        "Parsed host graph with %d nodes, %d edges", g.node_count, g.edge_count
    )
    return g


def parse_program(text: str) -> Program:
    parser = _Parser(text)
    program = parser.program()
    check_breaks(inline_procedures(program))
    logger.debug(
        "Parsed program with %d rules, %d procedures",
        len(program.rules),
        len(program.procedures),
    )
    return program


def parse_rule(text: str) -> Rule:
    """Parse a file holding exactly one rule declaration"""
    parser = _Parser(text)
    name = parser.expect_kind("IDENT", "a rule name")
    if not parser.at("("):
        parser.fail("Expected '('")
    rule = parser.rule_body(name)
    parser.done()
    return rule


def validate(kind: str, text: str) -> None:
    if kind == "program":
        parse_program(text)
    elif kind == "rule":
        parse_rule(text)
    elif kind == "graph":
        parse_host_graph(text)
    else:
        raise ValueError(f"Unknown source kind {kind}")


def _atom_text(atom) -> str:
    if isinstance(atom, str):
        return f'"{atom}"'
    return str(atom)


def label_text(label: HostLabel, mark: Mark) -> str:
    text = ":".join(_atom_text(a) for a in label) if label else "empty"
    if mark is not Mark.NONE:
        text += f" # {mark.name.lower()}"
    return text


def print_graph(g: Graph) -> str:
    """
    Host graph text with node IDs renumbered 0..n-1. Chains are walked tail
    first, so nodes and each node's out-edges appear in insertion order and
    printing a parsed printout reproduces it exactly.
    """
    parts = ["["]
    ids = {}
    for handle in reversed(list(g.nodes(Backend.CHAIN))):
        node = g.node(handle)
        ids[handle] = len(ids)
        root = " (R)" if node.is_root else ""
        parts.append(f"({ids[handle]}{root}, {label_text(node.label, node.mark)})")
    parts.append("|")
    edge_id = 0
    for handle in ids:
        for e in reversed(list(g.out_edges(handle))):
            edge = g.edge(e)
            parts.append(
                f"({edge_id}, {ids[handle]}, {ids[edge.target]}, "
                f"{label_text(edge.label, edge.mark)})"
            )
            edge_id += 1
    parts.append("]")
    return " ".join(parts)
