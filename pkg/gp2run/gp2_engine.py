# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import enum
import logging

from dataclasses import dataclass
from typing import Any, Dict, List, NamedTuple, Optional

from .gp2_graph import Backend, Graph
from .gp2_match import Match, RootMode, SearchPlan, compile_plan, find_match
from .gp2_program import (
    Break,
    Command,
    Fail,
    If,
    Loop,
    Program,
    RuleSet,
    Seq,
    Skip,
    SourceError,
    Try,
    inline_procedures,
    rule_names,
)
from .gp2_rules import EvalError, RhsInstance, Rule, instantiate_rhs
from .gp2_textio import parse_host_graph, parse_program, print_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExecConfig:
    backend: Backend = Backend.CHAIN
    root_mode: RootMode = RootMode.PRESERVE
    fast_shutdown: bool = False
    minimal_gc: bool = False
    optimize_plans: bool = True

    def __post_init__(self):
        if self.minimal_gc and not self.fast_shutdown:
            raise ValueError("Minimal garbage collection requires fast shutdown")


def make_graph(cfg: ExecConfig, checked: bool = __debug__) -> Graph:
    return Graph(checked, recycle=not cfg.minimal_gc, count_labels=not cfg.minimal_gc)


class ChangeKind(enum.Enum):
    NODE_ADDED = "node added"
    NODE_DELETED = "node deleted"
    EDGE_ADDED = "edge added"
    EDGE_DELETED = "edge deleted"
    RELABELED = "relabeled"
    REMARKED = "remarked"
    ROOT_CHANGED = "root changed"


class ChangeEntry(NamedTuple):
    kind: ChangeKind
    handle: int
    old: Any = None


class ChangeStack:
    """
    Undo journal organised in nested frames. Entries are only kept while a
    frame is open; deleted items recorded here keep their slots until the
    entry is released.
    """

    def __init__(self, g: Graph):
        self.g = g
        self.entries: List[ChangeEntry] = []
        self.frames: List[int] = []

    @property
    def active(self) -> bool:
        return bool(self.frames)

    @property
    def depth(self) -> int:
        return len(self.frames)

    def open_frame(self) -> None:
        self.frames.append(len(self.entries))

    def record(self, kind: ChangeKind, handle: int, old: Any = None) -> None:
        if kind is ChangeKind.NODE_DELETED:
            self.g.retain_node(handle)
        elif kind is ChangeKind.EDGE_DELETED:
            self.g.retain_edge(handle)
        self.entries.append(ChangeEntry(kind, handle, old))

    def commit_frame(self) -> None:
        """Keep the frame's changes; they fold into the enclosing frame if any"""
        self.frames.pop()
        if not self.frames:
            for entry in self.entries:
                self._release(entry)
            self.entries.clear()

    def undo_frame(self) -> None:
        """Revert the frame's changes in reverse order"""
        start = self.frames.pop()
        g = self.g
        while len(self.entries) > start:
            kind, handle, old = self.entries.pop()
            if kind is ChangeKind.NODE_ADDED:
                g.delete_node(handle)
            elif kind is ChangeKind.NODE_DELETED:
                g.restore_node(handle)
                g.release_node(handle)
            elif kind is ChangeKind.EDGE_ADDED:
                g.delete_edge(handle)
            elif kind is ChangeKind.EDGE_DELETED:
                g.restore_edge(handle)
                g.release_edge(handle)
            elif kind is ChangeKind.RELABELED:
                g.relabel_node(handle, old)
            elif kind is ChangeKind.REMARKED:
                g.remark_node(handle, old)
            else:
                g.set_root(handle, old)

    def _release(self, entry: ChangeEntry) -> None:
        if entry.kind is ChangeKind.NODE_DELETED:
            self.g.release_node(entry.handle)
        elif entry.kind is ChangeKind.EDGE_DELETED:
            self.g.release_edge(entry.handle)


def undo_frame(g: Graph, stack: ChangeStack) -> None:
    if stack.g is not g:
        raise ValueError("Change stack belongs to another graph")
    stack.undo_frame()


def apply_rule(
    rule: Rule,
    m: Match,
    g: Graph,
    stack: Optional[ChangeStack] = None,
    rhs: Optional[RhsInstance] = None,
) -> Dict[str, int]:
    """
    Rewrite the matched occurrence. Returns the host handle of every RHS
    node. Right-hand labels are evaluated before anything is changed.
    """
    if rhs is None:
        rhs = instantiate_rhs(rule, m.assignment, m.nodes, g)
    journal = stack is not None and stack.active

    for edge in rule.lhs.edges:
        h = m.edges[edge.key]
        if journal:
            stack.record(ChangeKind.EDGE_DELETED, h)
        g.delete_edge(h)
    for p in rule.deleted_nodes:
        h = m.nodes[rule.lhs.nodes[p].key]
        if journal:
            stack.record(ChangeKind.NODE_DELETED, h)
        g.delete_node(h)

    images: Dict[str, int] = {}
    for i, node in enumerate(rule.rhs.nodes):
        label, mark = rhs.nodes[i]
        if node.key not in rule.interface:
            h = g.add_node(label, mark, node.root)
            if journal:
                stack.record(ChangeKind.NODE_ADDED, h)
            images[node.key] = h
            continue
        h = m.nodes[node.key]
        images[node.key] = h
        host = g.node(h)
        if host.label != label:
            if journal:
                stack.record(ChangeKind.RELABELED, h, host.label)
            g.relabel_node(h, label)
        if host.mark != mark:
            if journal:
                stack.record(ChangeKind.REMARKED, h, host.mark)
            g.remark_node(h, mark)
        lhs_root = rule.lhs.nodes[rule.lhs_index[node.key]].root
        if lhs_root != node.root and host.is_root != node.root:
            if journal:
                stack.record(ChangeKind.ROOT_CHANGED, h, host.is_root)
            g.set_root(h, node.root)

    for i, edge in enumerate(rule.rhs.edges):
        label, mark = rhs.edges[i]
        h = g.add_edge(images[edge.source], images[edge.target], label, mark)
        if journal:
            stack.record(ChangeKind.EDGE_ADDED, h)
    return images


class ExecResult(enum.Enum):
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    BROKE = "broke"


def can_fail(cmd: Command) -> bool:
    if isinstance(cmd, (RuleSet, Fail)):
        return True
    if isinstance(cmd, Seq):
        return any(can_fail(c) for c in cmd.commands)
    if isinstance(cmd, (If, Try)):
        return can_fail(cmd.then) or can_fail(cmd.else_)
    return False


def fails_cleanly(cmd: Command) -> bool:
    """True when every failure of `cmd` leaves the graph untouched"""
    if isinstance(cmd, Seq):
        first, rest = cmd.commands[0], cmd.commands[1:]
        return fails_cleanly(first) and not any(can_fail(c) for c in rest)
    if isinstance(cmd, If):
        return fails_cleanly(cmd.then) and fails_cleanly(cmd.else_)
    if isinstance(cmd, Try):
        return not can_fail(cmd.then) and fails_cleanly(cmd.else_)
    return True


class Executor:
    def __init__(self, program: Program, g: Graph, cfg: ExecConfig):
        self.body = inline_procedures(program)
        self.rules = program.rules
        self.g = g
        self.cfg = cfg
        self.stack = ChangeStack(g)
        self.plans: Dict[str, SearchPlan] = {
            name: compile_plan(program.rules[name], cfg.optimize_plans)
            for name in rule_names(self.body)
        }
        self.applications = 0
        self._clean: Dict[int, bool] = {}
        self._debug = logger.isEnabledFor(logging.DEBUG)

    def run(self) -> ExecResult:
        return self.exec(self.body)

    def needs_frame(self, cmd: Command) -> bool:
        clean = self._clean.get(id(cmd))
        if clean is None:
            clean = self._clean[id(cmd)] = fails_cleanly(cmd)
        return not clean

    def exec(self, cmd: Command) -> ExecResult:
        if isinstance(cmd, RuleSet):
            return self.call(cmd.names)
        if isinstance(cmd, Seq):
            for c in cmd.commands:
                result = self.exec(c)
                if result is not ExecResult.SUCCEEDED:
                    return result
            return ExecResult.SUCCEEDED
        if isinstance(cmd, Loop):
            return self.loop(cmd.body)
        if isinstance(cmd, If):
            self.stack.open_frame()
            result = self.exec(cmd.condition)
            self.stack.undo_frame()
            if result is ExecResult.BROKE:
                return result
            return self.exec(cmd.then if result is ExecResult.SUCCEEDED else cmd.else_)
        if isinstance(cmd, Try):
            framed = self.needs_frame(cmd.condition)
            if framed:
                self.stack.open_frame()
            result = self.exec(cmd.condition)
            if result is ExecResult.FAILED:
                if framed:
                    self.stack.undo_frame()
                return self.exec(cmd.else_)
            if framed:
                self.stack.commit_frame()
            if result is ExecResult.BROKE:
                return result
            return self.exec(cmd.then)
        if isinstance(cmd, Break):
            return ExecResult.BROKE
        if isinstance(cmd, Fail):
            return ExecResult.FAILED
        if isinstance(cmd, Skip):
            return ExecResult.SUCCEEDED
        raise TypeError(f"Unexpected command {cmd!r}")

    def loop(self, body: Command) -> ExecResult:
        framed = self.needs_frame(body)
        while True:
            if framed:
                self.stack.open_frame()
            result = self.exec(body)
            if result is ExecResult.FAILED:
                if framed:
                    self.stack.undo_frame()
                    if self._debug:
                        logger.debug("Loop body failed, rolled back one iteration")
                return ExecResult.SUCCEEDED
            if framed:
                self.stack.commit_frame()
            if result is ExecResult.BROKE:
                return ExecResult.SUCCEEDED

    def call(self, names) -> ExecResult:
        cfg = self.cfg
        for name in names:
            rule = self.rules[name]
            try:
                m = find_match(
                    self.plans[name], rule, self.g, cfg.root_mode, cfg.backend
                )
                if m is None:
                    continue
                rhs = instantiate_rhs(rule, m.assignment, m.nodes, self.g)
            except EvalError as e:
                raise EvalError(f"Rule {name}: {e}") from None
            apply_rule(rule, m, self.g, self.stack, rhs)
            self.applications += 1
            if self._debug:
                logger.debug("Applied %s", name)
            return ExecResult.SUCCEEDED
        return ExecResult.FAILED


class OutcomeKind(enum.Enum):
    SUCCESS = "success"
    FAIL = "fail"
    PROGRAM_ERROR = "program error"
    INVALID_HOST = "invalid host graph"
    VALIDATION_ERROR = "validation error"


EXIT_CODES = {
    OutcomeKind.SUCCESS: 0,
    OutcomeKind.VALIDATION_ERROR: 1,
    OutcomeKind.FAIL: 2,
    OutcomeKind.PROGRAM_ERROR: 2,
    OutcomeKind.INVALID_HOST: 2,
}


@dataclass
class Outcome:
    kind: OutcomeKind
    graph: Optional[Graph] = None
    output: Optional[str] = None
    diagnostic: str = ""
    applications: int = 0

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.kind]


def execute(program: Program, g: Graph, cfg: ExecConfig) -> Outcome:
    """Run Main on `g` in place"""
    try:
        executor = Executor(program, g, cfg)
    except SourceError as e:
        return Outcome(OutcomeKind.VALIDATION_ERROR, diagnostic=str(e))
    try:
        result = executor.run()
    except EvalError as e:
        logger.info("Program error after %d rule applications", executor.applications)
        return Outcome(
            OutcomeKind.PROGRAM_ERROR,
            g,
            diagnostic=str(e),
            applications=executor.applications,
        )
    if result is ExecResult.FAILED:
        logger.info("Program failed after %d rule applications", executor.applications)
        return Outcome(
            OutcomeKind.FAIL,
            g,
            diagnostic="Program failed",
            applications=executor.applications,
        )
    logger.info("Program succeeded after %d rule applications", executor.applications)
    return Outcome(OutcomeKind.SUCCESS, g, applications=executor.applications)


def run_program(
    program_text: str, host_text: str, cfg: Optional[ExecConfig] = None
) -> Outcome:
    """Parse, execute and print. The result graph stays alive until shutdown()."""
    cfg = cfg or ExecConfig()
    try:
        program = parse_program(program_text)
    except SourceError as e:
        return Outcome(OutcomeKind.VALIDATION_ERROR, diagnostic=str(e))
    try:
        g = parse_host_graph(host_text, make_graph(cfg))
    except SourceError as e:
        return Outcome(OutcomeKind.INVALID_HOST, diagnostic=str(e))
    outcome = execute(program, g, cfg)
    if outcome.kind is OutcomeKind.SUCCESS:
        outcome.output = print_graph(g)
    return outcome


def shutdown(outcome: Outcome, cfg: ExecConfig) -> None:
    """Tear down the result graph unless running with fast shutdown"""
    if outcome.graph is not None and not cfg.fast_shutdown:
        outcome.graph.teardown()
