# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

from dataclasses import dataclass, field
from typing import Dict, Tuple, Union

from .gp2_rules import Rule


class SourceError(ValueError):
    """A lexical, syntactic or semantic problem in program or graph text"""

    def __init__(self, kind: str, line: int, column: int, message: str):
        super().__init__(f"{kind} error at line {line}, column {column}: {message}")
        self.kind = kind
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class RuleSet:
    names: Tuple[str, ...]


@dataclass(frozen=True)
class Call:
    name: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Seq:
    commands: Tuple["Command", ...]


@dataclass(frozen=True)
class If:
    condition: "Command"
    then: "Command"
    else_: "Command"


@dataclass(frozen=True)
class Try:
    condition: "Command"
    then: "Command"
    else_: "Command"


@dataclass(frozen=True)
class Loop:
    body: "Command"


@dataclass(frozen=True)
class Break:
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Fail:
    pass


Command = Union[RuleSet, Call, Seq, If, Try, Loop, Break, Skip, Fail]

SKIP = Skip()


@dataclass
class Program:
    rules: Dict[str, Rule]
    procedures: Dict[str, Command]
    main: Command


def inline_procedures(program: Program) -> Command:
    """
    Replace every procedure call in Main by the procedure body. Calls to
    rules become single-rule rule sets. Every procedure is checked for
    recursion and unknown names, whether Main reaches it or not.
    """

    def expand(cmd: Command, active: Tuple[str, ...]) -> Command:
        if isinstance(cmd, Call):
            if cmd.name in program.procedures:
                if cmd.name in active:
                    raise SourceError(
                        "semantic",
                        cmd.line,
                        cmd.column,
                        f"Procedure {cmd.name} is recursive",
                    )
                return expand(program.procedures[cmd.name], active + (cmd.name,))
            if cmd.name in program.rules:
                return RuleSet((cmd.name,))
            raise SourceError(
                "semantic",
                cmd.line,
                cmd.column,
                f"Unknown rule or procedure {cmd.name}",
            )
        if isinstance(cmd, RuleSet):
            for name in cmd.names:
                if name not in program.rules:
                    raise SourceError(
                        "semantic", 0, 0, f"Unknown rule {name} in rule set"
                    )
            return cmd
        if isinstance(cmd, Seq):
            return Seq(tuple(expand(c, active) for c in cmd.commands))
        if isinstance(cmd, If):
            return If(
                expand(cmd.condition, active),
                expand(cmd.then, active),
                expand(cmd.else_, active),
            )
        if isinstance(cmd, Try):
            return Try(
                expand(cmd.condition, active),
                expand(cmd.then, active),
                expand(cmd.else_, active),
            )
        if isinstance(cmd, Loop):
            return Loop(expand(cmd.body, active))
        return cmd

    for name, body in program.procedures.items():
        expand(body, (name,))
    return expand(program.main, ())


def check_breaks(cmd: Command, in_loop: bool = False) -> None:
    if isinstance(cmd, Break):
        if not in_loop:
            raise SourceError(
                "semantic", cmd.line, cmd.column, "break outside of a loop"
            )
    elif isinstance(cmd, Seq):
        for c in cmd.commands:
            check_breaks(c, in_loop)
    elif isinstance(cmd, (If, Try)):
        check_breaks(cmd.condition, in_loop)
        check_breaks(cmd.then, in_loop)
        check_breaks(cmd.else_, in_loop)
    elif isinstance(cmd, Loop):
        check_breaks(cmd.body, True)


def rule_names(cmd: Command) -> Tuple[str, ...]:
    """Rules an inlined command can call, in order of first appearance"""
    seen: Dict[str, None] = {}

    def walk(c: Command) -> None:
        if isinstance(c, RuleSet):
            for name in c.names:
                seen.setdefault(name)
        elif isinstance(c, Seq):
            for sub in c.commands:
                walk(sub)
        elif isinstance(c, (If, Try)):
            walk(c.condition)
            walk(c.then)
            walk(c.else_)
        elif isinstance(c, Loop):
            walk(c.body)

    walk(cmd)
    return tuple(seen)
