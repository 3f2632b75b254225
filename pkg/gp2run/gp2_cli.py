# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import argparse
import logging
import os
import pathlib
import shlex
import sys

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from . import gp2_bench
from .gp2_engine import ExecConfig, OutcomeKind, run_program, shutdown
from .gp2_graph import Backend
from .gp2_match import RootMode
from .gp2_textio import SourceError, validate

logger = logging.getLogger(__name__)

FLAGS_ENV = "GP2_FLAGS"
OUTPUT_FILE = "gp2.output"
USAGE_EXIT_CODE = 1

VALIDATE_KINDS = {
    "validate-program": "program",
    "validate-rule": "rule",
    "validate-graph": "graph",
}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class CliInvocation:
    subcommand: str
    paths: List[str] = field(default_factory=list)
    cfg: ExecConfig = field(default_factory=ExecConfig)
    outdir: Optional[str] = None
    verbose: bool = False


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gp2",
        add_help=False,
        description="Validate GP 2 sources or run a GP 2 program on a host graph.",
        usage="gp2 [-p PROGRAM | -r RULE | -h GRAPH]\n"
        "       gp2 [-f] [-g] [-n] [-q] [-m] [-o OUTDIR] [-v] PROGRAM HOST\n"
        "       gp2 bench [CONFIG]",
    )
    parser.add_argument("--help", action="help", help="show this message and exit")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("-p", dest="program_file", help="validate a program file")
    group.add_argument("-r", dest="rule_file", help="validate a file holding one rule")
    group.add_argument("-h", dest="graph_file", help="validate a host graph file")
    parser.add_argument("-f", action="store_true", help="fast shutdown")
    parser.add_argument(
        "-g", action="store_true", help="minimal garbage collection (requires -f)"
    )
    parser.add_argument(
        "-n",
        action="store_true",
        help="iterate nodes by index scan, without node lists",
    )
    parser.add_argument("-q", action="store_true", help="no search plan optimisation")
    parser.add_argument("-m", action="store_true", help="root reflecting matches")
    parser.add_argument("-o", dest="outdir", help="write the output graph into OUTDIR")
    parser.add_argument("-v", action="store_true", help="debug logging")
    parser.add_argument("args", nargs="*", help=argparse.SUPPRESS)
    return parser


def parse_args(argv: Sequence[str]) -> CliInvocation:
    parser = _build_parser()
    ns = parser.parse_args(list(argv))

    if ns.g and not ns.f:
        raise UsageError("-g requires fast shutdown to be enabled with -f")

    for dest, subcommand in (
        ("program_file", "validate-program"),
        ("rule_file", "validate-rule"),
        ("graph_file", "validate-graph"),
    ):
        path = getattr(ns, dest)
        if path is not None:
            if ns.args:
                raise UsageError("Validation takes no further arguments")
            return CliInvocation(subcommand, [path], verbose=ns.v)

    if ns.args and ns.args[0] == "bench":
        if len(ns.args) > 2:
            raise UsageError("bench takes at most one config file")
        return CliInvocation("bench", ns.args[1:], verbose=ns.v)

    if len(ns.args) != 2:
        raise UsageError("Expected a program file and a host graph file")
    cfg = ExecConfig(
        backend=Backend.INDEX_SCAN if ns.n else Backend.CHAIN,
        root_mode=RootMode.REFLECT if ns.m else RootMode.PRESERVE,
        fast_shutdown=ns.f,
        minimal_gc=ns.g,
        optimize_plans=not ns.q,
    )
    return CliInvocation("run", list(ns.args), cfg, ns.outdir, ns.v)


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


def _run(invocation: CliInvocation) -> int:
    program_path, host_path = invocation.paths
    outcome = run_program(_read(program_path), _read(host_path), invocation.cfg)
    if outcome.kind is OutcomeKind.SUCCESS:
        if invocation.outdir is not None:
            outdir = pathlib.Path(invocation.outdir)
            outdir.mkdir(parents=True, exist_ok=True)
            (outdir / OUTPUT_FILE).write_text(outcome.output + "\n")
        else:
            print(outcome.output)
    else:
        print(f"{outcome.kind.value}: {outcome.diagnostic}", file=sys.stderr)
    shutdown(outcome, invocation.cfg)
    return outcome.exit_code


def _validate(invocation: CliInvocation) -> int:
    kind = VALIDATE_KINDS[invocation.subcommand]
    try:
        validate(kind, _read(invocation.paths[0]))
    except SourceError as e:
        print(str(e), file=sys.stderr)
        return 1
    print(f"{invocation.paths[0]}: valid {kind}")
    return 0


def _bench(invocation: CliInvocation) -> int:
    config_file = invocation.paths[0] if invocation.paths else gp2_bench.CONFIG_FILE
    try:
        csv_text = gp2_bench.run_from_config(config_file)
    except ValueError as e:
        print(f"gp2: {e}", file=sys.stderr)
        return 1
    print(csv_text, end="")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    argv = shlex.split(os.environ.get(FLAGS_ENV, "")) + list(argv)

    try:
        invocation = parse_args(argv)
    except UsageError as e:
        print(_build_parser().format_usage(), end="", file=sys.stderr)
        print(f"gp2: error: {e}", file=sys.stderr)
        return USAGE_EXIT_CODE

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if invocation.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logger.debug("Invocation: %s", invocation)

    try:
        if invocation.subcommand == "run":
            return _run(invocation)
        if invocation.subcommand == "bench":
            return _bench(invocation)
        return _validate(invocation)
    except OSError as e:
        print(f"gp2: {e}", file=sys.stderr)
        return USAGE_EXIT_CODE
