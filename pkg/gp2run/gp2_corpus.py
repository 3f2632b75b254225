# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import pathlib

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Set, Tuple

from . import gp2_bench
from .gp2_engine import OutcomeKind
from .gp2_graph import Graph

CORPUS_DIR = pathlib.Path(__file__).parent / "corpus"
HOSTS_DIR = CORPUS_DIR / "hosts"

SUCCESS = OutcomeKind.SUCCESS
FAIL = OutcomeKind.FAIL


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    summary: str
    fixtures: Dict[str, OutcomeKind] = field(default_factory=dict)
    recogniser: bool = True

    @property
    def path(self) -> pathlib.Path:
        return CORPUS_DIR / f"{self.id}.gp2"

    def program_text(self) -> str:
        return self.path.read_text()


def load_host(fixture: str) -> str:
    return (HOSTS_DIR / f"{fixture}.host").read_text()


ENTRIES = [
    CorpusEntry(
        "is-discrete",
        "succeeds iff the host has no edges",
        {
            "empty": SUCCESS,
            "discrete3": SUCCESS,
            "single-edge": FAIL,
            "grid3x3": FAIL,
            "loop1": FAIL,
        },
    ),
    CorpusEntry(
        "is-bin-dag",
        "succeeds iff the host is acyclic with out-degree at most 2",
        {
            "empty": SUCCESS,
            "discrete3": SUCCESS,
            "list3": SUCCESS,
            "tree7": SUCCESS,
            "diamond": SUCCESS,
            "grid3x3": SUCCESS,
            "cycle3": FAIL,
            "loop1": FAIL,
        },
    ),
    CorpusEntry(
        "is-tree",
        "succeeds iff the host is a non-empty directed out-tree",
        {
            "tree7": SUCCESS,
            "list3": SUCCESS,
            "single-edge": SUCCESS,
            "empty": FAIL,
            "discrete3": FAIL,
            "diamond": FAIL,
            "grid3x3": FAIL,
            "cycle3": FAIL,
            "loop1": FAIL,
        },
    ),
    CorpusEntry(
        "is-series-par",
        "succeeds iff series and parallel reduction leave a single edge",
        {
            "single-edge": SUCCESS,
            "list3": SUCCESS,
            "diamond": SUCCESS,
            "empty": FAIL,
            "discrete3": FAIL,
            "cycle3": FAIL,
            "grid3x3": FAIL,
            "loop1": FAIL,
        },
    ),
    CorpusEntry(
        "gen-discrete",
        "n isolated nodes from a root labelled n",
        {"seed1": SUCCESS, "seed2": SUCCESS, "seed4": SUCCESS},
        recogniser=False,
    ),
    CorpusEntry(
        "gen-tree",
        "full binary tree of depth n from a root labelled n",
        {"seed1": SUCCESS, "seed2": SUCCESS, "seed4": SUCCESS},
        recogniser=False,
    ),
    CorpusEntry(
        "gen-star",
        "star with n nodes from a root labelled n",
        {"seed1": SUCCESS, "seed2": SUCCESS, "seed4": SUCCESS},
        recogniser=False,
    ),
    CorpusEntry(
        "gen-sierpinski",
        "Sierpinski triangle of level m + 1 from a root labelled m",
        {"seed1": SUCCESS, "seed2": SUCCESS},
        recogniser=False,
    ),
    CorpusEntry(
        "is-con",
        "succeeds iff the host is weakly connected",
        {
            "empty": SUCCESS,
            "single-edge": SUCCESS,
            "cycle3": SUCCESS,
            "grid3x3": SUCCESS,
            "loop1": SUCCESS,
            "discrete3": FAIL,
            "two-edges": FAIL,
        },
    ),
    CorpusEntry(
        "trans-closure",
        "adds an edge between every reachable pair of distinct nodes",
        {"list3": SUCCESS, "cycle3": SUCCESS, "diamond": SUCCESS, "empty": SUCCESS},
        recogniser=False,
    ),
]

CORPUS = {entry.id: entry for entry in ENTRIES}


def load_program(program_id: str) -> str:
    if program_id not in CORPUS:
        raise ValueError(f"Unknown corpus program {program_id}")
    return CORPUS[program_id].program_text()


# Oracles work on a plain (node list, edge list) view of the host


Shape = Tuple[List[int], List[Tuple[int, int]]]


def _shape(g: Graph) -> Shape:
    nodes = list(g.nodes())
    edges = [(g.edge(e).source, g.edge(e).target) for e in g.edges()]
    return nodes, edges


def is_discrete(g: Graph) -> bool:
    return g.edge_count == 0


def is_binary_dag(g: Graph) -> bool:
    nodes, edges = _shape(g)
    outdegree = {n: 0 for n in nodes}
    indegree = {n: 0 for n in nodes}
    for src, tgt in edges:
        if src == tgt:
            return False
        outdegree[src] += 1
        indegree[tgt] += 1
    if any(d > 2 for d in outdegree.values()):
        return False

    # Kahn's algorithm: every node is removed iff there is no cycle
    ready = [n for n in nodes if indegree[n] == 0]
    removed = 0
    while ready:
        n = ready.pop()
        removed += 1
        for src, tgt in edges:
            if src == n:
                indegree[tgt] -= 1
                if indegree[tgt] == 0:
                    ready.append(tgt)
    return removed == len(nodes)


def _components(nodes: List[int], edges: List[Tuple[int, int]]) -> int:
    parent = {n: n for n in nodes}

    def find(n: int) -> int:
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    count = len(nodes)
    for src, tgt in edges:
        a, b = find(src), find(tgt)
        if a != b:
            parent[a] = b
            count -= 1
    return count


def is_connected(g: Graph) -> bool:
    nodes, edges = _shape(g)
    return _components(nodes, edges) <= 1


def is_out_tree(g: Graph) -> bool:
    nodes, edges = _shape(g)
    if not nodes or len(edges) != len(nodes) - 1:
        return False
    indegree: Dict[int, int] = {}
    for _, tgt in edges:
        indegree[tgt] = indegree.get(tgt, 0) + 1
        if indegree[tgt] > 1:
            return False
    return _components(nodes, edges) == 1


def is_series_parallel(g: Graph) -> bool:
    """Reduce a copy with the parallel and series rules until neither applies"""
    nodes: Set[int] = set(g.nodes())
    edges = [(g.edge(e).source, g.edge(e).target) for e in g.edges()]
    changed = True
    while changed:
        changed = False
        seen = set()
        for i, (src, tgt) in enumerate(edges):
            if src != tgt and (src, tgt) in seen:
                del edges[i]
                changed = True
                break
            seen.add((src, tgt))
        if changed:
            continue
        for v in nodes:
            incident = [e for e in edges if v in e]
            if len(incident) != 2:
                continue
            ins = [e for e in incident if e[1] == v]
            outs = [e for e in incident if e[0] == v]
            if len(ins) != 1 or len(outs) != 1:
                continue
            u, w = ins[0][0], outs[0][1]
            if len({u, v, w}) != 3:
                continue
            edges.remove(ins[0])
            edges.remove(outs[0])
            edges.append((u, w))
            nodes.discard(v)
            changed = True
            break
    return len(nodes) == 2 and len(edges) == 1 and edges[0][0] != edges[0][1]


def closure_pairs(g: Graph) -> List[Tuple[int, int]]:
    """Pairs of distinct nodes that are connected by a path but not by an edge"""
    nodes, edges = _shape(g)
    reach = {n: set() for n in nodes}
    for src, tgt in edges:
        reach[src].add(tgt)
    for k in nodes:
        for i in nodes:
            if k in reach[i]:
                reach[i] |= reach[k]
    adjacent = set(edges)
    return [
        (i, j)
        for i in nodes
        for j in sorted(reach[i])
        if i != j and (i, j) not in adjacent
    ]


def transitive_closure(g: Graph) -> Graph:
    """A copy of `g` extended by one empty-labelled edge per closure pair"""
    closed = Graph()
    images = {}
    for h in g.nodes():
        node = g.node(h)
        images[h] = closed.add_node(node.label, node.mark, node.is_root)
    for e in g.edges():
        edge = g.edge(e)
        closed.add_edge(images[edge.source], images[edge.target], edge.label, edge.mark)
    for src, tgt in closure_pairs(g):
        closed.add_edge(images[src], images[tgt])
    return closed


RECOGNISERS: Dict[str, Callable[[Graph], bool]] = {
    "is-discrete": is_discrete,
    "is-bin-dag": is_binary_dag,
    "is-tree": is_out_tree,
    "is-series-par": is_series_parallel,
    "is-con": is_connected,
}

GENERATED_CLASSES = {
    "gen-discrete": ("discrete", 0),
    "gen-tree": ("full_binary_tree", 0),
    "gen-star": ("star", 0),
    "gen-sierpinski": ("sierpinski", 1),
}


def _seed_value(host: Graph) -> int:
    roots = list(host.roots())
    if host.node_count != 1 or len(roots) != 1:
        raise ValueError("Generator hosts must be a single root node")
    label = host.node(roots[0]).label
    if len(label) != 1 or not isinstance(label[0], int):
        raise ValueError("Generator seed must be labelled with one integer")
    return label[0]


def oracle_check(entry: CorpusEntry, host: Graph) -> OutcomeKind:
    """Outcome the program must produce on `host`, decided without the engine"""
    if entry.id in RECOGNISERS:
        return SUCCESS if RECOGNISERS[entry.id](host) else FAIL
    if entry.id in GENERATED_CLASSES:
        _seed_value(host)
        return SUCCESS
    if entry.id == "trans-closure":
        return SUCCESS
    raise ValueError(f"No oracle for {entry.id}")


def oracle_graph(entry: CorpusEntry, host: Graph) -> Optional[Graph]:
    """
    Expected result graph for programs that transform their host. Generator
    results carry counters in their labels, so compare those with labels
    ignored.
    """
    if entry.id in GENERATED_CLASSES:
        kind, offset = GENERATED_CLASSES[entry.id]
        spec = gp2_bench.GeneratorSpec(kind, (_seed_value(host) + offset,))
        return gp2_bench.generate(spec)
    if entry.id == "trans-closure":
        return transitive_closure(host)
    return None
