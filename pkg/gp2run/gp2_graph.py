# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import enum

from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .gp2_storage import (
    CHAIN_ENTRY_SIZE,
    EDGE_RECORD_SIZE,
    NIL,
    NODE_RECORD_SIZE,
    BigArray,
    Chain,
)

Atom = Union[int, str]
HostLabel = Tuple[Atom, ...]

EMPTY_LABEL: HostLabel = ()

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1
MAX_EXTERNAL_ID = 2**63 - 1

# Node flag bits, packed into one byte
ROOT = 0x01
IN_GRAPH = 0x02
NODE_IN_CHANGE_STACK = 0x04
NODE_MATCHED = 0x08

# Edge flag bits
IN_SRC_CHAIN = 0x01
IN_TGT_CHAIN = 0x02
EDGE_IN_CHANGE_STACK = 0x04
EDGE_MATCHED = 0x08


class GraphError(ValueError):
    pass


class Mark(enum.IntEnum):
    NONE = 0
    RED = 1
    GREEN = 2
    BLUE = 3
    GREY = 4
    DASHED = 5
    ANY = 6


NODE_MARKS = frozenset({Mark.NONE, Mark.RED, Mark.GREEN, Mark.BLUE, Mark.GREY})
EDGE_MARKS = frozenset({Mark.NONE, Mark.RED, Mark.GREEN, Mark.BLUE, Mark.DASHED})


class Backend(enum.Enum):
    CHAIN = "chain"
    INDEX_SCAN = "index_scan"


class LabelPool:
    """
    Interns host labels so identical lists share one tuple. With counting
    enabled, a label is dropped from the pool once its last holder lets go.
    """

    def __init__(self, counting: bool = True):
        self.counting = counting
        self._labels: Dict[HostLabel, List] = {}

    def __len__(self) -> int:
        return len(self._labels)

    def acquire(self, label: HostLabel) -> HostLabel:
        entry = self._labels.get(label)
        if entry is None:
            entry = [label, 0]
            self._labels[label] = entry
        if self.counting:
            entry[1] += 1
        return entry[0]

    def release(self, label: HostLabel) -> None:
        if not self.counting:
            return
        entry = self._labels.get(label)
        if entry is None:
            return
        entry[1] -= 1
        if entry[1] <= 0:
            del self._labels[label]

    def refcount(self, label: HostLabel) -> int:
        entry = self._labels.get(label)
        return 0 if entry is None else entry[1]


class Node:
    __slots__ = (
        "index",
        "label",
        "mark",
        "flags",
        "indegree",
        "outdegree",
        "out_chain",
        "in_chain",
        "edge_entries",
        "chain_entry",
        "root_entry",
    )

    def __init__(self, index: int, label: HostLabel, mark: Mark, checked: bool):
        self.index = index
        self.label = label
        self.mark = mark
        self.flags = IN_GRAPH
        self.indegree = 0
        self.outdegree = 0
        self.out_chain = Chain()
        self.in_chain = Chain()
        self.edge_entries = BigArray(CHAIN_ENTRY_SIZE, checked)
        self.chain_entry = NIL
        self.root_entry = NIL

    @property
    def is_root(self) -> bool:
        return bool(self.flags & ROOT)

    @property
    def in_graph(self) -> bool:
        return bool(self.flags & IN_GRAPH)


class Edge:
    __slots__ = (
        "index",
        "label",
        "mark",
        "flags",
        "source",
        "target",
        "src_entry",
        "tgt_entry",
    )

    def __init__(
        self, index: int, label: HostLabel, mark: Mark, source: int, target: int
    ):
        self.index = index
        self.label = label
        self.mark = mark
        self.flags = 0
        self.source = source
        self.target = target
        self.src_entry = NIL
        self.tgt_entry = NIL

    @property
    def in_graph(self) -> bool:
        return bool(self.flags & (IN_SRC_CHAIN | IN_TGT_CHAIN))


def check_label(label: Sequence[Atom]) -> HostLabel:
    """Validate a host label and return it as a tuple"""
    problems = []
    for atom in label:
        if isinstance(atom, bool) or not isinstance(atom, (int, str)):
            problems.append(f"{atom!r} is not an integer or string atom")
        elif isinstance(atom, int) and not INT_MIN <= atom <= INT_MAX:
            problems.append(f"{atom} does not fit a signed 32-bit integer")
        elif isinstance(atom, str) and not all(" " <= c <= "~" for c in atom):
            problems.append(f"{atom!r} contains non-printable characters")
    if problems:
        raise GraphError("\n".join(problems))
    return tuple(label)


class Graph:
    """
    Host graph. Nodes, edges and live-node chain entries each live in their
    own BigArray; every node owns a BigArray of chain entries for its
    incident-edge chains. Deleted items whose slots are referenced by the
    change stack stay allocated until released.
    """

    def __init__(
        self,
        checked: bool = __debug__,
        recycle: bool = True,
        count_labels: bool = True,
    ):
        self.checked = checked
        self.recycle = recycle
        self.labels = LabelPool(count_labels)
        self.node_store = BigArray(NODE_RECORD_SIZE, checked)
        self.edge_store = BigArray(EDGE_RECORD_SIZE, checked)
        self.node_chain_entry_store = BigArray(CHAIN_ENTRY_SIZE, checked)
        self.node_chain = Chain()
        self.root_list = Chain()
        self.node_count = 0
        self.edge_count = 0
        self.iteration_steps = 0

    def __repr__(self) -> str:
        return f"Graph(nodes={self.node_count}, edges={self.edge_count})"

    # Record access

    def node(self, handle: int) -> Node:
        return self.node_store[handle]

    def edge(self, handle: int) -> Edge:
        return self.edge_store[handle]

    # Nodes

    def add_node(
        self,
        label: HostLabel = EMPTY_LABEL,
        mark: Mark = Mark.NONE,
        root: bool = False,
    ) -> int:
        if mark not in NODE_MARKS:
            raise GraphError(f"{mark.name.lower()} is not a host node mark")
        handle = self.node_store.alloc()
        node = Node(handle, self.labels.acquire(label), mark, self.checked)
        self.node_store[handle] = node
        node.chain_entry = self.node_chain.push(handle, self.node_chain_entry_store)
        if root:
            node.flags |= ROOT
            node.root_entry = self.root_list.push(handle, self.node_chain_entry_store)
        self.node_count += 1
        return handle

    def delete_node(self, handle: int) -> None:
        node = self.node_store[handle]
        if not node.flags & IN_GRAPH:
            raise GraphError(f"Node {handle} is already deleted")
        if node.indegree or node.outdegree:
            raise GraphError(f"Node {handle} still has incident edges")
        self.node_chain.unlink(node.chain_entry, self.node_chain_entry_store)
        node.chain_entry = NIL
        if node.root_entry != NIL:
            self.root_list.unlink(node.root_entry, self.node_chain_entry_store)
            node.root_entry = NIL
        node.flags &= ~IN_GRAPH
        self.node_count -= 1
        if not node.flags & NODE_IN_CHANGE_STACK:
            self._free_node(node)

    def restore_node(self, handle: int) -> None:
        """Reinsert a deleted node whose slot is still held by the change stack"""
        node = self.node_store[handle]
        if node.flags & IN_GRAPH:
            raise GraphError(f"Node {handle} is already in the graph")
        node.flags |= IN_GRAPH
        node.chain_entry = self.node_chain.push(handle, self.node_chain_entry_store)
        if node.flags & ROOT:
            node.root_entry = self.root_list.push(handle, self.node_chain_entry_store)
        self.node_count += 1

    def retain_node(self, handle: int) -> None:
        if self.recycle:
            self.node_store[handle].flags |= NODE_IN_CHANGE_STACK

    def release_node(self, handle: int) -> None:
        if not self.recycle:
            return
        node = self.node_store[handle]
        node.flags &= ~NODE_IN_CHANGE_STACK
        if not node.flags & IN_GRAPH:
            self._free_node(node)

    def _free_node(self, node: Node) -> None:
        if not self.recycle:
            return
        self.labels.release(node.label)
        self.node_store.free(node.index)

    def relabel_node(self, handle: int, label: HostLabel) -> None:
        node = self.node_store[handle]
        if node.label == label:
            return
        self.labels.release(node.label)
        node.label = self.labels.acquire(label)

    def remark_node(self, handle: int, mark: Mark) -> None:
        if mark not in NODE_MARKS:
            raise GraphError(f"{mark.name.lower()} is not a host node mark")
        self.node_store[handle].mark = mark

    def set_root(self, handle: int, root: bool) -> None:
        node = self.node_store[handle]
        if bool(node.flags & ROOT) == root:
            return
        if root:
            node.flags |= ROOT
            node.root_entry = self.root_list.push(handle, self.node_chain_entry_store)
        else:
            node.flags &= ~ROOT
            self.root_list.unlink(node.root_entry, self.node_chain_entry_store)
            node.root_entry = NIL

    # Edges

    def add_edge(
        self,
        source: int,
        target: int,
        label: HostLabel = EMPTY_LABEL,
        mark: Mark = Mark.NONE,
    ) -> int:
        if mark not in EDGE_MARKS:
            raise GraphError(f"{mark.name.lower()} is not a host edge mark")
        src = self.node_store[source]
        tgt = self.node_store[target]
        if not src.flags & IN_GRAPH or not tgt.flags & IN_GRAPH:
            raise GraphError("Edge endpoints must be live nodes")
        handle = self.edge_store.alloc()
        edge = Edge(handle, self.labels.acquire(label), mark, source, target)
        self.edge_store[handle] = edge
        self._link_edge(edge, src, tgt)
        self.edge_count += 1
        return handle

    def delete_edge(self, handle: int) -> None:
        edge = self.edge_store[handle]
        if not edge.flags & (IN_SRC_CHAIN | IN_TGT_CHAIN):
            raise GraphError(f"Edge {handle} is already deleted")
        src = self.node_store[edge.source]
        tgt = self.node_store[edge.target]
        src.out_chain.unlink(edge.src_entry, src.edge_entries)
        tgt.in_chain.unlink(edge.tgt_entry, tgt.edge_entries)
        edge.src_entry = edge.tgt_entry = NIL
        edge.flags &= ~(IN_SRC_CHAIN | IN_TGT_CHAIN)
        src.outdegree -= 1
        tgt.indegree -= 1
        self.edge_count -= 1
        if not edge.flags & EDGE_IN_CHANGE_STACK:
            self._free_edge(edge)

    def restore_edge(self, handle: int) -> None:
        edge = self.edge_store[handle]
        if edge.flags & (IN_SRC_CHAIN | IN_TGT_CHAIN):
            raise GraphError(f"Edge {handle} is already in the graph")
        src, tgt = self.node_store[edge.source], self.node_store[edge.target]
        self._link_edge(edge, src, tgt)
        self.edge_count += 1

    def retain_edge(self, handle: int) -> None:
        if self.recycle:
            self.edge_store[handle].flags |= EDGE_IN_CHANGE_STACK

    def release_edge(self, handle: int) -> None:
        if not self.recycle:
            return
        edge = self.edge_store[handle]
        edge.flags &= ~EDGE_IN_CHANGE_STACK
        if not edge.flags & (IN_SRC_CHAIN | IN_TGT_CHAIN):
            self._free_edge(edge)

    def _link_edge(self, edge: Edge, src: Node, tgt: Node) -> None:
        edge.src_entry = src.out_chain.push(edge.index, src.edge_entries)
        edge.tgt_entry = tgt.in_chain.push(edge.index, tgt.edge_entries)
        edge.flags |= IN_SRC_CHAIN | IN_TGT_CHAIN
        src.outdegree += 1
        tgt.indegree += 1

    def _free_edge(self, edge: Edge) -> None:
        if not self.recycle:
            return
        self.labels.release(edge.label)
        self.edge_store.free(edge.index)

    # Iteration

    def nodes(self, backend: Backend = Backend.CHAIN) -> Iterator[int]:
        """Live node handles, via the node chain or a scan of the node store"""
        if backend is Backend.CHAIN:
            store = self.node_chain_entry_store
            entry = self.node_chain.head
            while entry != NIL:
                self.iteration_steps += 1
                record = store[entry]
                yield record.payload
                entry = record.next
        else:
            for index, slot in self.node_store.index_scan():
                self.iteration_steps += 1
                if isinstance(slot, Node) and slot.flags & IN_GRAPH:
                    yield index

    def roots(self) -> Iterator[int]:
        store = self.node_chain_entry_store
        entry = self.root_list.head
        while entry != NIL:
            self.iteration_steps += 1
            record = store[entry]
            yield record.payload
            entry = record.next

    def out_edges(self, handle: int) -> Iterator[int]:
        node = self.node_store[handle]
        return self._chain_edges(node.out_chain, node.edge_entries)

    def in_edges(self, handle: int) -> Iterator[int]:
        node = self.node_store[handle]
        return self._chain_edges(node.in_chain, node.edge_entries)

    def _chain_edges(self, chain: Chain, store: BigArray) -> Iterator[int]:
        entry = chain.head
        while entry != NIL:
            self.iteration_steps += 1
            record = store[entry]
            yield record.payload
            entry = record.next

    def edges(self) -> Iterator[int]:
        """Every live edge exactly once, via the out-chains of live nodes"""
        for node in list(self.nodes()):
            yield from list(self.out_edges(node))

    # Whole-graph helpers

    def check_invariants(self) -> List[str]:
        problems = []
        live = list(self.nodes(Backend.CHAIN))
        if len(live) != self.node_count:
            problems.append(
                f"node chain has {len(live)} nodes, count is {self.node_count}"
            )
        if set(live) != set(self.nodes(Backend.INDEX_SCAN)):
            problems.append("chain and index scan disagree on live nodes")
        flagged = {h for h in live if self.node(h).flags & ROOT}
        listed = list(self.roots())
        if len(listed) != len(set(listed)) or set(listed) != flagged:
            problems.append("root list does not match root flags")
        total_out = 0
        for h in live:
            node = self.node(h)
            outs = list(self.out_edges(h))
            ins = list(self.in_edges(h))
            if len(outs) != node.outdegree or len(ins) != node.indegree:
                problems.append(f"node {h} degree counters disagree with its chains")
            for e in outs:
                if self.edge(e).source != h:
                    problems.append(f"edge {e} is in the wrong out-chain")
            for e in ins:
                if self.edge(e).target != h:
                    problems.append(f"edge {e} is in the wrong in-chain")
            total_out += node.outdegree
        if total_out != self.edge_count:
            problems.append(
                f"edge count {self.edge_count} differs from out-degree sum {total_out}"
            )
        return problems

    def teardown(self) -> None:
        """Release every store; the graph is empty afterwards"""
        self.node_store.clear()
        self.edge_store.clear()
        self.node_chain_entry_store.clear()
        self.node_chain = Chain()
        self.root_list = Chain()
        self.labels = LabelPool(self.labels.counting)
        self.node_count = 0
        self.edge_count = 0


class IdMap:
    """Maps external integer node IDs to node handles"""

    def __init__(self):
        self._handles: Dict[int, int] = {}

    def __len__(self) -> int:
        return len(self._handles)

    def __contains__(self, external_id: int) -> bool:
        return external_id in self._handles

    def insert(self, external_id: int, handle: int) -> None:
        if not 0 <= external_id <= MAX_EXTERNAL_ID:
            raise GraphError(f"Node ID {external_id} is out of range")
        if external_id in self._handles:
            raise GraphError(f"Duplicate node ID {external_id}")
        self._handles[external_id] = handle

    def lookup(self, external_id: int) -> Optional[int]:
        return self._handles.get(external_id)


def idmap_insert(m: IdMap, external_id: int, handle: int) -> None:
    m.insert(external_id, handle)


def idmap_lookup(m: IdMap, external_id: int) -> Optional[int]:
    return m.lookup(external_id)


def _node_signature(g: Graph, h: int, match_labels: bool) -> tuple:
    node = g.node(h)
    label = node.label if match_labels else None
    return (label, node.mark, bool(node.flags & ROOT), node.indegree, node.outdegree)


def _edge_bag(g: Graph, src: int, tgt: int, match_labels: bool) -> List[tuple]:
    bag = []
    for e in g.out_edges(src):
        edge = g.edge(e)
        if edge.target == tgt:
            bag.append((edge.label if match_labels else None, edge.mark))
    return sorted(bag, key=repr)


def graphs_isomorphic(g1: Graph, g2: Graph, match_labels: bool = True) -> bool:
    """
    Backtracking isomorphism test preserving labels, marks, roots and edge
    direction. Intended for the small graphs used in tests.
    """
    if g1.node_count != g2.node_count or g1.edge_count != g2.edge_count:
        return False
    nodes1 = list(g1.nodes())
    nodes2 = list(g2.nodes())
    sig1 = {h: _node_signature(g1, h, match_labels) for h in nodes1}
    sig2 = {h: _node_signature(g2, h, match_labels) for h in nodes2}
    if sorted(map(repr, sig1.values())) != sorted(map(repr, sig2.values())):
        return False

    # Rarest signature first, then grow along edges so that every node
    # after a component's first has a mapped neighbour
    counts: Dict[tuple, int] = {}
    for sig in sig1.values():
        counts[sig] = counts.get(sig, 0) + 1
    rank = {h: i for i, h in enumerate(sorted(nodes1, key=lambda h: counts[sig1[h]]))}
    neighbours: Dict[int, set] = {h: set() for h in nodes1}
    for e in g1.edges():
        edge = g1.edge(e)
        neighbours[edge.source].add(edge.target)
        neighbours[edge.target].add(edge.source)
    order: List[int] = []
    placed = set()
    for start in sorted(nodes1, key=rank.get):
        if start in placed:
            continue
        placed.add(start)
        frontier = [start]
        while frontier:
            u = min(frontier, key=rank.get)
            frontier.remove(u)
            order.append(u)
            for w in neighbours[u] - placed:
                placed.add(w)
                frontier.append(w)
    mapping: Dict[int, int] = {}
    used = set()

    def consistent(u: int, v: int) -> bool:
        if _edge_bag(g1, u, u, match_labels) != _edge_bag(g2, v, v, match_labels):
            return False
        for a, b in mapping.items():
            if _edge_bag(g1, u, a, match_labels) != _edge_bag(g2, v, b, match_labels):
                return False
            if _edge_bag(g1, a, u, match_labels) != _edge_bag(g2, b, v, match_labels):
                return False
        return True

    def extend(depth: int) -> bool:
        if depth == len(order):
            return True
        u = order[depth]
        for v in nodes2:
            if v in used or sig2[v] != sig1[u] or not consistent(u, v):
                continue
            mapping[u] = v
            used.add(v)
            if extend(depth + 1):
                return True
            del mapping[u]
            used.discard(v)
        return False

    return extend(0)
