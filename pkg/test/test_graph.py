# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import random
import unittest

from gp2run import gp2_graph
from gp2run.gp2_graph import Backend, Graph, GraphError, IdMap, Mark


def chain_and_scan(g):
    return set(g.nodes(Backend.CHAIN)), set(g.nodes(Backend.INDEX_SCAN))


def random_mutations(g, rng, steps):
    """Apply a random mix of node and edge mutations to `g`"""
    for _ in range(steps):
        nodes = list(g.nodes())
        edges = list(g.edges())
        choice = rng.random()
        if not nodes or choice < 0.3:
            g.add_node((rng.randrange(5),), root=rng.random() < 0.2)
        elif choice < 0.55:
            g.add_edge(rng.choice(nodes), rng.choice(nodes), (rng.randrange(3),))
        elif choice < 0.7 and edges:
            g.delete_edge(rng.choice(edges))
        elif choice < 0.85:
            h = rng.choice(nodes)
            for e in set(g.out_edges(h)) | set(g.in_edges(h)):
                g.delete_edge(e)
            g.delete_node(h)
        else:
            h = rng.choice(nodes)
            g.set_root(h, not g.node(h).is_root)


class TestNodes(unittest.TestCase):
    def test_add_to_empty_graph(self):
        g = Graph()
        g.add_node()
        self.assertEqual(1, g.node_count)
        self.assertEqual(1, len(g.node_chain))

    def test_add_root(self):
        g = Graph()
        h = g.add_node(root=True)
        self.assertEqual(1, len(g.root_list))
        self.assertTrue(g.node(h).flags & gp2_graph.ROOT)
        self.assertLess(g.node(h).flags, 256)

    def test_add_many(self):
        g = Graph()
        handles = {g.add_node((i,)) for i in range(1000)}
        self.assertEqual(1000, len(handles))
        self.assertEqual(handles, set(g.nodes()))

    bad_node_mark_tests = [
        ("Dashed", Mark.DASHED),
        ("Wildcard", Mark.ANY),
    ]

    def test_bad_node_mark(self):
        for test_name, mark in self.bad_node_mark_tests:
            with self.subTest(test_name):
                g = Graph()
                with self.assertRaises(GraphError):
                    g.add_node(mark=mark)
                h = g.add_node()
                with self.assertRaises(GraphError):
                    g.remark_node(h, mark)

    def test_delete_sole_node(self):
        g = Graph()
        g.delete_node(g.add_node())
        self.assertEqual(0, g.node_count)
        self.assertEqual([], list(g.nodes()))

    def test_delete_node_with_edges(self):
        g = Graph()
        a = g.add_node()
        b = g.add_node()
        g.add_edge(a, b)
        with self.assertRaises(GraphError):
            g.delete_node(a)

    def test_delete_twice(self):
        g = Graph()
        h = g.add_node()
        g.retain_node(h)
        g.delete_node(h)
        with self.assertRaises(GraphError):
            g.delete_node(h)

    def test_deferred_delete_blocks_reuse(self):
        g = Graph()
        h = g.add_node()
        g.retain_node(h)
        g.delete_node(h)
        self.assertNotEqual(h, g.add_node())

    def test_release_allows_reuse(self):
        g = Graph()
        h = g.add_node()
        g.retain_node(h)
        g.delete_node(h)
        g.release_node(h)
        self.assertEqual(h, g.add_node())

    def test_restore_node(self):
        g = Graph()
        h = g.add_node((1,), root=True)
        g.retain_node(h)
        g.delete_node(h)
        self.assertEqual([], list(g.roots()))
        g.restore_node(h)
        self.assertEqual([h], list(g.roots()))
        self.assertEqual([], g.check_invariants())

    def test_relabel_remark_set_root(self):
        g = Graph()
        h = g.add_node()
        g.relabel_node(h, (5,))
        self.assertEqual((5,), g.node(h).label)
        g.remark_node(h, Mark.GREY)
        self.assertEqual(Mark.GREY, g.node(h).mark)
        g.set_root(h, True)
        self.assertEqual([h], list(g.roots()))
        g.set_root(h, False)
        self.assertEqual([], list(g.roots()))
        self.assertEqual(0, len(g.root_list))

    def test_deleting_root_clears_root_list(self):
        g = Graph()
        a = g.add_node(root=True)
        b = g.add_node(root=True)
        g.delete_node(a)
        self.assertEqual([b], list(g.roots()))


class TestEdges(unittest.TestCase):
    def setUp(self):
        self.g = Graph()
        self.a = self.g.add_node()
        self.b = self.g.add_node()

    def test_add_edge(self):
        self.g.add_edge(self.a, self.b)
        self.assertEqual(1, self.g.node(self.a).outdegree)
        self.assertEqual(1, self.g.node(self.b).indegree)
        self.assertEqual(1, self.g.edge_count)

    def test_loop(self):
        e = self.g.add_edge(self.a, self.a)
        self.assertEqual([e], list(self.g.out_edges(self.a)))
        self.assertEqual([e], list(self.g.in_edges(self.a)))
        self.assertEqual(1, self.g.node(self.a).indegree)
        self.assertEqual(1, self.g.node(self.a).outdegree)

    def test_parallel_edges(self):
        self.g.add_edge(self.a, self.b)
        self.g.add_edge(self.a, self.b)
        self.assertEqual(2, len(list(self.g.out_edges(self.a))))

    def test_delete_sole_edge(self):
        self.g.delete_edge(self.g.add_edge(self.a, self.b))
        self.assertEqual(0, self.g.edge_count)

    def test_delete_one_parallel(self):
        e1 = self.g.add_edge(self.a, self.b)
        e2 = self.g.add_edge(self.a, self.b)
        self.g.delete_edge(e1)
        self.assertEqual([e2], list(self.g.out_edges(self.a)))
        self.assertEqual([e2], list(self.g.in_edges(self.b)))

    def test_deferred_edge_delete(self):
        e = self.g.add_edge(self.a, self.b)
        self.g.retain_edge(e)
        self.g.delete_edge(e)
        self.assertNotEqual(e, self.g.add_edge(self.a, self.b))
        with self.assertRaises(GraphError):
            self.g.delete_edge(e)

    def test_restore_edge(self):
        e = self.g.add_edge(self.a, self.b, (1, "x"))
        self.g.retain_edge(e)
        self.g.delete_edge(e)
        self.g.restore_edge(e)
        self.assertEqual([e], list(self.g.edges()))
        self.assertEqual([], self.g.check_invariants())

    bad_edge_mark_tests = [
        ("Grey", Mark.GREY),
        ("Wildcard", Mark.ANY),
    ]

    def test_bad_edge_mark(self):
        for test_name, mark in self.bad_edge_mark_tests:
            with self.subTest(test_name):
                with self.assertRaises(GraphError):
                    self.g.add_edge(self.a, self.b, mark=mark)

    def test_star_center_streams(self):
        g = Graph()
        center = g.add_node()
        for i in range(8):
            leaf = g.add_node()
            if i % 2 == 0:
                g.add_edge(center, leaf)
            else:
                g.add_edge(leaf, center)
        self.assertEqual(4, len(list(g.out_edges(center))))
        self.assertEqual(4, len(list(g.in_edges(center))))

    def test_isolated_node_streams(self):
        self.assertEqual([], list(self.g.out_edges(self.a)))
        self.assertEqual([], list(self.g.in_edges(self.a)))


class TestLabels(unittest.TestCase):
    bad_label_tests = [
        ("Too large", (2**31,)),
        ("Too small", (-(2**31) - 1,)),
        ("Boolean atom", (True,)),
        ("Float atom", (1.5,)),
        ("Non-printable string", ("a\nb",)),
    ]

    def test_bad_labels(self):
        for test_name, label in self.bad_label_tests:
            with self.subTest(test_name):
                with self.assertRaises(GraphError):
                    gp2_graph.check_label(label)

    good_label_tests = [
        ("Empty list", ()),
        ("Integer bounds", (gp2_graph.INT_MIN, gp2_graph.INT_MAX)),
        ("Mixed atoms", (1, "two", 3)),
    ]

    def test_good_labels(self):
        for test_name, label in self.good_label_tests:
            with self.subTest(test_name):
                self.assertEqual(label, gp2_graph.check_label(list(label)))

    def test_interned_labels_are_shared(self):
        g = Graph()
        a = g.add_node((1, "x"))
        b = g.add_node((1, "x"))
        self.assertIs(g.node(a).label, g.node(b).label)
        self.assertEqual(2, g.labels.refcount((1, "x")))
        g.delete_node(a)
        self.assertEqual(1, g.labels.refcount((1, "x")))

    def test_counting_disabled(self):
        g = Graph(count_labels=False)
        g.add_node((1,))
        self.assertEqual(0, g.labels.refcount((1,)))
        self.assertEqual(1, len(g.labels))


class TestIteration(unittest.TestCase):
    def test_empty_graph(self):
        for backend in Backend:
            with self.subTest(backend.value):
                self.assertEqual([], list(Graph().nodes(backend)))

    def test_backends_agree_after_delete(self):
        g = Graph()
        handles = [g.add_node() for _ in range(3)]
        g.delete_node(handles[1])
        chain, scan = chain_and_scan(g)
        self.assertEqual({handles[0], handles[2]}, chain)
        self.assertEqual(chain, scan)

    def test_chain_order_is_reverse_insertion(self):
        g = Graph()
        handles = [g.add_node() for _ in range(5)]
        g.delete_node(handles[2])
        expected = [h for h in reversed(handles) if h != handles[2]]
        self.assertEqual(expected, list(g.nodes()))

    def test_step_counts_after_mass_delete(self):
        g = Graph()
        handles = [g.add_node() for _ in range(100_000)]
        for h in handles[:-1]:
            g.delete_node(h)

        g.iteration_steps = 0
        self.assertEqual([handles[-1]], list(g.nodes(Backend.CHAIN)))
        self.assertEqual(1, g.iteration_steps)

        g.iteration_steps = 0
        self.assertEqual([handles[-1]], list(g.nodes(Backend.INDEX_SCAN)))
        self.assertEqual(100_000, g.iteration_steps)

    def test_first_node_is_constant_steps(self):
        for deleted in (0, 10, 1000):
            with self.subTest(f"{deleted} deleted"):
                g = Graph()
                handles = [g.add_node() for _ in range(deleted + 5)]
                for h in handles[5:]:
                    g.delete_node(h)
                g.iteration_steps = 0
                next(g.nodes())
                self.assertEqual(1, g.iteration_steps)

    def test_random_mutations_keep_invariants(self):
        rng = random.Random(1234)
        for run in range(1000):
            g = Graph()
            random_mutations(g, rng, rng.randrange(1, 51))
            problems = g.check_invariants()
            if problems:
                self.fail(f"run {run}: " + "\n".join(problems))
            chain, scan = chain_and_scan(g)
            self.assertEqual(chain, scan)

    def test_teardown(self):
        g = Graph()
        a = g.add_node(root=True)
        g.add_edge(a, a)
        g.teardown()
        self.assertEqual(0, g.node_count)
        self.assertEqual([], list(g.nodes(Backend.INDEX_SCAN)))


class TestIdMap(unittest.TestCase):
    def test_insert_lookup(self):
        m = IdMap()
        gp2_graph.idmap_insert(m, 0, 42)
        self.assertEqual(42, gp2_graph.idmap_lookup(m, 0))
        self.assertIsNone(gp2_graph.idmap_lookup(m, 10**12))

    bad_id_tests = [
        ("Negative", -1),
        ("Beyond a machine word", gp2_graph.MAX_EXTERNAL_ID + 1),
    ]

    def test_bad_ids(self):
        for test_name, external_id in self.bad_id_tests:
            with self.subTest(test_name):
                with self.assertRaises(GraphError):
                    IdMap().insert(external_id, 0)

    def test_duplicate_id(self):
        m = IdMap()
        m.insert(7, 0)
        with self.assertRaises(GraphError):
            m.insert(7, 1)

    def test_random_wide_keys(self):
        rng = random.Random(99)
        m = IdMap()
        expected = {}
        while len(expected) < 10_000:
            key = rng.getrandbits(60)
            if key not in expected:
                expected[key] = len(expected)
                m.insert(key, expected[key])
        self.assertEqual(len(expected), len(m))
        for key, handle in expected.items():
            self.assertEqual(handle, m.lookup(key))

    def test_largest_id(self):
        m = IdMap()
        m.insert(gp2_graph.MAX_EXTERNAL_ID, 3)
        self.assertIn(gp2_graph.MAX_EXTERNAL_ID, m)
        self.assertEqual(1, len(m))


class TestIsomorphism(unittest.TestCase):
    @staticmethod
    def triangle(labels=(1, 2, 3)):
        g = Graph()
        nodes = [g.add_node((label,)) for label in labels]
        for i in range(3):
            g.add_edge(nodes[i], nodes[(i + 1) % 3])
        return g

    def test_self(self):
        g = self.triangle()
        self.assertTrue(gp2_graph.graphs_isomorphic(g, g))

    def test_path_vs_discrete(self):
        path = Graph()
        a = path.add_node()
        path.add_edge(a, path.add_node())
        discrete = Graph()
        discrete.add_node()
        discrete.add_node()
        self.assertFalse(gp2_graph.graphs_isomorphic(path, discrete))

    def test_relabelled_triangle(self):
        original = self.triangle()
        relabelled = self.triangle((1, 2, 4))
        self.assertFalse(gp2_graph.graphs_isomorphic(original, relabelled))
        self.assertTrue(
            gp2_graph.graphs_isomorphic(original, relabelled, match_labels=False)
        )

    def test_rotated_triangle(self):
        self.assertTrue(
            gp2_graph.graphs_isomorphic(self.triangle(), self.triangle((2, 3, 1)))
        )

    def test_direction_matters(self):
        forward = Graph()
        a = forward.add_node((1,))
        forward.add_edge(a, forward.add_node((2,)))
        backward = Graph()
        b = backward.add_node((2,))
        backward.add_edge(b, backward.add_node((1,)))
        self.assertFalse(gp2_graph.graphs_isomorphic(forward, backward))

    def test_roots_matter(self):
        g1 = Graph()
        g1.add_node(root=True)
        g2 = Graph()
        g2.add_node()
        self.assertFalse(gp2_graph.graphs_isomorphic(g1, g2))


if __name__ == "__main__":
    unittest.main()
