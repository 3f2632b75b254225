# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

import math
import random
import unittest

from gp2run import gp2_storage
from gp2run.gp2_storage import BigArray, Chain, StorageError


def linear_scan_coordinates(index, inline_capacity):
    if index < inline_capacity:
        return -1, index
    j = index - inline_capacity
    region = 0
    while j >= 2 ** (region + 1):
        j -= 2 ** (region + 1)
        region += 1
    return region, j


class TestBigArrayConstruction(unittest.TestCase):
    inline_capacity_tests = [
        ("16 byte elements", 16, 10),
        ("160 byte elements", 160, 1),
        ("24 byte elements", 24, 6),
        ("Chain entries", gp2_storage.CHAIN_ENTRY_SIZE, 6),
        ("Node records", gp2_storage.NODE_RECORD_SIZE, 2),
    ]

    def test_inline_capacity(self):
        for test_name, elem_size, expected in self.inline_capacity_tests:
            with self.subTest(test_name):
                store = BigArray(elem_size)
                self.assertEqual(expected, store.inline_capacity)
                self.assertEqual(0, store.high_water)
                self.assertEqual(0, store.region_count)

    bad_elem_size_tests = [
        ("Zero", 0),
        ("Negative", -8),
        ("Larger than the inline chunk", 161),
    ]

    def test_bad_elem_size(self):
        for test_name, elem_size in self.bad_elem_size_tests:
            with self.subTest(test_name):
                with self.assertRaises(StorageError):
                    BigArray(elem_size)


class TestCoordinates(unittest.TestCase):
    def test_split_region_index(self):
        self.assertEqual((0, 0), gp2_storage.split_region_index(0))
        self.assertEqual((0, 1), gp2_storage.split_region_index(1))
        self.assertEqual((1, 0), gp2_storage.split_region_index(2))
        self.assertEqual((1, 3), gp2_storage.split_region_index(5))
        self.assertEqual((2, 0), gp2_storage.split_region_index(6))

    def test_index_five_past_inline_chunk(self):
        store = BigArray(80)
        self.assertEqual(2, store.inline_capacity)
        self.assertEqual((1, 3), store.coordinates(2 + 5))

    def test_formula_matches_linear_scan(self):
        for elem_size in (16, 80, 160):
            store = BigArray(elem_size)
            with self.subTest(f"elem_size {elem_size}"):
                for index in range(100_000):
                    expected = linear_scan_coordinates(index, store.inline_capacity)
                    if store.coordinates(index) != expected:
                        self.fail(f"Index {index}: {store.coordinates(index)}")


class TestAllocFree(unittest.TestCase):
    def test_first_alloc_is_index_zero(self):
        store = BigArray(16)
        self.assertEqual(0, store.alloc("a"))
        self.assertEqual("a", store[0])
        self.assertEqual(1, len(store))

    def test_freed_slot_is_reused(self):
        store = BigArray(16)
        for _ in range(3):
            store.alloc()
        store.free(1)
        self.assertEqual(1, store.alloc())
        self.assertEqual(3, store.high_water)

    def test_free_list_is_lifo(self):
        store = BigArray(16)
        a = store.alloc("a")
        b = store.alloc("b")
        store.free(a)
        store.free(b)
        self.assertEqual(b, store.first_hole)
        self.assertEqual(b, store.alloc())
        self.assertEqual(a, store.alloc())
        self.assertEqual(gp2_storage.NIL, store.first_hole)

    def test_free_only_slot(self):
        store = BigArray(16)
        h = store.alloc()
        store.free(h)
        self.assertEqual(0, store.live_count)
        self.assertEqual(h, store.first_hole)

    def test_churn_keeps_high_water(self):
        store = BigArray(48)
        store.alloc()
        for _ in range(10_000):
            store.free(store.alloc())
        self.assertEqual(2, store.high_water)
        self.assertEqual(1, store.live_count)

    def test_handle_stability(self):
        store = BigArray(16)
        first = object()
        h = store.alloc(first)
        coordinates = store.coordinates(h)
        for i in range(1_000_000):
            store.alloc(i)
        self.assertIs(first, store[h])
        self.assertEqual(coordinates, store.coordinates(h))

    def test_region_count_is_logarithmic(self):
        for n in (1, 10, 100, 1000, 100_000):
            with self.subTest(f"{n} allocations"):
                store = BigArray(160)
                for _ in range(n):
                    store.alloc()
                self.assertLessEqual(store.region_count, math.ceil(math.log2(n + 2)))

    def test_lifo_against_stack_model(self):
        rng = random.Random(20240601)
        for run in range(50):
            with self.subTest(f"run {run}"):
                store = BigArray(24)
                holes = []
                live = []
                high_water = 0
                for _ in range(300):
                    if live and rng.random() < 0.4:
                        h = live.pop(rng.randrange(len(live)))
                        store.free(h)
                        holes.append(h)
                    else:
                        if holes:
                            expected = holes.pop()
                        else:
                            expected = high_water
                            high_water += 1
                        self.assertEqual(expected, store.alloc())
                        live.append(expected)
                    self.assertEqual(len(live), store.live_count)
                self.assertEqual(high_water, store.high_water)

    contract_violation_tests = [
        ("Double free", lambda s, h: s.free(h)),
        ("Read after free", lambda s, h: s[h]),
        ("Write after free", lambda s, h: s.__setitem__(h, 1)),
    ]

    def test_contract_violations(self):
        for test_name, action in self.contract_violation_tests:
            with self.subTest(test_name):
                store = BigArray(16, checked=True)
                h = store.alloc()
                store.free(h)
                with self.assertRaises(StorageError):
                    action(store, h)

    def test_out_of_range_read(self):
        store = BigArray(16, checked=True)
        with self.assertRaises(StorageError):
            store[0]

    def test_unchecked_store_has_no_liveness(self):
        store = BigArray(16, checked=False)
        h = store.alloc()
        with self.assertRaises(StorageError):
            store.is_live(h)

    def test_clear(self):
        store = BigArray(16)
        for _ in range(100):
            store.alloc()
        store.clear()
        self.assertEqual(0, store.high_water)
        self.assertEqual(0, store.region_count)
        self.assertEqual(0, store.alloc())


class TestIndexScan(unittest.TestCase):
    def test_empty_store(self):
        self.assertEqual([], list(BigArray(16).index_scan()))

    def test_scan_includes_holes(self):
        store = BigArray(16)
        for _ in range(3):
            store.alloc("x")
        store.free(1)
        visited = list(store.index_scan())
        self.assertEqual([0, 1, 2], [index for index, _ in visited])
        self.assertEqual(["x", "x"], [s for _, s in visited if s == "x"])

    def test_scan_follows_high_water(self):
        store = BigArray(80)
        handles = [store.alloc(i) for i in range(7)]
        for h in handles[:5]:
            store.free(h)
        self.assertEqual(7, len(list(store.index_scan())))
        self.assertEqual(2, store.live_count)


class TestChain(unittest.TestCase):
    def setUp(self):
        self.store = BigArray(gp2_storage.CHAIN_ENTRY_SIZE)
        self.chain = Chain()

    def test_push_onto_empty(self):
        gp2_storage.chain_push(self.chain, 7, self.store)
        self.assertEqual(1, len(self.chain))
        self.assertEqual([7], list(self.chain.payloads(self.store)))

    def test_push_order(self):
        self.chain.push(1, self.store)
        self.chain.push(2, self.store)
        self.assertEqual([2, 1], list(self.chain.payloads(self.store)))

    def test_push_many(self):
        for i in range(500):
            self.chain.push(i, self.store)
        self.assertEqual(500, len(self.chain))
        self.assertEqual(500, self.store.live_count)

    def test_unlink_sole_entry(self):
        entry = self.chain.push(1, self.store)
        gp2_storage.chain_unlink(entry, self.chain, self.store)
        self.assertEqual(0, len(self.chain))
        self.assertEqual(gp2_storage.NIL, self.chain.head)
        self.assertEqual(0, self.store.live_count)

    unlink_tests = [
        ("Middle entry", 1, [3, 1]),
        ("Head entry", 2, [2, 1]),
        ("Tail entry", 0, [3, 2]),
    ]

    def test_unlink(self):
        for test_name, position, expected in self.unlink_tests:
            with self.subTest(test_name):
                store = BigArray(gp2_storage.CHAIN_ENTRY_SIZE)
                chain = Chain()
                entries = [chain.push(p, store) for p in (1, 2, 3)]
                chain.unlink(entries[position], store)
                self.assertEqual(expected, list(chain.payloads(store)))
                self.assertEqual(2, len(chain))

    def test_unlink_twice(self):
        entry = self.chain.push(1, self.store)
        self.chain.push(2, self.store)
        self.chain.unlink(entry, self.store)
        with self.assertRaises(StorageError):
            self.chain.unlink(entry, self.store)

    def test_unlink_from_other_chain(self):
        other = Chain()
        self.chain.push(1, self.store)
        entry = other.push(2, self.store)
        with self.assertRaises(StorageError):
            self.chain.unlink(entry, self.store)

    def test_chain_matches_shadow_set(self):
        rng = random.Random(7)
        entries = {}
        for payload in range(2000):
            if entries and rng.random() < 0.45:
                victim = rng.choice(sorted(entries))
                self.chain.unlink(entries.pop(victim), self.store)
            else:
                entries[payload] = self.chain.push(payload, self.store)
        self.assertEqual(set(entries), set(self.chain.payloads(self.store)))
        self.assertEqual(len(entries), len(self.chain))
        self.assertEqual(len(entries), self.store.live_count)


if __name__ == "__main__":
    unittest.main()
