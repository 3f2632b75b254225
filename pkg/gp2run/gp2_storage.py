# SPDX-FileCopyrightText: 2024 Cisco Systems, Inc. and/or its affiliates
# SPDX-License-Identifier: MIT

from typing import Any, Iterator, List, Optional, Tuple

INLINE_CHUNK_BYTES = 160

# Nominal record sizes, used only to size the inline chunk of each store
CHAIN_ENTRY_SIZE = 24
EDGE_RECORD_SIZE = 48
NODE_RECORD_SIZE = 80

NIL = -1


class StorageError(RuntimeError):
    pass


class _Hole:
    """Free-list link written over a freed slot"""

    __slots__ = ("next",)

    def __init__(self, next_hole: int):
        self.next = next_hole

    def __repr__(self) -> str:
        return f"_Hole(next={self.next})"


def split_region_index(j: int) -> Tuple[int, int]:
    """
    Map an index in the post-inline space to (region, offset).
    Region k holds 2^(k+1) slots, so index j lives in region
    (largest set bit of j+2) - 1 at offset j+2 - 2^(k+1).
    """
    shifted = j + 2
    region = shifted.bit_length() - 2
    return region, shifted - (1 << (region + 1))


class BigArray:
    """
    Grow-only slot store. The first floor(160 / elem_size) slots live in an
    inline chunk; later slots live in regions that double in size and are
    never moved, so a handle (the logical slot index) stays valid for the
    life of the store. Freed slots are chained into a LIFO hole list that is
    threaded through the freed slots themselves.
    """

    __slots__ = (
        "elem_size",
        "inline_capacity",
        "high_water",
        "first_hole",
        "live_count",
        "checked",
        "_inline",
        "_regions",
        "_live",
    )

    def __init__(self, elem_size: int, checked: bool = __debug__):
        if elem_size <= 0 or elem_size > INLINE_CHUNK_BYTES:
            raise StorageError(
                f"Element size {elem_size} does not fit the "
                f"{INLINE_CHUNK_BYTES}-byte inline chunk"
            )
        self.elem_size = elem_size
        self.inline_capacity = INLINE_CHUNK_BYTES // elem_size
        self.high_water = 0
        self.first_hole = NIL
        self.live_count = 0
        self.checked = checked
        self._inline: List[Any] = [None] * self.inline_capacity
        self._regions: List[List[Any]] = []
        self._live: Optional[bytearray] = bytearray() if checked else None

    @property
    def region_count(self) -> int:
        return len(self._regions)

    def coordinates(self, index: int) -> Tuple[int, int]:
        """(region, offset) of a logical index; region -1 is the inline chunk"""
        if index < self.inline_capacity:
            return -1, index
        return split_region_index(index - self.inline_capacity)

    def __getitem__(self, index: int) -> Any:
        if self._live is not None:
            self._check_live(index)
        if index < self.inline_capacity:
            return self._inline[index]
        shifted = index - self.inline_capacity + 2
        region = shifted.bit_length() - 2
        return self._regions[region][shifted - (1 << (region + 1))]

    def __setitem__(self, index: int, value: Any) -> None:
        if self._live is not None:
            self._check_live(index)
        self._put(index, value)

    def __len__(self) -> int:
        return self.live_count

    def alloc(self, value: Any = None) -> int:
        """Return a slot handle, reusing the most recently freed slot first"""
        if self.first_hole != NIL:
            index = self.first_hole
            self.first_hole = self._raw(index).next
        else:
            index = self.high_water
            if index >= self.inline_capacity:
                region, offset = split_region_index(index - self.inline_capacity)
                if region == len(self._regions):
                    self._regions.append([None] * (1 << (region + 1)))
            self.high_water += 1
            if self._live is not None:
                self._live.append(0)
        self._put(index, value)
        if self._live is not None:
            self._live[index] = 1
        self.live_count += 1
        return index

    def free(self, index: int) -> None:
        if self._live is not None:
            self._check_live(index)
            self._live[index] = 0
        self._put(index, _Hole(self.first_hole))
        self.first_hole = index
        self.live_count -= 1

    def is_live(self, index: int) -> bool:
        if self._live is None:
            raise StorageError("Liveness tracking is disabled for this store")
        return 0 <= index < self.high_water and self._live[index] == 1

    def index_scan(self) -> Iterator[Tuple[int, Any]]:
        """Visit every index below high_water in order, holes included"""
        inline = self._inline
        for index in range(min(self.high_water, self.inline_capacity)):
            yield index, inline[index]
        index = self.inline_capacity
        for region in self._regions:
            for slot in region:
                if index >= self.high_water:
                    return
                yield index, slot
                index += 1

    def clear(self) -> None:
        """Drop every region and forget all slots"""
        self._inline = [None] * self.inline_capacity
        self._regions = []
        self.high_water = 0
        self.first_hole = NIL
        self.live_count = 0
        if self._live is not None:
            self._live = bytearray()

    def _raw(self, index: int) -> Any:
        if index < self.inline_capacity:
            return self._inline[index]
        region, offset = split_region_index(index - self.inline_capacity)
        return self._regions[region][offset]

    def _put(self, index: int, value: Any) -> None:
        if index < self.inline_capacity:
            self._inline[index] = value
        else:
            region, offset = split_region_index(index - self.inline_capacity)
            self._regions[region][offset] = value

    def _check_live(self, index: int) -> None:
        if not (0 <= index < self.high_water) or not self._live[index]:
            raise StorageError(f"Slot {index} is not live")


class ChainEntry:
    __slots__ = ("payload", "next", "prev")

    def __init__(self, payload: int, next_entry: int = NIL, prev_entry: int = NIL):
        self.payload = payload
        self.next = next_entry
        self.prev = prev_entry


class Chain:
    """Anchor of an intrusive doubly linked chain stored in a BigArray"""

    __slots__ = ("head", "length")

    def __init__(self):
        self.head = NIL
        self.length = 0

    def __len__(self) -> int:
        return self.length

    def push(self, payload: int, entry_store: BigArray) -> int:
        """Insert a new entry at the head and return its handle"""
        entry = entry_store.alloc(ChainEntry(payload, self.head))
        if self.head != NIL:
            entry_store[self.head].prev = entry
        self.head = entry
        self.length += 1
        return entry

    def unlink(self, entry: int, entry_store: BigArray) -> None:
        """Remove an entry with a constant number of link updates"""
        record = entry_store[entry]
        if not isinstance(record, ChainEntry):
            raise StorageError(f"Chain entry {entry} is not live")
        if record.prev != NIL:
            entry_store[record.prev].next = record.next
        elif self.head == entry:
            self.head = record.next
        else:
            raise StorageError(f"Chain entry {entry} is not in this chain")
        if record.next != NIL:
            entry_store[record.next].prev = record.prev
        entry_store.free(entry)
        self.length -= 1

    def payloads(self, entry_store: BigArray) -> Iterator[int]:
        entry = self.head
        while entry != NIL:
            record = entry_store[entry]
            yield record.payload
            entry = record.next


def chain_push(head: Chain, payload: int, entry_store: BigArray) -> int:
    return head.push(payload, entry_store)


def chain_unlink(entry: int, head: Chain, entry_store: BigArray) -> None:
    head.unlink(entry, entry_store)
