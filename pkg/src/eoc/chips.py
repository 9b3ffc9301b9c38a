"""Chips: a conjugated gate held as one BDD per output bitline.

A chip maps bitline -> Bdd for the lines in its footprint; every other
line passes through unchanged. Conjugating by one nonlinear layer follows
two steps. Step 1 substitutes ``x_j <- ginv_j(x_T)`` into every output.
Step 2 recombines each touched triplet as ``g_k(h~_T)``. After that, each
output's own variable is moved to the end of its order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .gates import ControlledGate, Gate3, invert_lut
from .robdd import (Bdd, BddStore, bdd_var, copy_into, deserialize, evaluate, flip_var_branches,
                    from_truth_table, reorder_var_last, serialize, swap_terminals, transfer,
                    vector_compose)


class Chip:
    def __init__(self, width: int, store: BddStore, outputs: dict[int, Bdd], level: int = 0,
                 seed_kind: str = ""):
        self.width = width
        self.store = store
        self.outputs = dict(sorted(outputs.items()))
        self.level = level
        self.seed_kind = seed_kind
        self._compiled: ChipKernel | None = None
        if any(b >= width or b < 0 for b in self.outputs):
            raise ValidationError("chip output outside the register")

    @property
    def footprint(self) -> frozenset[int]:
        return frozenset(self.outputs)

    def replace(self, outputs: dict[int, Bdd] | None = None, level: int | None = None) -> "Chip":
        return Chip(self.width, self.store, self.outputs if outputs is None else outputs,
                    self.level if level is None else level, self.seed_kind)

    def compiled(self) -> "ChipKernel":
        if self._compiled is None:
            self._compiled = ChipKernel(self)
        return self._compiled

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_compiled"] = None
        return state


# -- construction ---------------------------------------------------------------

def seed_chip(gate: ControlledGate, n: int, store: BddStore | None = None) -> Chip:
    """Level-0 chip of a NOT/CNOT/Toffoli (any control count works)."""
    if gate.max_bit() >= n:
        raise ValidationError(f"{gate} does not fit in width {n}")
    store = store or BddStore()
    ctrl_bits = [b for b, _ in gate.controls]
    variables = ctrl_bits + [gate.target]
    m = len(ctrl_bits)
    table = []
    for x in range(1 << (m + 1)):
        fire = all(((x >> i) & 1) == int(p) for i, (_, p) in enumerate(gate.controls))
        table.append((x >> m & 1) ^ int(fire))
    outputs = {gate.target: from_truth_table(store, variables, table, variables)}
    for b in ctrl_bits:
        outputs[b] = bdd_var(store, b)
    return Chip(n, store, outputs, 0, gate.kind)


def _new_order(order: Sequence[int], trip_of: dict[int, tuple[int, int, int]]) -> list[int]:
    """Replace each touched triplet's first occurrence by the block
    [triplet lines not yet in the order (sorted), triplet lines already present (in order)]."""
    present = set(order)
    out: list[int] = []
    placed = set()
    for v in order:
        trip = trip_of.get(v)
        if trip is None:
            out.append(v)
            continue
        if trip in placed:
            continue
        placed.add(trip)
        out.extend(u for u in trip if u not in present)
        out.extend(u for u in order if u in trip)
    return out


def conjugate_chip_layer(chip: Chip, layer: Sequence[Gate3]) -> Chip:
    """``g h g^-1`` for every gate g of the layer (execute g^-1, chip, g)."""
    store = chip.store
    fp = chip.footprint
    touched = [g for g in layer if fp.intersection(g.bitlines)]
    if not touched:
        return chip.replace(level=chip.level + 1)
    trip_of = {b: g.bitlines for g in touched for b in g.bitlines}
    inv_lut = {g.bitlines: invert_lut(g.lut) for g in touched}

    def coord_bdd(trip, lut, b, order):
        i = trip.index(b)
        return from_truth_table(store, trip, [lut[x] >> i & 1 for x in range(8)], order)

    # step 1
    tilde: dict[int, Bdd] = {}
    for k, h in chip.outputs.items():
        order = tuple(_new_order(h.order, trip_of))
        subs = {j: coord_bdd(trip_of[j], inv_lut[trip_of[j]], j, order)
                for j in h.support() if j in trip_of}
        tilde[k] = vector_compose(h, subs, order)

    # step 2
    new_outputs: dict[int, Bdd] = {}
    for g in touched:
        trip = g.bitlines
        members = [b for b in trip if b in fp]
        order = list(tilde[members[0]].order)
        seen = set(order)
        for b in members[1:]:
            for v in tilde[b].order:
                if v not in seen:
                    order.append(v)
                    seen.add(v)
        order = tuple(order)
        parts = {}
        for b in trip:
            if b in fp:
                parts[b] = transfer(tilde[b], order)
            else:
                parts[b] = coord_bdd(trip, inv_lut[trip], b, order)
        for k in trip:
            gk = coord_bdd(trip, g.lut, k, order)
            new_outputs[k] = reorder_var_last(vector_compose(gk, parts, order), k)
    return chip.replace(outputs=new_outputs, level=chip.level + 1)


def build_chip(gate: ControlledGate, n: int, layers: Sequence[Sequence[Gate3]],
               flips: Sequence[tuple[Iterable[int], Iterable[int]]] | None = None,
               store: BddStore | None = None) -> Chip:
    """Seed and conjugate through every layer; ``flips[l] = (input_nots, output_nots)``
    are absorbed just before layer ``l + 1``. A shared work ``store`` lets
    consecutive builds reuse ITE results; the returned chip is compacted."""
    chip = seed_chip(gate, n, store)
    for l, layer in enumerate(layers):
        if flips is not None:
            ins, outs = flips[l]
            for b in outs:
                chip = absorb_output_not(chip, b)
            for b in ins:
                chip = absorb_input_not(chip, b)
        chip = conjugate_chip_layer(chip, layer)
    return compact(chip)


# -- NOT absorption ---------------------------------------------------------------

def absorb_input_not(chip: Chip, bitline: int) -> Chip:
    """Chip preceded by NOT(bitline)."""
    if bitline not in chip.outputs:
        outs = dict(chip.outputs)
        outs[bitline] = swap_terminals(bdd_var(chip.store, bitline))
        return chip.replace(outputs=outs)
    return chip.replace(outputs={b: flip_var_branches(f, bitline) for b, f in chip.outputs.items()})


def absorb_output_not(chip: Chip, bitline: int) -> Chip:
    """Chip followed by NOT(bitline)."""
    outs = dict(chip.outputs)
    if bitline not in outs:
        outs[bitline] = swap_terminals(bdd_var(chip.store, bitline))
    else:
        outs[bitline] = swap_terminals(outs[bitline])
    return chip.replace(outputs=outs)


# -- evaluation and metrics ---------------------------------------------------------

def chip_eval(chip: Chip, state: int) -> int:
    if state < 0 or state >> chip.width:
        raise ValidationError(f"state does not fit in {chip.width} bits")
    out = state
    for b, f in chip.outputs.items():
        bit = evaluate(f, state)
        out = (out & ~(1 << b)) | (bit << b)
    return out


LUT_MAX_WIDTH = 12
LUT_MIN_STATES = 256


class ChipKernel:
    """Flat node arrays of a chip's store; evaluates every output in one sweep."""

    def __init__(self, chip: Chip):
        store = chip.store
        self.var = np.asarray(store.var, dtype=np.int64)
        self.var[:2] = 0
        self.lo = np.asarray(store.lo, dtype=np.int64)
        self.hi = np.asarray(store.hi, dtype=np.int64)
        self.roots = np.asarray([f.root for f in chip.outputs.values()], dtype=np.int64)
        self.bits = np.asarray(list(chip.outputs), dtype=np.uint64)
        self.depth = max((len(f.order) for f in chip.outputs.values()), default=0)
        self.mask = np.uint64(sum(1 << b for b in chip.outputs))
        support = set().union(*(f.support() for f in chip.outputs.values())) if chip.outputs else set()
        # identity lines that are read still belong to the local table
        self.lines = np.asarray(sorted(support | set(chip.outputs)), dtype=np.uint64)
        self.line_mask = np.uint64(sum(1 << int(b) for b in self.lines))
        self.local = len(self.lines) <= LUT_MAX_WIDTH
        self._table: np.ndarray | None = None

    def table(self) -> np.ndarray:
        """Lookup table over ``lines``: local input value -> local output value."""
        if self._table is None:
            states = self._scatter(np.arange(1 << len(self.lines), dtype=np.uint64))
            self._table = self._gather(self.apply_sweep(states))
        return self._table

    def _gather(self, states: np.ndarray) -> np.ndarray:
        out = np.zeros_like(states)
        for i, b in enumerate(self.lines):
            out |= ((states >> b) & np.uint64(1)) << np.uint64(i)
        return out

    def _scatter(self, local: np.ndarray) -> np.ndarray:
        out = np.zeros_like(local)
        for i, b in enumerate(self.lines):
            out |= ((local >> np.uint64(i)) & np.uint64(1)) << b
        return out

    def apply_sweep(self, states: np.ndarray) -> np.ndarray:
        out = states & ~self.mask
        for row, b in zip(self.evaluate_many(states), self.bits):
            out |= row << b
        return out

    def apply(self, states: np.ndarray) -> np.ndarray:
        if self.local and len(states) >= LUT_MIN_STATES:
            return (states & ~self.line_mask) | self._scatter(self.table()[self._gather(states)])
        return self.apply_sweep(states)

    def evaluate_many(self, states: np.ndarray) -> np.ndarray:
        """Output bits, shape (outputs, states)."""
        cur = np.repeat(self.roots[:, None], len(states), axis=1)
        one = np.uint64(1)
        for _ in range(self.depth):
            live = cur >= 2
            if not live.any():
                break
            bit = (states[None, :] >> self.var[cur].astype(np.uint64)) & one
            cur = np.where(bit.astype(bool), self.hi[cur], self.lo[cur])
        return cur.astype(np.uint64)


def chip_eval_many(chip: Chip, states: np.ndarray) -> np.ndarray:
    states = np.asarray(states, dtype=np.uint64)
    if not chip.outputs:
        return states.copy()
    return chip.compiled().apply(states)


@dataclass(frozen=True)
class ChipMetrics:
    width: int
    size: int
    volume: int


def chip_metrics(chip: Chip) -> ChipMetrics:
    counts = [f.node_count() for f in chip.outputs.values()]
    return ChipMetrics(len(chip.outputs), max(counts, default=0), sum(counts))


# -- canonical forms and storage ------------------------------------------------------

def compact(chip: Chip) -> Chip:
    """Copy into a fresh store holding only reachable nodes."""
    store = BddStore()
    outs = {b: copy_into(store, f) for b, f in chip.outputs.items()}
    return Chip(chip.width, store, outs, chip.level, chip.seed_kind)


def canonical(chip: Chip) -> Chip:
    """Every output re-expressed under (sorted footprint, own line last)."""
    fp = sorted(chip.outputs)
    outs = {}
    for b, f in chip.outputs.items():
        order = tuple(v for v in fp if v != b) + (b,)
        outs[b] = transfer(f, order)
    return chip.replace(outputs=outs)


def format_chip(chip: Chip, explicit_identity: bool = False) -> list[str]:
    """Text form: header, then one ``out`` section per output line."""
    outs = dict(chip.outputs)
    if explicit_identity:
        for b in range(chip.width):
            if b not in outs:
                outs[b] = bdd_var(chip.store, b)
    lines = [f"chip level {chip.level} seed {chip.seed_kind or '-'} "
             f"footprint {','.join(map(str, sorted(chip.outputs))) or '-'}"]
    for b in sorted(outs):
        lines.append(f"out {b}")
        lines.extend(serialize(outs[b]))
    lines.append("end")
    return lines


def parse_chip(lines: list[str], width: int) -> Chip:
    head = lines[0].split()
    if head[0] != "chip":
        raise ValidationError("chip section must start with 'chip'")
    meta = dict(zip(head[1::2], head[2::2]))
    footprint = set() if meta["footprint"] == "-" else {int(v) for v in meta["footprint"].split(",")}
    store = BddStore()
    outputs: dict[int, Bdd] = {}
    cur, buf = None, []
    for line in lines[1:] + ["out -1"]:
        if line.startswith("out ") or line == "end":
            if cur is not None:
                f = deserialize(store, buf)
                if cur in footprint:
                    outputs[cur] = f
            if line == "end":
                cur = None
                buf = []
                continue
            cur, buf = int(line.split()[1]), []
        else:
            buf.append(line)
    if set(outputs) != footprint:
        raise ValidationError("chip footprint does not match its outputs")
    seed = meta.get("seed", "-")
    return Chip(width, store, outputs, int(meta["level"]), "" if seed == "-" else seed)
