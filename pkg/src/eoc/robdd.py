"""Reduced ordered BDDs with a per-function variable order.

Nodes live in a hash-consed :class:`BddStore`; node 0 is the false
terminal and node 1 the true terminal. A :class:`Bdd` is a root in a store
plus the variable order it is reduced under. Variables are plain ints (in
chips they are bitline indices). No complement edges are used, and
``node_count`` includes the reachable terminals.
"""

from __future__ import annotations

import sys
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import OrderError, ValidationError

FALSE, TRUE = 0, 1
_TERM_VAR = -1

sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))

# binary operators as (op(0,0), op(0,1), op(1,0), op(1,1))
OPS: dict[str, tuple[int, int, int, int]] = {
    "and": (0, 0, 0, 1),
    "or": (0, 1, 1, 1),
    "xor": (0, 1, 1, 0),
    "xnor": (1, 0, 0, 1),
    "nand": (1, 1, 1, 0),
    "nor": (1, 0, 0, 0),
    "imp": (1, 1, 0, 1),
}


class BddStore:
    """Shared node table, a size-bounded LRU of top-level ITE results and a
    per-order ITE memo that is cleared when it outgrows ``memo_limit``."""

    def __init__(self, cache_size: int = 1 << 16, memo_limit: int = 1 << 20):
        self.var: list[int] = [_TERM_VAR, _TERM_VAR]
        self.lo: list[int] = [FALSE, TRUE]
        self.hi: list[int] = [FALSE, TRUE]
        self.unique: dict[tuple[int, int, int], int] = {}
        self.cache: OrderedDict = OrderedDict()
        self.cache_size = cache_size
        self._order_ids: dict[tuple[int, ...], int] = {}
        self._positions: list[dict[int, int]] = []
        self._orders: list[tuple[int, ...]] = []
        # per-order ITE memo, dropped wholesale once it exceeds memo_limit
        self._memos: dict[int, dict] = {}
        self.memo_limit = memo_limit

    def __len__(self) -> int:
        return len(self.var)

    def mk(self, v: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (v, lo, hi)
        node = self.unique.get(key)
        if node is None:
            node = len(self.var)
            self.var.append(v)
            self.lo.append(lo)
            self.hi.append(hi)
            self.unique[key] = node
        return node

    def order_id(self, order: tuple[int, ...]) -> int:
        oid = self._order_ids.get(order)
        if oid is None:
            oid = len(self._positions)
            self._order_ids[order] = oid
            self._positions.append({v: i for i, v in enumerate(order)})
            self._orders.append(order)
        return oid

    def positions(self, oid: int) -> dict[int, int]:
        return self._positions[oid]

    def _cache_get(self, key):
        hit = self.cache.get(key)
        if hit is not None:
            self.cache.move_to_end(key)
        return hit

    def _cache_put(self, key, value) -> None:
        self.cache[key] = value
        if len(self.cache) > self.cache_size:
            self.cache.popitem(last=False)

    # -- core recursion ------------------------------------------------------

    def ite(self, f: int, g: int, h: int, oid: int) -> int:
        top = (f, g, h, oid)
        hit = self._cache_get(top)
        if hit is not None:
            return hit
        pos = self._positions[oid]
        order = self._orders[oid]
        memo = self._memos.get(oid)
        if memo is None or len(memo) > self.memo_limit:
            memo = self._memos[oid] = {}
        var, lo, hi = self.var, self.lo, self.hi
        unique = self.unique
        big = len(pos) + 1

        def rec(f: int, g: int, h: int) -> int:
            if f < 2:
                return g if f else h
            if g == h:
                return g
            if g == 1 and h == 0:
                return f
            key = (f, g, h)
            r = memo.get(key)
            if r is not None:
                return r
            lf = pos[var[f]]
            lg = pos[var[g]] if g >= 2 else big
            lh = pos[var[h]] if h >= 2 else big
            lv = lf if lf < lg else lg
            if lh < lv:
                lv = lh
            if lf == lv:
                f0, f1 = lo[f], hi[f]
            else:
                f0 = f1 = f
            if lg == lv:
                g0, g1 = lo[g], hi[g]
            else:
                g0 = g1 = g
            if lh == lv:
                h0, h1 = lo[h], hi[h]
            else:
                h0 = h1 = h
            r0 = rec(f0, g0, h0)
            r1 = rec(f1, g1, h1)
            if r0 == r1:
                r = r0
            else:
                v = order[lv]
                t = (v, r0, r1)
                r = unique.get(t)
                if r is None:
                    r = len(var)
                    var.append(v)
                    lo.append(r0)
                    hi.append(r1)
                    unique[t] = r
            memo[key] = r
            return r

        try:
            result = rec(f, g, h)
        except KeyError as exc:
            raise OrderError(f"variable {exc} is missing from the target order") from None
        self._cache_put(top, result)
        return result

    def support(self, root: int) -> set[int]:
        seen, out, stack = set(), set(), [root]
        while stack:
            x = stack.pop()
            if x < 2 or x in seen:
                continue
            seen.add(x)
            out.add(self.var[x])
            stack.append(self.lo[x])
            stack.append(self.hi[x])
        return out

    def reachable(self, root: int) -> list[int]:
        """Reachable node ids in post-order (children first, LO before HI)."""
        out, seen = [], set()
        stack = [(root, False)]
        while stack:
            x, expanded = stack.pop()
            if x in seen:
                continue
            if expanded or x < 2:
                seen.add(x)
                out.append(x)
                continue
            stack.append((x, True))
            stack.append((self.hi[x], False))
            stack.append((self.lo[x], False))
        return out


@dataclass(frozen=True, eq=False)
class Bdd:
    store: BddStore
    root: int
    order: tuple[int, ...]

    def __eq__(self, other) -> bool:
        return (isinstance(other, Bdd) and self.store is other.store
                and self.root == other.root and self.order == other.order)

    def __hash__(self) -> int:
        return hash((id(self.store), self.root, self.order))

    @property
    def oid(self) -> int:
        return self.store.order_id(self.order)

    def is_const(self) -> bool:
        return self.root < 2

    def support(self) -> set[int]:
        return self.store.support(self.root)

    def node_count(self) -> int:
        return len(self.store.reachable(self.root))

    def __invert__(self) -> "Bdd":
        return swap_terminals(self)


# -- constructors -------------------------------------------------------------

def bdd_const(store: BddStore, value: bool, order: Sequence[int] = ()) -> Bdd:
    return Bdd(store, TRUE if value else FALSE, tuple(order))


def bdd_var(store: BddStore, v: int, order: Sequence[int] | None = None) -> Bdd:
    order = (v,) if order is None else tuple(order)
    if v not in order:
        raise OrderError(f"variable {v} not in order {order}")
    return Bdd(store, store.mk(v, FALSE, TRUE), order)


def from_truth_table(store: BddStore, variables: Sequence[int], table: Sequence[int],
                     order: Sequence[int]) -> Bdd:
    """BDD of f where ``table[x]`` is f at ``variables[i] = bit i of x``."""
    order = tuple(order)
    pos = {v: i for i, v in enumerate(order)}
    if any(v not in pos for v in variables):
        raise OrderError("from_truth_table: variable missing from order")
    ranked = sorted(range(len(variables)), key=lambda i: pos[variables[i]])

    def rec(depth: int, x: int) -> int:
        if depth == len(ranked):
            return TRUE if table[x] else FALSE
        i = ranked[depth]
        return store.mk(variables[i], rec(depth + 1, x), rec(depth + 1, x | 1 << i))

    return Bdd(store, rec(0, 0), order)


# -- order handling -----------------------------------------------------------

def merge_orders(*bdds: Bdd) -> tuple[int, ...]:
    """A common order consistent with every operand on its support.

    The first operand's order wins ties. Raises OrderError if two operands
    place a pair of support variables in opposite order.
    """
    if not bdds:
        return ()
    constraints = []
    for f in bdds:
        sup = f.support()
        constraints.append([v for v in f.order if v in sup])
    if all(not c for c in constraints[1:]):
        return bdds[0].order
    base = list(bdds[0].order)
    for seq in constraints[1:]:
        base = _merge_two(base, seq)
    # keep extra (non-support) variables of later operands at the end
    seen = set(base)
    for f in bdds[1:]:
        for v in f.order:
            if v not in seen:
                base.append(v)
                seen.add(v)
    return tuple(base)


def _merge_two(base: list[int], seq: list[int]) -> list[int]:
    pos = {v: i for i, v in enumerate(base)}
    present = [v for v in seq if v in pos]
    if any(pos[a] > pos[b] for a, b in zip(present, present[1:])):
        raise OrderError(f"incompatible variable orders {base} and {seq}")
    out = list(base)
    # insert missing vars right after their predecessor in seq
    last_idx = -1
    for v in seq:
        if v in pos:
            last_idx = out.index(v)
        else:
            out.insert(last_idx + 1, v)
            last_idx += 1
    return out


def check_order(f: Bdd) -> None:
    pos = {v: i for i, v in enumerate(f.order)}
    s = f.store
    for x in s.reachable(f.root):
        if x < 2:
            continue
        if s.var[x] not in pos:
            raise OrderError(f"node variable {s.var[x]} not in order")
        for c in (s.lo[x], s.hi[x]):
            if c >= 2 and (s.var[c] not in pos or pos[s.var[c]] <= pos[s.var[x]]):
                raise OrderError("BDD is not ordered under its order")


def is_reduced(f: Bdd) -> bool:
    s = f.store
    triples = set()
    for x in s.reachable(f.root):
        if x < 2:
            continue
        t = (s.var[x], s.lo[x], s.hi[x])
        if s.lo[x] == s.hi[x] or t in triples:
            return False
        triples.add(t)
    return True


# -- operations ---------------------------------------------------------------

def _same_store(*bdds: Bdd) -> BddStore:
    store = bdds[0].store
    if any(b.store is not store for b in bdds):
        raise ValidationError("BDDs live in different node stores")
    return store


def ite(f: Bdd, g: Bdd, h: Bdd, order: Sequence[int] | None = None) -> Bdd:
    store = _same_store(f, g, h)
    order = merge_orders(f, g, h) if order is None else tuple(order)
    return Bdd(store, store.ite(f.root, g.root, h.root, store.order_id(order)), order)


def bdd_not(f: Bdd) -> Bdd:
    return swap_terminals(f)


def apply(op: str | Callable[[int, int], int], f: Bdd, g: Bdd, order: Sequence[int] | None = None) -> Bdd:
    """Canonical BDD of ``op(f, g)`` for a binary Boolean operator."""
    if isinstance(op, str):
        try:
            table = OPS[op.lower()]
        except KeyError:
            raise ValidationError(f"unknown operator {op!r}") from None
    else:
        table = tuple(int(bool(op(a, b))) for a in (0, 1) for b in (0, 1))
    store = _same_store(f, g)
    order = merge_orders(f, g) if order is None else tuple(order)
    oid = store.order_id(order)

    def branch(a: int) -> int:
        pair = table[2 * a : 2 * a + 2]
        if pair == (0, 0):
            return FALSE
        if pair == (1, 1):
            return TRUE
        if pair == (0, 1):
            return g.root
        return store.ite(g.root, FALSE, TRUE, oid)

    return Bdd(store, store.ite(f.root, branch(1), branch(0), oid), order)


def bdd_and(f: Bdd, g: Bdd) -> Bdd:
    return apply("and", f, g)


def bdd_or(f: Bdd, g: Bdd) -> Bdd:
    return apply("or", f, g)


def bdd_xor(f: Bdd, g: Bdd) -> Bdd:
    return apply("xor", f, g)


def vector_compose(f: Bdd, subs: Mapping[int, Bdd], order: Sequence[int]) -> Bdd:
    """Substitute every ``v in subs`` by ``subs[v]`` simultaneously, result under ``order``."""
    store = f.store
    order = tuple(order)
    oid = store.order_id(order)
    for g in subs.values():
        if g.store is not store:
            raise ValidationError("substituted BDD lives in another store")
    pos = store.positions(oid)
    needed = f.support().difference(subs)
    for g in subs.values():
        needed |= g.support()
    missing = [v for v in needed if v not in pos]
    if missing:
        raise OrderError(f"variables {sorted(missing)} are missing from the target order")
    sub_roots = {v: g.root for v, g in subs.items()}
    var, lo, hi = store.var, store.lo, store.hi
    memo: dict[int, int] = {}
    var_nodes: dict[int, int] = {}

    def literal(v: int) -> int:
        r = sub_roots.get(v)
        if r is not None:
            return r
        r = var_nodes.get(v)
        if r is None:
            r = var_nodes[v] = store.mk(v, FALSE, TRUE)
        return r

    def rec(x: int) -> int:
        if x < 2:
            return x
        r = memo.get(x)
        if r is None:
            r = store.ite(literal(var[x]), rec(hi[x]), rec(lo[x]), oid)
            memo[x] = r
        return r

    return Bdd(store, rec(f.root), order)


def compose(f: Bdd, v: int, g: Bdd, order: Sequence[int] | None = None) -> Bdd:
    """Replace variable ``v`` of ``f`` by the function ``g``."""
    _same_store(f, g)
    if order is None:
        order = merge_orders(f, g)
    return vector_compose(f, {v: g}, order)


def transfer(f: Bdd, order: Sequence[int]) -> Bdd:
    """Same function rebuilt under another order (any order containing the support)."""
    order = tuple(order)
    if order == f.order:
        return f
    return vector_compose(f, {}, order)


def restrict(f: Bdd, v: int, value: bool) -> Bdd:
    store = f.store
    var, lo, hi = store.var, store.lo, store.hi
    memo: dict[int, int] = {}

    def rec(x: int) -> int:
        if x < 2:
            return x
        r = memo.get(x)
        if r is None:
            if var[x] == v:
                r = hi[x] if value else lo[x]
            else:
                r = store.mk(var[x], rec(lo[x]), rec(hi[x]))
            memo[x] = r
        return r

    return Bdd(store, rec(f.root), f.order)


def reorder_var_last(f: Bdd, v: int) -> Bdd:
    """Move ``v`` to the end of the order, keeping the function."""
    if v not in f.order or f.order[-1] == v:
        return f
    new_order = tuple(x for x in f.order if x != v) + (v,)
    if v not in f.support():
        return transfer(f, new_order)
    f0, f1 = restrict(f, v, False), restrict(f, v, True)
    store = f.store
    oid = store.order_id(new_order)
    xv = store.mk(v, FALSE, TRUE)
    return Bdd(store, store.ite(xv, f1.root, f0.root, oid), new_order)


def _rebuild(f: Bdd, node_fn) -> Bdd:
    store = f.store
    lo, hi = store.lo, store.hi
    memo: dict[int, int] = {}

    def rec(x: int) -> int:
        if x < 2:
            return node_fn(x, None, None)
        r = memo.get(x)
        if r is None:
            r = node_fn(x, rec(lo[x]), rec(hi[x]))
            memo[x] = r
        return r

    return Bdd(store, rec(f.root), f.order)


def flip_var_branches(f: Bdd, v: int) -> Bdd:
    """BDD of ``x -> f(x with v negated)``: swap LO/HI on every v-node."""
    store = f.store

    def node(x, l, h):
        if x < 2:
            return x
        if store.var[x] == v:
            return store.mk(v, h, l)
        return store.mk(store.var[x], l, h)

    return _rebuild(f, node)


def swap_terminals(f: Bdd) -> Bdd:
    """BDD of ``not f``, obtained by exchanging the two terminals."""
    store = f.store

    def node(x, l, h):
        if x < 2:
            return 1 - x
        return store.mk(store.var[x], l, h)

    return _rebuild(f, node)


# -- evaluation ---------------------------------------------------------------

def evaluate(f: Bdd, assignment: int | Mapping[int, int], width: int | None = None) -> int:
    """Follow LO on 0 and HI on 1 from the root.

    ``assignment`` is either an int (bit v is variable v) or a mapping.
    """
    store = f.store
    x = f.root
    if isinstance(assignment, Mapping):
        while x >= 2:
            v = store.var[x]
            if v not in assignment:
                raise ValidationError(f"assignment is missing variable {v}")
            x = store.hi[x] if assignment[v] else store.lo[x]
        return x
    if width is not None:
        missing = [v for v in f.support() if v >= width]
        if missing:
            raise ValidationError(f"assignment of width {width} misses variables {missing}")
    while x >= 2:
        x = store.hi[x] if assignment >> store.var[x] & 1 else store.lo[x]
    return x


class CompiledBdd:
    """Flat arrays for vectorised evaluation of one BDD."""

    __slots__ = ("var", "lo", "hi", "root", "depth")

    def __init__(self, f: Bdd):
        store = f.store
        nodes = store.reachable(f.root)
        local = {FALSE: 0, TRUE: 1}
        for x in nodes:
            if x >= 2:
                local[x] = len(local)
        m = len(local)
        self.var = np.zeros(m, dtype=np.uint64)
        self.lo = np.arange(m, dtype=np.int64)
        self.hi = np.arange(m, dtype=np.int64)
        for x, i in local.items():
            if x >= 2:
                self.var[i] = store.var[x]
                self.lo[i] = local[store.lo[x]]
                self.hi[i] = local[store.hi[x]]
        self.root = local[f.root] if f.root >= 2 else f.root
        self.depth = len(f.support())

    def evaluate_many(self, states: np.ndarray) -> np.ndarray:
        cur = np.full(states.shape, self.root, dtype=np.int64)
        one = np.uint64(1)
        for _ in range(self.depth):
            bits = (states >> self.var[cur]) & one
            cur = np.where(bits.astype(bool), self.hi[cur], self.lo[cur])
        return cur.astype(np.uint64)


def evaluate_many(f: Bdd, states: np.ndarray) -> np.ndarray:
    return CompiledBdd(f).evaluate_many(np.asarray(states, dtype=np.uint64))


def truth_table(f: Bdd, variables: Sequence[int]) -> list[int]:
    """Oracle helper: f over all assignments of ``variables`` (bit i = variables[i])."""
    out = []
    for x in range(1 << len(variables)):
        a = {v: x >> i & 1 for i, v in enumerate(variables)}
        for v in f.support():
            a.setdefault(v, 0)
        out.append(evaluate(f, a))
    return out


# -- serialization ------------------------------------------------------------

def serialize(f: Bdd) -> list[str]:
    """Deterministic text form: order, nodes children-first, root.

    Local ids: 0 and 1 are the terminals, non-terminals are numbered from 2
    in post-order.
    """
    store = f.store
    local = {FALSE: 0, TRUE: 1}
    lines = ["order " + (",".join(map(str, f.order)) if f.order else "-")]
    for x in store.reachable(f.root):
        if x < 2:
            continue
        local[x] = len(local)
        lines.append(f"node {local[x]} {store.var[x]} {local[store.lo[x]]} {local[store.hi[x]]}")
    lines.append(f"root {local[f.root]}")
    return lines


def copy_into(store: BddStore, f: Bdd) -> Bdd:
    """Copy the reachable part of ``f`` into another store."""
    src = f.store
    ids = {FALSE: FALSE, TRUE: TRUE}
    for x in src.reachable(f.root):
        if x >= 2:
            ids[x] = store.mk(src.var[x], ids[src.lo[x]], ids[src.hi[x]])
    return Bdd(store, ids[f.root], f.order)


def deserialize(store: BddStore, lines: Iterable[str]) -> Bdd:
    order: tuple[int, ...] | None = None
    ids = {0: FALSE, 1: TRUE}
    root = None
    for raw in lines:
        parts = raw.split()
        if not parts:
            continue
        try:
            if parts[0] == "order":
                order = () if parts[1] == "-" else tuple(int(v) for v in parts[1].split(","))
            elif parts[0] == "node":
                i, v, lo, hi = (int(p) for p in parts[1:5])
                if lo not in ids or hi not in ids or i in ids:
                    raise ValidationError(f"bad node record {raw!r}")
                if ids[lo] == ids[hi]:
                    raise ValidationError(f"node {i} is redundant (LO == HI)")
                ids[i] = store.mk(v, ids[lo], ids[hi])
            elif parts[0] == "root":
                root = ids[int(parts[1])]
            else:
                raise ValidationError(f"unknown BDD record {parts[0]!r}")
        except (ValueError, IndexError, KeyError):
            raise ValidationError(f"malformed BDD record {raw!r}") from None
    if order is None or root is None:
        raise ValidationError("BDD blob needs an order and a root")
    f = Bdd(store, root, order)
    check_order(f)
    return f
