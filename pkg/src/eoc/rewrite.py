"""Equivalence rules for controlled gates: collisions, simplification,
polarity mutation and factorization.

Every rule is exact; the tests check each one against brute-force truth
tables.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from .errors import AncillaError, ValidationError
from .gates import ControlledGate, apply_gate

NO_COLLISION = "no-collision"
HEAD_ON_HEAD = "head-on-head"
ONE_HEAD = "one-head"
TWO_HEAD = "two-head"


def classify_collision(g: ControlledGate, h: ControlledGate) -> str:
    if g.target == h.target:
        return HEAD_ON_HEAD
    g_hits = g.target in h.control_bits
    h_hits = h.target in g.control_bits
    if g_hits and h_hits:
        return TWO_HEAD
    if g_hits or h_hits:
        return ONE_HEAD
    return NO_COLLISION


def commutes(g: ControlledGate, h: ControlledGate) -> bool:
    """Syntactic commutation test (sufficient, not necessary)."""
    return classify_collision(g, h) in (NO_COLLISION, HEAD_ON_HEAD)


def product_controls(*groups: Iterable[tuple[int, bool]]) -> tuple[tuple[int, bool], ...] | None:
    """AND of control literals; None when a bit is required both ways (empty product)."""
    merged: dict[int, bool] = {}
    for group in groups:
        for b, p in group:
            if merged.get(b, p) != p:
                return None
            merged[b] = p
    return tuple(sorted(merged.items()))


def _gate_or_none(target: int, controls) -> list[ControlledGate]:
    if controls is None:
        return []
    return [ControlledGate(target, controls)]


def debris(g: ControlledGate, h: ControlledGate) -> list[ControlledGate]:
    """Gates D with execution ``[g, h] == [h, *D, g]``."""
    kind = classify_collision(g, h)
    if kind in (NO_COLLISION, HEAD_ON_HEAD):
        return []
    t, s = g.target, h.target
    x_tail = [c for c in g.controls if c[0] != s]
    y_tail = [c for c in h.controls if c[0] != t]
    if kind == ONE_HEAD:
        if t in h.control_bits:
            return _gate_or_none(s, product_controls(g.controls, y_tail))
        return _gate_or_none(t, product_controls(x_tail, h.controls))
    pol_s = dict(g.controls)[s]
    pol_t = dict(h.controls)[t]
    out = _gate_or_none(t, product_controls(x_tail, y_tail, [(s, pol_s)]))
    out += _gate_or_none(s, product_controls(x_tail, y_tail, [(t, pol_t)]))
    return out


def commute_past(g: ControlledGate, h: ControlledGate) -> tuple[ControlledGate, list[ControlledGate], ControlledGate]:
    """Swap an adjacent pair: executing ``[g, h]`` equals ``[h, *debris, g]``."""
    return h, debris(g, h), g


def conjugate_by_gate(c: ControlledGate, gates: Sequence[ControlledGate]) -> list[ControlledGate]:
    """Execution list equal to ``[c, *gates, c]`` (``c`` is an involution)."""
    out: list[ControlledGate] = []
    for g in gates:
        out.append(g)
        out.extend(debris(c, g))
    return out


# -- simplification -----------------------------------------------------------

def _merge(g: ControlledGate, h: ControlledGate) -> list[ControlledGate] | None:
    """Replacement for an adjacent same-target pair, or None if no rule fits."""
    if g.target != h.target:
        return None
    if g == h:
        return []
    cg, ch = dict(g.controls), dict(h.controls)
    if cg.keys() == ch.keys():
        diff = [b for b in cg if cg[b] != ch[b]]
        if len(diff) == 1:
            rest = tuple((b, p) for b, p in g.controls if b != diff[0])
            return [ControlledGate(g.target, rest)]
        return None
    small, big = (cg, ch) if len(cg) < len(ch) else (ch, cg)
    if len(big) == len(small) + 1 and all(big.get(b) == p for b, p in small.items()):
        (extra,) = [b for b in big if b not in small]
        ctrl = tuple(small.items()) + ((extra, not big[extra]),)
        return [ControlledGate(g.target, ctrl)]
    return None


def cost(gates: Sequence[ControlledGate]) -> tuple[int, int]:
    return len(gates), sum(len(g.controls) for g in gates)


def simplify_gates(gates: Sequence) -> list:
    """Annihilation, control elimination and control reversal over commuting windows.

    Each applied rule removes one gate, so the loop terminates. Non-controlled
    gates are left in place and act as barriers.
    """
    out = list(gates)
    changed = True
    while changed:
        changed = False
        i = 0
        while i < len(out):
            g = out[i]
            if not isinstance(g, ControlledGate):
                i += 1
                continue
            hit = False
            for j in range(i + 1, len(out)):
                h = out[j]
                if not isinstance(h, ControlledGate):
                    break
                rep = _merge(g, h)
                if rep is not None:
                    # everything between i and j commutes with g, so g moves next to h
                    out[j : j + 1] = rep
                    del out[i]
                    hit = changed = True
                    break
                if not commutes(g, h):
                    break
            if not hit:
                i += 1
    return out


def simplify(circuit):
    return circuit.with_gates(simplify_gates(circuit.gates))


# -- polarity mutations -------------------------------------------------------

def _local_table(gates: Sequence[ControlledGate], bits: Sequence[int]) -> tuple[int, ...]:
    table = []
    for x in range(1 << len(bits)):
        state = 0
        for i, b in enumerate(bits):
            if x >> i & 1:
                state |= 1 << b
        for g in gates:
            state = apply_gate(g, state)
        table.append(state)
    return tuple(table)


def _with_polarities(g: ControlledGate, pols: Sequence[bool]) -> ControlledGate:
    return ControlledGate(g.target, tuple((b, p) for (b, _), p in zip(g.controls, pols)))


def polarity_mutations(g: ControlledGate, h: ControlledGate) -> list[tuple[ControlledGate, ControlledGate]]:
    """All recolourings ``(g', h')`` of the pair (same bits, other control
    polarities) with the same action as ``[g, h]``; found by enumeration."""
    bits = sorted(g.bits | h.bits)
    ref = _local_table([g, h], bits)
    out = []
    ng, nh = len(g.controls), len(h.controls)
    for pg in itertools.product((True, False), repeat=ng):
        for ph in itertools.product((True, False), repeat=nh):
            g2, h2 = _with_polarities(g, pg), _with_polarities(h, ph)
            if (g2, h2) == (g, h):
                continue
            if _local_table([g2, h2], bits) == ref:
                out.append((g2, h2))
    return out


def derive_color_rules(max_bits: int = 4, max_controls: int = 2) -> list[dict]:
    """Enumerate gate-pair shapes on ``max_bits`` lines (up to relabelling) and
    group their polarity assignments into classes of equal action.

    One record per shape that has at least one class with two or more
    members; each class is a list of equivalent ``(g, h)`` pairs.
    """
    lines = range(max_bits)
    shapes = []
    for t in lines:
        others = [b for b in lines if b != t]
        for k in range(max_controls + 1):
            shapes.extend((t, bits) for bits in itertools.combinations(others, k))
    seen = set()
    rules = []
    for (t1, b1), (t2, b2) in itertools.product(shapes, repeat=2):
        g = ControlledGate(t1, tuple((b, True) for b in b1))
        h = ControlledGate(t2, tuple((b, True) for b in b2))
        key = _canonical_pair(g, h, max_bits)
        if key in seen:
            continue
        seen.add(key)
        bits = sorted(g.bits | h.bits)
        classes: dict[tuple, list] = {}
        for pg in itertools.product((True, False), repeat=len(b1)):
            for ph in itertools.product((True, False), repeat=len(b2)):
                pair = (_with_polarities(g, pg), _with_polarities(h, ph))
                classes.setdefault(_local_table(pair, bits), []).append(pair)
        multi = [c for c in classes.values() if len(c) > 1]
        if multi:
            rules.append({"shape": (g, h), "collision": classify_collision(g, h), "classes": multi})
    return rules


def _canonical_pair(g, h, width):
    best = None
    for perm in itertools.permutations(range(width)):
        key = (perm[g.target], tuple(sorted(perm[b] for b in g.control_bits)),
               perm[h.target], tuple(sorted(perm[b] for b in h.control_bits)))
        if best is None or key < best:
            best = key
    return best


# -- factorization ------------------------------------------------------------

def factorize(gate: ControlledGate, max_controls: int = 2, ancillas: Sequence[int] = (),
              split: int | None = None) -> list[ControlledGate]:
    """Split a many-control gate into gates with at most ``max_controls`` controls.

    Uses ``T(t; XY) = [T(t; Y+a), T(a; X), T(t; Y+a), T(a; X)]`` with ``a`` a
    borrowed line whose value is restored (it need not start at 0).
    ``split`` is ``|X|``; different choices give different but equivalent
    circuits. Lines of the gate itself are borrowed in the recursive steps.
    """
    if max_controls < 2:
        raise ValidationError("max_controls must be at least 2")
    k = len(gate.controls)
    if k <= max_controls:
        return [gate]
    free = [a for a in ancillas if a not in gate.bits]
    if not free:
        raise AncillaError(f"factorizing a {k}-control gate needs a spare bitline")
    a, rest = free[0], free[1:]
    s = split if split is not None else (k + 1) // 2
    if not 2 <= s <= k - 1:
        raise ValidationError(f"split must lie in [2, {k - 1}], got {s}")
    x_tail, y_tail = gate.controls[:s], gate.controls[s:]
    left = ControlledGate(gate.target, tuple(y_tail) + ((a, True),))
    right = ControlledGate(a, tuple(x_tail))
    left_parts = factorize(left, max_controls, rest + [b for b, _ in x_tail])
    right_parts = factorize(right, max_controls, rest + [gate.target] + [b for b, _ in y_tail])
    return left_parts + right_parts + left_parts + right_parts
