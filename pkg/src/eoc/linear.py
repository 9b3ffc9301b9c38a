"""Conjugation of NOT/CNOT/Toffoli gates through the affine stage L.

A conjugated gate stays an *affine controlled flip*
``x -> x xor v * prod_k (a_k . x xor s_k)``: conjugating by an affine map
``A(x) = M x xor c`` sends ``v -> M v``, ``a -> (M^-1)^T a`` and
``s -> s xor a . (M^-1 c)``. Two ways turn the result back into
elementary gates:

* :func:`expand` distributes the product into ``|v| * prod |a_k|`` gates.
  This needs every term's controls to miss its target, which fails once
  target and control supports overlap.
* :func:`pivot_synthesis` computes each form into one of its own bits with
  CNOTs, applies ``|v|`` small gates controlled on those bits, and undoes
  the CNOTs. It is exact in every case.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

from .errors import ConsistencyError, ValidationError
from .gates import AffineGate3, Circuit, ControlledGate, NOT, CNOT, _gf2_apply
from .rewrite import conjugate_by_gate, simplify_gates


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _parity(x: int) -> int:
    return bin(x).count("1") & 1


@dataclass(frozen=True)
class AffineControlledFlip:
    """``x -> x xor targets * prod_k (support_k . x xor const_k)``; masks are ints."""

    targets: int
    controls: tuple[tuple[int, int], ...] = ()

    def apply(self, state: int) -> int:
        for a, s in self.controls:
            if not (_parity(a & state) ^ s):
                return state
        return state ^ self.targets

    def term_count(self) -> int:
        n = bin(self.targets).count("1")
        for a, _ in self.controls:
            n *= bin(a).count("1")
        return n

    def max_bit(self) -> int:
        m = self.targets
        for a, _ in self.controls:
            m |= a
        return m.bit_length() - 1


def lift(gate: ControlledGate) -> AffineControlledFlip:
    if len(gate.controls) > 2:
        raise ValidationError("lift takes NOT/CNOT/Toffoli; factorize larger gates first")
    return AffineControlledFlip(1 << gate.target,
                                tuple((1 << b, 0 if p else 1) for b, p in gate.controls))


# -- layer actions --------------------------------------------------------------

@lru_cache(maxsize=None)
def _local_maps(cols: tuple[int, int, int], shift: int) -> tuple[tuple[int, ...], tuple[int, ...], int]:
    """(M on 3-bit vectors, (M^-1)^T on 3-bit vectors, M^-1 c)."""
    gate = AffineGate3(cols, shift)
    minv = gate.inverse_matrix()
    minv_t = tuple(sum(((minv[j] >> i) & 1) << j for j in range(3)) for i in range(3))
    fwd = tuple(_gf2_apply(cols, x) for x in range(8))
    back_t = tuple(_gf2_apply(minv_t, x) for x in range(8))
    return fwd, back_t, _gf2_apply(minv, shift)


class LayerAction:
    """Block-diagonal affine action of one layer, ready for fast transport."""

    def __init__(self, layer: Sequence[AffineGate3]):
        self.blocks = []
        for g in layer:
            fwd, back_t, minv_c = _local_maps(g.matrix, g.shift)
            j1, j2, j3 = g.bitlines
            self.blocks.append((j1, j2, j3, fwd, back_t, minv_c))

    @staticmethod
    def _map(mask: int, j1: int, j2: int, j3: int, table) -> int:
        local = (mask >> j1 & 1) | (mask >> j2 & 1) << 1 | (mask >> j3 & 1) << 2
        if not local:
            return mask
        y = table[local]
        mask &= ~((1 << j1) | (1 << j2) | (1 << j3))
        return mask | (y & 1) << j1 | (y >> 1 & 1) << j2 | (y >> 2 & 1) << j3

    def forward(self, v: int) -> int:
        for j1, j2, j3, fwd, _, _ in self.blocks:
            v = self._map(v, j1, j2, j3, fwd)
        return v

    def transport_form(self, a: int, s: int) -> tuple[int, int]:
        out = a
        for j1, j2, j3, _, back_t, minv_c in self.blocks:
            local = (a >> j1 & 1) | (a >> j2 & 1) << 1 | (a >> j3 & 1) << 2
            if local:
                s ^= _parity(local & minv_c)
                out = self._map(out, j1, j2, j3, back_t)
        return out, s


def conjugate_affine_layer(g: AffineControlledFlip, layer: Sequence[AffineGate3] | LayerAction) -> AffineControlledFlip:
    """Flip equal to ``A g A^-1`` (execute ``A^-1``, then g, then A)."""
    act = layer if isinstance(layer, LayerAction) else LayerAction(layer)
    return AffineControlledFlip(act.forward(g.targets),
                                tuple(act.transport_form(a, s) for a, s in g.controls))


# -- back to elementary gates ---------------------------------------------------

def expand(g: AffineControlledFlip) -> list[ControlledGate]:
    """Distribute the product of forms into elementary gates.

    A form's constant becomes a negative control on its lowest support bit.
    Terms that need a bit both ways vanish; repeated bits merge.
    Raises ConsistencyError when a term would control on its own target.
    """
    terms: list[dict[int, bool]] = [{}]
    for a, s in g.controls:
        bits = _bits(a)
        if not bits:
            if s:
                continue
            return []
        new_terms = []
        for term in terms:
            for b in bits:
                pol = not (s and b == bits[0])
                if term.get(b, pol) != pol:
                    continue
                t2 = dict(term)
                t2[b] = pol
                new_terms.append(t2)
        terms = new_terms
    out = []
    for u in _bits(g.targets):
        for term in terms:
            if u in term:
                raise ConsistencyError(f"expansion puts target {u} among its own controls")
            out.append(ControlledGate(u, tuple(term.items())))
    return out


def _normalise_forms(controls):
    """Drop constant forms and merge equal ones. None means the flip never fires."""
    forms = []
    for a, s in controls:
        if a == 0:
            if s:
                continue
            return None
        forms.append((a, s))
    if len(forms) == 2:
        (a1, s1), (a2, s2) = forms
        if a1 == a2:
            if s1 != s2:
                return None
            forms = [(a1, s1)]
        elif a1 & a2 == a1:
            forms = [(a1, s1), (a1 ^ a2, s1 ^ s2 ^ 1)]
        elif a1 & a2 == a2:
            forms = [(a2, s2), (a1 ^ a2, s1 ^ s2 ^ 1)]
    if len(forms) > 2:
        raise ValidationError("pivot synthesis handles at most two control forms")
    return forms


def pivot_synthesis(g: AffineControlledFlip) -> list[ControlledGate]:
    """Exact synthesis: CNOTs gather each form into a pivot bit, then the middle
    gates flip the targets, then the CNOTs are undone."""
    forms = _normalise_forms(g.controls)
    if forms is None or not g.targets:
        return []
    if len(forms) == 2:
        # supports now differ both ways; pick pivots outside the other support
        (a1, _), (a2, _) = forms
        p1 = _bits(a1 & ~a2)[0]
        p2 = _bits(a2 & ~a1)[0]
        pivots = [p1, p2]
    else:
        pivots = [_bits(a)[0] for a, _ in forms]
    gather = []
    targets = g.targets
    for (a, _), p in zip(forms, pivots):
        gather.extend(CNOT(b, p) for b in _bits(a) if b != p)
        # S v: the pivot coordinate becomes a . v, which is 0
        if _parity(a & g.targets):
            raise ConsistencyError("control form is not orthogonal to the targets")
        targets &= ~(1 << p)
    ctrl = tuple((p, not s) for (_, s), p in zip(forms, pivots))
    middle = [ControlledGate(u, ctrl) for u in _bits(targets)]
    return gather + middle + gather[::-1]


def _expand_ok(g: AffineControlledFlip) -> bool:
    sup = 0
    for a, _ in g.controls:
        sup |= a
    return not (sup & g.targets)


def to_gates(g: AffineControlledFlip, method: str = "auto") -> tuple[list[ControlledGate], str]:
    if method == "expand":
        return simplify_gates(expand(g)), "expand"
    if method == "pivot":
        return pivot_synthesis(g), "pivot"
    if method != "auto":
        raise ValidationError(f"unknown expansion method {method!r}")
    piv = pivot_synthesis(g)
    if _expand_ok(g) and g.term_count() <= len(piv):
        return simplify_gates(expand(g)), "expand"
    return piv, "pivot"


@dataclass
class ConjugationStats:
    seed: str
    layer_factors: list[float] = field(default_factory=list)
    term_count: int = 1
    gate_count: int = 0
    method: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        factors = ",".join(f"{f:g}" for f in self.layer_factors)
        return (f"seed={self.seed} factors={factors} terms={self.term_count} "
                f"gates={self.gate_count} method={self.method} seconds={self.seconds:.6f}")


def _layers_of(key_or_layers) -> list[LayerAction]:
    layers = getattr(key_or_layers, "linear_layers", key_or_layers)
    if callable(layers):
        layers = layers()
    return [l if isinstance(l, LayerAction) else LayerAction(l) for l in layers]


def conjugate_flip_through(g: AffineControlledFlip, layers: Sequence[LayerAction]) -> tuple[AffineControlledFlip, list[float]]:
    factors = []
    for act in layers:
        before = g.term_count()
        g = conjugate_affine_layer(g, act)
        factors.append(g.term_count() / before if before else 0.0)
    return g, factors


def conjugate_through_L(gate: ControlledGate, key, method: str = "auto", width: int | None = None) -> tuple[Circuit, ConjugationStats]:
    """Elementary gates equal to ``L gate L^-1`` plus expansion statistics.

    ``key`` is a CipherKey, a JointRegister, or a list of layers.
    """
    t0 = time.perf_counter()
    layers = _layers_of(key)
    n = width or getattr(key, "n", None)
    flip, factors = conjugate_flip_through(lift(gate), layers)
    gates, used = to_gates(flip, method)
    stats = ConjugationStats(gate.kind, factors, flip.term_count(), len(gates), used,
                             time.perf_counter() - t0)
    if n is None:
        n = max([gate.max_bit()] + [x.max_bit() for x in gates]) + 1
    return Circuit(n, tuple(gates)), stats


# -- linear synthesis -------------------------------------------------------------

def synthesize_linear(columns: Sequence[int], shift: int = 0, n: int | None = None) -> Circuit:
    """CNOT/NOT circuit for ``y = M x xor c`` by Gaussian elimination.

    ``columns[j]`` is the image of basis vector j. At most ``n**2`` CNOTs
    plus one NOT per set bit of ``shift``.
    """
    n = len(columns) if n is None else n
    if len(columns) != n:
        raise ValidationError("need one column per bitline")
    rows = [sum(((columns[j] >> i) & 1) << j for j in range(n)) for i in range(n)]
    ops = []
    for j in range(n):
        if not rows[j] >> j & 1:
            r = next((r for r in range(j + 1, n) if rows[r] >> j & 1), None)
            if r is None:
                raise ValidationError("matrix is singular over GF(2)")
            rows[j] ^= rows[r]
            ops.append((r, j))
        for i in range(n):
            if i != j and rows[i] >> j & 1:
                rows[i] ^= rows[j]
                ops.append((j, i))
    gates = [CNOT(c, t) for c, t in reversed(ops)]
    gates += [NOT(b) for b in _bits(shift)]
    return Circuit(n, tuple(gates))


def probe_affine(fn: Callable[[int], int], n: int) -> tuple[list[int], int]:
    """Recover ``(columns, shift)`` of an affine map from ``n + 1`` evaluations."""
    c = fn(0)
    return [fn(1 << j) ^ c for j in range(n)], c


# -- rewrite-engine path ----------------------------------------------------------

def _cnot_matrix(c: int, t: int) -> tuple[int, int, int]:
    cols = [1, 2, 4]
    cols[c] |= 1 << t
    return tuple(cols)


def _mul(a, b):
    return tuple(_gf2_apply(a, col) for col in b)


@lru_cache(maxsize=None)
def local_cnot_table() -> dict[tuple[int, int, int], tuple[tuple[int, int], ...]]:
    """Shortest local CNOT sequence (execution order) for each 3x3 invertible matrix."""
    ident = (1, 2, 4)
    paths = {ident: ()}
    frontier = [ident]
    moves = [(c, t) for c in range(3) for t in range(3) if c != t]
    while frontier:
        nxt = []
        for m in frontier:
            for c, t in moves:
                m2 = _mul(_cnot_matrix(c, t), m)
                if m2 not in paths:
                    paths[m2] = paths[m] + ((c, t),)
                    nxt.append(m2)
        frontier = nxt
    return paths


def affine_gate_to_cnots(g: AffineGate3) -> list[ControlledGate]:
    bl = g.bitlines
    gates = [CNOT(bl[c], bl[t]) for c, t in local_cnot_table()[g.matrix]]
    gates += [NOT(bl[i]) for i in range(3) if g.shift >> i & 1]
    return gates


def conjugate_by_rewriting(gate: ControlledGate, layers: Sequence[Sequence[AffineGate3]],
                           simplify_every: int = 1) -> list[ControlledGate]:
    """Cross-check path: decompose L into CNOT/NOT gates and push each one
    through the gate list with collision debris."""
    gates = [gate]
    count = 0
    for layer in layers:
        for ag in layer:
            for e in affine_gate_to_cnots(ag):
                gates = conjugate_by_gate(e, gates)
                count += 1
                if simplify_every and count % simplify_every == 0:
                    gates = simplify_gates(gates)
    return simplify_gates(gates)
