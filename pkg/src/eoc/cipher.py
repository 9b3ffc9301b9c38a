"""Two-stage cipher E = N o L on a padded register of n = 3**q bitlines.

The register holds ``[data | ancilla | padding]`` at bitlines ``0..n-1``.
L is ``ceil(log2 n)`` layers of inflationary affine gates and N is ``q``
layers of super-nonlinear gates; layer ``l`` acts on the triplets of
:func:`layer_triplets` mapped through the key permutation.
"""

from __future__ import annotations

import math
import secrets
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gates import AffineGate3, Circuit, Gate3, affine_from_lut, invert_circuit
from .gateset import GateSet, default_nonlinear, enumerate_inflationary


def log3_exact(n: int) -> int:
    q, m = 0, 1
    while m < n:
        m *= 3
        q += 1
    if m != n or n < 3:
        raise ValidationError(f"register width {n} is not a power of 3 (>= 3)")
    return q


def make_rng(seed: int | None = None) -> tuple[np.random.Generator, int]:
    """PCG64 generator seeded from a recorded 256-bit seed."""
    if seed is None:
        seed = secrets.randbits(256)
    return np.random.Generator(np.random.PCG64(int(seed))), int(seed)


@dataclass(frozen=True)
class RegisterLayout:
    n: int
    nd: int
    na: int
    ng: int

    def __post_init__(self):
        log3_exact(self.n)
        if min(self.nd, self.na, self.ng) < 0 or self.nd + self.na + self.ng != self.n:
            raise ValidationError(f"layout {self} does not partition {self.n} bitlines")
        if 3 * self.ng < 2 * self.n:
            raise ValidationError(f"padding fraction {self.ng}/{self.n} is below 2/3")

    @classmethod
    def from_counts(cls, n: int, nd: int, na: int = 0) -> "RegisterLayout":
        return cls(n, nd, na, n - nd - na)

    @property
    def q(self) -> int:
        return log3_exact(self.n)

    @property
    def k(self) -> int:
        """Number of plaintext lines (data + ancilla)."""
        return self.nd + self.na

    @property
    def linear_depth(self) -> int:
        return math.ceil(math.log2(self.n))

    def assemble(self, x_d: int, x_a: int, r: int) -> int:
        for name, v, w in (("data", x_d, self.nd), ("ancilla", x_a, self.na), ("padding", r, self.ng)):
            if v < 0 or v >> w:
                raise ValidationError(f"{name} value {v} does not fit in {w} bits")
        return x_d | x_a << self.nd | r << self.k

    def split(self, state: int) -> tuple[int, int, int]:
        return (state & ((1 << self.nd) - 1),
                state >> self.nd & ((1 << self.na) - 1),
                state >> self.k & ((1 << self.ng) - 1))


def layer_triplets(q: int, layer: int) -> list[tuple[int, int, int]]:
    """Index triples that differ only in trit ``((layer-1) mod q)``."""
    if q < 1 or layer < 1:
        raise ValidationError("layer_triplets needs q >= 1 and layer >= 1")
    pos = (layer - 1) % q
    step = 3 ** pos
    return [(i, i + step, i + 2 * step) for i in range(3 ** q) if (i // step) % 3 == 0]


@dataclass(frozen=True)
class CipherKey:
    layout: RegisterLayout
    permutation: tuple[int, ...]
    linear_layers: tuple[tuple[AffineGate3, ...], ...]
    nonlinear_layers: tuple[tuple[Gate3, ...], ...]
    seed: int = 0
    nonlinear_permutation: tuple[int, ...] | None = None
    gateset_name: str = "strict"

    def __post_init__(self):
        n = self.layout.n
        for perm in (self.permutation, self.nonlinear_permutation):
            if perm is not None and sorted(perm) != list(range(n)):
                raise ValidationError("key permutation is not a bijection on the bitlines")
        for layers in (self.linear_layers, self.nonlinear_layers):
            for layer in layers:
                covered = sorted(b for g in layer for b in g.bitlines)
                if covered != list(range(n)):
                    raise ValidationError("a key layer does not partition the bitlines")

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def perm_n(self) -> tuple[int, ...]:
        return self.nonlinear_permutation or self.permutation

    def linear_circuit(self) -> Circuit:
        return Circuit(self.n, tuple(g.to_gate3() for layer in self.linear_layers for g in layer))

    def nonlinear_circuit(self) -> Circuit:
        return Circuit(self.n, tuple(g for layer in self.nonlinear_layers for g in layer))

    def circuit(self) -> Circuit:
        return self.linear_circuit() + self.nonlinear_circuit()

    def apply(self, state: int) -> int:
        return self.circuit().apply(state)

    def apply_many(self, states: np.ndarray) -> np.ndarray:
        return self.circuit().apply_many(states)

    def invert_many(self, states: np.ndarray) -> np.ndarray:
        return invert_circuit(self.circuit()).apply_many(states)


def sample_permutation(layout: RegisterLayout, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform permutation whose first-layer triplets hold at most one
    data/ancilla bitline each (so at least two padding bitlines)."""
    n, k = layout.n, layout.k
    n_trip = n // 3
    if k > n_trip:
        raise ValidationError("too many data/ancilla lines to spread over first-layer triplets")
    perm = [-1] * n
    chosen = rng.permutation(n_trip)[:k]
    for line, trip in zip(range(k), chosen):
        perm[3 * int(trip) + int(rng.integers(3))] = line
    padding = k + rng.permutation(layout.ng)
    free = [i for i in range(n) if perm[i] < 0]
    for i, line in zip(free, padding):
        perm[i] = int(line)
    return tuple(perm)


def layer_bitlines(perm: tuple[int, ...], q: int, layer: int) -> list[tuple[int, int, int]]:
    return [tuple(sorted((perm[i], perm[j], perm[k]))) for i, j, k in layer_triplets(q, layer)]


def keygen(layout: RegisterLayout, seed: int | None = None,
           inflationary: GateSet | None = None, nonlinear: GateSet | None = None,
           stage_permutations: bool = False, linear_depth: int | None = None) -> CipherKey:
    """Draw a key: permutation plus one uniform gate per triplet per layer.

    ``linear_depth`` overrides the number of linear layers; setting it to 1
    is the experimental single-linear-layer mode.
    """
    rng, seed = make_rng(seed)
    inflationary = inflationary or enumerate_inflationary()
    nonlinear = nonlinear or default_nonlinear()
    if not len(inflationary) or not len(nonlinear):
        raise ValidationError("gate sets must be non-empty")
    q = layout.q
    perm = sample_permutation(layout, rng)
    perm_n = tuple(int(v) for v in rng.permutation(layout.n)) if stage_permutations else None
    depth = layout.linear_depth if linear_depth is None else linear_depth
    lin_layers = []
    for layer in range(1, depth + 1):
        gates = []
        for bl in layer_bitlines(perm, q, layer):
            lut = inflationary.members[int(rng.integers(len(inflationary)))]
            cols, shift = affine_from_lut(lut)
            gates.append(AffineGate3(cols, shift, bl))
        lin_layers.append(tuple(gates))
    non_layers = []
    for layer in range(1, q + 1):
        gates = []
        for bl in layer_bitlines(perm_n or perm, q, layer):
            lut = nonlinear.members[int(rng.integers(len(nonlinear)))]
            gates.append(Gate3(bl, lut))
        non_layers.append(tuple(gates))
    return CipherKey(layout, perm, tuple(lin_layers), tuple(non_layers), seed, perm_n, nonlinear.predicate)


def identity_key(layout: RegisterLayout) -> CipherKey:
    """Degenerate key with every gate the identity (for tests)."""
    q = layout.q
    perm = tuple(range(layout.n))
    lin = tuple(tuple(AffineGate3((1, 2, 4), 0, bl) for bl in layer_bitlines(perm, q, l))
                for l in range(1, layout.linear_depth + 1))
    non = tuple(tuple(Gate3(bl, tuple(range(8))) for bl in layer_bitlines(perm, q, l))
                for l in range(1, q + 1))
    return CipherKey(layout, perm, lin, non, 0)


@dataclass(frozen=True)
class Ciphertext:
    bits: int
    n: int
    register: int = 0

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.n:
            raise ValidationError(f"ciphertext does not fit in {self.n} bits")


def encrypt(key: CipherKey, x_d: int, x_a: int = 0, rng: np.random.Generator | None = None,
            padding: int | None = None) -> Ciphertext:
    lay = key.layout
    if padding is None:
        if rng is None:
            rng, _ = make_rng()
        padding = int.from_bytes(rng.bytes((lay.ng + 7) // 8), "little") & ((1 << lay.ng) - 1)
    return Ciphertext(key.apply(lay.assemble(x_d, x_a, padding)), lay.n)


def decrypt(key: CipherKey, y: Ciphertext | int) -> tuple[int, int, int]:
    bits = y.bits if isinstance(y, Ciphertext) else int(y)
    if isinstance(y, Ciphertext) and y.n != key.n:
        raise ValidationError(f"ciphertext width {y.n} does not match key width {key.n}")
    if bits < 0 or bits >> key.n:
        raise ValidationError(f"ciphertext does not fit in {key.n} bits")
    return key.layout.split(invert_circuit(key.circuit()).apply(bits))


def random_states(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    if n > 63:
        raise ValidationError("vectorised states support at most 63 bitlines")
    return rng.integers(0, 1 << n, size=count, dtype=np.uint64)


def avalanche_probe(key: CipherKey, samples: int, rng: np.random.Generator | None = None,
                    circuit: Circuit | None = None) -> np.ndarray:
    """SAC matrix: entry (i, j) is the rate at which flipping input bit i flips output bit j."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = rng or make_rng()[0]
    circ = circuit or key.circuit()
    n = circ.width
    x = random_states(n, samples, rng)
    y = circ.apply_many(x)
    sac = np.zeros((n, n))
    bits = np.arange(n, dtype=np.uint64)
    for i in range(n):
        d = y ^ circ.apply_many(x ^ np.uint64(1 << i))
        sac[i] = ((d[:, None] >> bits[None, :]) & np.uint64(1)).mean(axis=0)
    return sac


# -- joint registers ----------------------------------------------------------

@dataclass(frozen=True)
class JointRegister:
    """One or two keys side by side; register r starts at ``offsets[r]``."""

    keys: tuple[CipherKey, ...]
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if len(self.keys) not in (1, 2):
            raise ValidationError("one or two keys are supported")
        offs, o = [], 0
        for k in self.keys:
            offs.append(o)
            o += k.n
        object.__setattr__(self, "offsets", tuple(offs))

    @property
    def n(self) -> int:
        return sum(k.n for k in self.keys)

    @property
    def k(self) -> int:
        return sum(k.layout.k for k in self.keys)

    def register_of(self, line: int) -> int:
        return 0 if len(self.keys) == 1 or line < self.offsets[1] else 1

    def plaintext_line(self, i: int) -> int:
        """Joint bitline of plaintext line ``i`` (register A lines first)."""
        ka = self.keys[0].layout.k
        if i < ka:
            return i
        if len(self.keys) == 2 and i < ka + self.keys[1].layout.k:
            return self.offsets[1] + i - ka
        raise ValidationError(f"plaintext line {i} out of range")

    def _joined(self, per_key) -> tuple[tuple, ...]:
        depth = max(len(per_key(k)) for k in self.keys)
        out = []
        for l in range(depth):
            gates = []
            for key, off in zip(self.keys, self.offsets):
                layers = per_key(key)
                if l < len(layers):
                    gates.extend(_shift_gate(g, off) for g in layers[l])
            out.append(tuple(gates))
        return tuple(out)

    def linear_layers(self) -> tuple[tuple[AffineGate3, ...], ...]:
        return self._joined(lambda k: k.linear_layers)

    def nonlinear_layers(self) -> tuple[tuple[Gate3, ...], ...]:
        return self._joined(lambda k: k.nonlinear_layers)

    def first_nonlinear_triplet(self, line: int) -> tuple[int, int, int]:
        for g in self.nonlinear_layers()[0]:
            if line in g.bitlines:
                return g.bitlines
        raise ValidationError(f"line {line} not covered")

    def circuit(self) -> Circuit:
        gates = [g.to_gate3() for layer in self.linear_layers() for g in layer]
        gates += [g for layer in self.nonlinear_layers() for g in layer]
        return Circuit(self.n, tuple(gates), len(self.keys))

    def assemble(self, plain: int, paddings: list[int]) -> int:
        state = 0
        for key, off, pad in zip(self.keys, self.offsets, paddings):
            k = key.layout.k
            state |= key.layout.assemble(plain & ((1 << key.layout.nd) - 1),
                                         (plain >> key.layout.nd) & ((1 << key.layout.na) - 1), pad) << off
            plain >>= k
        return state

    def split(self, state: int) -> tuple[int, list[int]]:
        plain, pads, shift = 0, [], 0
        for key, off in zip(self.keys, self.offsets):
            d, a, r = key.layout.split(state >> off & ((1 << key.n) - 1))
            plain |= (d | a << key.layout.nd) << shift
            shift += key.layout.k
            pads.append(r)
        return plain, pads

    def plaintext_mask(self) -> int:
        m = 0
        for key, off in zip(self.keys, self.offsets):
            m |= ((1 << key.layout.k) - 1) << off
        return m


def _shift_gate(g, off: int):
    bl = tuple(b + off for b in g.bitlines)
    if isinstance(g, AffineGate3):
        return AffineGate3(g.matrix, g.shift, bl)
    return Gate3(bl, g.lut)


# -- key file -----------------------------------------------------------------

KEY_MAGIC = "eoc-key 1"


def _matrix_bits(g: AffineGate3) -> str:
    return "".join(str(g.matrix[c] >> r & 1) for r in range(3) for c in range(3))


def format_key(key: CipherKey) -> str:
    lay = key.layout
    lines = [KEY_MAGIC,
             f"n {lay.n} nd {lay.nd} na {lay.na} ng {lay.ng} lL {len(key.linear_layers)} "
             f"lN {len(key.nonlinear_layers)} seed {key.seed:064x} gateset {key.gateset_name}",
             "perm " + " ".join(map(str, key.permutation))]
    if key.nonlinear_permutation is not None:
        lines.append("permN " + " ".join(map(str, key.nonlinear_permutation)))
    for l, layer in enumerate(key.linear_layers, 1):
        for g in layer:
            shift = "".join(str(g.shift >> i & 1) for i in range(3))
            lines.append(f"L {l} {','.join(map(str, g.bitlines))} {_matrix_bits(g)} {shift}")
    for l, layer in enumerate(key.nonlinear_layers, 1):
        for g in layer:
            lines.append(f"N {l} {','.join(map(str, g.bitlines))} {''.join(map(str, g.lut))}")
    return "\n".join(lines) + "\n"


def parse_key(text: str) -> CipherKey:
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0] != KEY_MAGIC:
        raise ValidationError("not a key file (bad magic line)")
    try:
        head = rows[1].split()
        meta = dict(zip(head[::2], head[1::2]))
        lay = RegisterLayout(int(meta["n"]), int(meta["nd"]), int(meta["na"]), int(meta["ng"]))
        n_lin, n_non = int(meta["lL"]), int(meta["lN"])
        perm = tuple(int(v) for v in rows[2].split()[1:])
        perm_n = None
        lin = [[] for _ in range(n_lin)]
        non = [[] for _ in range(n_non)]
        for row in rows[3:]:
            parts = row.split()
            if parts[0] == "permN":
                perm_n = tuple(int(v) for v in parts[1:])
            elif parts[0] == "L":
                bl = tuple(int(v) for v in parts[2].split(","))
                m = parts[3]
                cols = tuple(sum(int(m[3 * r + c]) << r for r in range(3)) for c in range(3))
                shift = sum(int(parts[4][i]) << i for i in range(3))
                lin[int(parts[1]) - 1].append(AffineGate3(cols, shift, bl))
            elif parts[0] == "N":
                bl = tuple(int(v) for v in parts[2].split(","))
                non[int(parts[1]) - 1].append(Gate3(bl, tuple(int(c) for c in parts[3])))
            else:
                raise ValidationError(f"unknown key record {parts[0]!r}")
        return CipherKey(lay, perm, tuple(map(tuple, lin)), tuple(map(tuple, non)),
                         int(meta["seed"], 16), perm_n, meta.get("gateset", "strict"))
    except (KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed key file: {exc}") from None


def save_key(key: CipherKey, path: str | Path) -> None:
    Path(path).write_text(format_key(key))


def load_key(path: str | Path) -> CipherKey:
    return parse_key(Path(path).read_text())
