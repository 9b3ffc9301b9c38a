"""Compile a plaintext circuit F into an evaluator of chips that acts on ciphertexts.

Pipeline: each gate of F is conjugated through L (affine, exact gate
lists), optionally bridged across two registers, seeded as a chip, and
conjugated through the nonlinear layers one at a time. Before layer l a
NOT pair may be injected on every internal wire, meaning two chips that are
consecutive in program order on a shared bitline of their level ``l - 1``
footprints. The halves are absorbed into the upstream outputs and the
downstream inputs.
"""

from __future__ import annotations

import math
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .chips import Chip, build_chip, chip_eval, chip_eval_many, format_chip, parse_chip
from .cipher import CipherKey, JointRegister, make_rng
from .errors import ValidationError
from .gates import CNOT, Circuit, ControlledGate, Gate3
from .linear import conjugate_through_L

MODES = ("single", "two")


@dataclass(frozen=True)
class CompileOptions:
    mode: str = "single"
    randomize: bool = True
    seed: int | None = None
    jobs: int = 1
    expansion: str = "auto"
    bridge: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")


@dataclass
class Provenance:
    seed: int = 0
    key_seeds: tuple[int, ...] = ()
    layers: int = 0
    drawn: int = 0
    counts: tuple[int, ...] = ()      # chips produced by each gate of F
    seconds: float = 0.0


@dataclass
class Evaluator:
    width: int
    chips: list[Chip]
    registers: int = 1
    provenance: Provenance = field(default_factory=Provenance)

    def __len__(self) -> int:
        return len(self.chips)

    def kind_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.chips:
            out[c.seed_kind] = out.get(c.seed_kind, 0) + 1
        return out


# -- two-register bridging --------------------------------------------------------

def swap_unit(a: int, b: int) -> list[ControlledGate]:
    return [CNOT(a, b), CNOT(b, a), CNOT(a, b)]


def _toffoli_ok(joint: JointRegister, lines: Sequence[int]) -> bool:
    regs = [joint.register_of(b) for b in lines]
    if sorted(regs) != [0, 1, 1] and sorted(regs) != [0, 0, 1]:
        return False
    major = 0 if regs.count(0) == 2 else 1
    pair = [b for b, r in zip(lines, regs) if r == major]
    return pair[1] in joint.first_nonlinear_triplet(pair[0])


def _toffoli_swaps(joint: JointRegister, lines: tuple[int, ...]) -> list[tuple[int, int]]:
    """Shortest list of cross-register swaps (at most two) that makes the gate straddle."""
    queue = deque([(lines, [])])
    seen = {lines}
    while queue:
        cur, swaps = queue.popleft()
        if _toffoli_ok(joint, cur):
            return swaps
        if len(swaps) == 2:
            continue
        for i, x in enumerate(cur):
            other = 1 - joint.register_of(x)
            lo = joint.offsets[other]
            for y in range(lo, lo + joint.keys[other].n):
                if y in cur:
                    continue
                nxt = cur[:i] + (y,) + cur[i + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append((nxt, swaps + [(x, y)]))
    raise ValidationError(f"no bridging arrangement for lines {lines}")


def bridge_two_register(gate: ControlledGate, joint: JointRegister) -> list[list[ControlledGate]]:
    """Bridging units whose product equals ``gate``. A SWAP is one unit of 3 CNOTs."""
    if len(joint.keys) != 2:
        raise ValidationError("bridging needs a two-register layout")
    if gate.max_bit() >= joint.n:
        raise ValidationError(f"{gate} does not fit the joint register")
    ctrl = gate.controls
    if not ctrl:
        return [[gate]]
    t = gate.target
    if len(ctrl) == 1:
        (c, p), = ctrl
        if joint.register_of(c) != joint.register_of(t):
            return [[gate]]
        other = 1 - joint.register_of(t)
        b = joint.offsets[other] + (t - joint.offsets[joint.register_of(t)]) % joint.keys[other].n
        return [swap_unit(t, b), [ControlledGate(b, ctrl)], swap_unit(t, b)]
    if len(ctrl) != 2:
        raise ValidationError("bridging supports NOT, CNOT and Toffoli gates")
    lines = (ctrl[0][0], ctrl[1][0], t)
    swaps = _toffoli_swaps(joint, lines)
    where = {b: b for b in lines}
    for x, y in swaps:
        for b, cur in where.items():
            if cur == x:
                where[b] = y
    moved = ControlledGate(where[t], tuple((where[c], p) for c, p in ctrl))
    units = [swap_unit(x, y) for x, y in swaps]
    return units + [[moved]] + units[::-1]


# -- randomization plan -----------------------------------------------------------

def footprint_levels(gate: ControlledGate, layers: Sequence[Sequence[Gate3]]) -> list[frozenset[int]]:
    """Footprint of the chip at levels 0..len(layers) (structure only)."""
    fp = frozenset(gate.bits)
    out = [fp]
    for layer in layers:
        grown = set()
        for g in layer:
            if fp.intersection(g.bitlines):
                grown.update(g.bitlines)
        fp = frozenset(grown)
        out.append(fp)
    return out


def plan_flips(gates: Sequence[ControlledGate], layers: Sequence[Sequence[Gate3]],
               rng: np.random.Generator | None) -> tuple[list[list[tuple[list[int], list[int]]]], int]:
    """Per chip and per layer, the (input NOTs, output NOTs) to absorb; plus the draw count.

    Draw order is layer, then bitline ascending, then program order of the wire.
    """
    depth = len(layers)
    flips = [[([], []) for _ in range(depth)] for _ in gates]
    if rng is None:
        return flips, 0
    fps = [footprint_levels(g, layers) for g in gates]
    drawn = 0
    width = max((max(f[-1]) for f in fps if f[-1]), default=-1) + 1
    for l in range(depth):
        holders: list[list[int]] = [[] for _ in range(width)]
        for i, f in enumerate(fps):
            for b in f[l]:
                holders[b].append(i)
        wires = [(b, h[j], h[j + 1]) for b, h in enumerate(holders) for j in range(len(h) - 1)]
        if not wires:
            continue
        bits = rng.integers(0, 2, size=len(wires))
        drawn += len(wires)
        for (b, up, down), bit in zip(wires, bits):
            if bit:
                flips[up][l][1].append(b)
                flips[down][l][0].append(b)
    return flips, drawn


# -- compile / run ------------------------------------------------------------------

def _keys_tuple(keys) -> tuple[CipherKey, ...]:
    if isinstance(keys, CipherKey):
        return (keys,)
    if isinstance(keys, JointRegister):
        return keys.keys
    return tuple(keys)


def elementary_gates(F: Circuit, keys, options: CompileOptions | None = None) -> tuple[list[ControlledGate], list[int]]:
    """Joint-register gates equal to ``L F L^-1`` (bridged in two-register mode) and the count per F gate."""
    options = options or CompileOptions()
    keys = _keys_tuple(keys)
    joint = JointRegister(keys)
    if options.mode == "two" and len(keys) != 2:
        raise ValidationError("two-register mode requires two keys")
    if options.mode == "single" and len(keys) != 1:
        raise ValidationError("single-register mode takes exactly one key")
    if F.width != joint.k:
        raise ValidationError(f"circuit width {F.width} does not match the plaintext width {joint.k}")
    out: list[ControlledGate] = []
    counts = []
    for f in F.gates:
        if not isinstance(f, ControlledGate) or len(f.controls) > 2:
            raise ValidationError(f"unsupported gate {f}; use NOT, CNOT or Toffoli")
        mapped = ControlledGate(joint.plaintext_line(f.target),
                                tuple((joint.plaintext_line(c), p) for c, p in f.controls))
        circ, _ = conjugate_through_L(mapped, joint, options.expansion, joint.n)
        gates = list(circ.gates)
        if options.mode == "two" and options.bridge:
            gates = [u for g in gates for unit in bridge_two_register(g, joint) for u in unit]
        out.extend(gates)
        counts.append(len(gates))
    return out, counts


def _build(args):
    gate, n, layers, flips = args
    return build_chip(gate, n, layers, flips)


def compile(F: Circuit, keys, options: CompileOptions | None = None) -> Evaluator:
    options = options or CompileOptions()
    t0 = time.perf_counter()
    keys = _keys_tuple(keys)
    joint = JointRegister(keys)
    gates, counts = elementary_gates(F, keys, options)
    layers = joint.nonlinear_layers()
    rng, seed = make_rng(options.seed) if options.randomize else (None, 0)
    flips, drawn = plan_flips(gates, layers, rng)
    tasks = [(g, joint.n, layers, fl) for g, fl in zip(gates, flips)]
    if options.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(options.jobs) as pool:
            chips = list(pool.map(_build, tasks, chunksize=max(1, len(tasks) // (4 * options.jobs))))
    else:
        # identical (gate, flips) pairs give identical chips; reuse them
        cache: dict = {}
        chips = []
        for t in tasks:
            sig = (t[0], tuple((tuple(a), tuple(b)) for a, b in t[3]))
            chip = cache.get(sig)
            if chip is None:
                chip = cache[sig] = _build(t)
            chips.append(chip)
    prov = Provenance(seed, tuple(k.seed for k in keys), len(layers), drawn, tuple(counts),
                      time.perf_counter() - t0)
    return Evaluator(joint.n, chips, len(keys), prov)


def run(ev: Evaluator, states):
    """Apply every chip in order to one state (int) or an array of states."""
    if isinstance(states, (int, np.integer)):
        s = int(states)
        if s < 0 or s >> ev.width:
            raise ValidationError(f"state does not fit in {ev.width} bits")
        for c in ev.chips:
            s = chip_eval(c, s)
        return s
    arr = np.asarray(states, dtype=np.uint64)
    if ev.width < 64 and arr.size and int(arr.max()) >> ev.width:
        raise ValidationError(f"state does not fit in {ev.width} bits")
    for c in ev.chips:
        arr = chip_eval_many(c, arr)
    return arr


@dataclass(frozen=True)
class EntropyReport:
    lower_bound: float
    drawn: int

    @property
    def total(self) -> float:
        return self.lower_bound + self.drawn


def entropy_injected(n: int, layers: int, chips: Evaluator | int) -> EntropyReport:
    """``n log3 n`` lower bound together with the bits actually drawn."""
    if n < 1:
        raise ValidationError("n must be positive")
    drawn = chips.provenance.drawn if isinstance(chips, Evaluator) else int(chips)
    del layers  # the bound depends on n only; kept for the call shape
    return EntropyReport(n * math.log(n, 3) if n > 1 else 0.0, drawn)


# -- evaluator file -------------------------------------------------------------------

EVALUATOR_MAGIC = "eoc-evaluator 1"


def format_evaluator(ev: Evaluator, explicit_identity: bool = False) -> str:
    p = ev.provenance
    lines = [EVALUATOR_MAGIC,
             f"n {ev.width} registers {ev.registers} chips {len(ev.chips)}",
             f"seed {p.seed:064x} layers {p.layers} drawn {p.drawn}",
             "keyseeds " + (" ".join(f"{s:064x}" for s in p.key_seeds) or "-"),
             "counts " + (" ".join(map(str, p.counts)) or "-")]
    for c in ev.chips:
        lines.extend(format_chip(c, explicit_identity))
    return "\n".join(lines) + "\n"


def parse_evaluator(text: str) -> Evaluator:
    rows = [r.strip() for r in text.splitlines() if r.strip() and not r.startswith("#")]
    if not rows or rows[0] != EVALUATOR_MAGIC:
        raise ValidationError("not an evaluator file (bad magic line)")
    try:
        h1 = rows[1].split()
        meta = dict(zip(h1[::2], h1[1::2]))
        h2 = rows[2].split()
        meta2 = dict(zip(h2[::2], h2[1::2]))
        ks = rows[3].split()[1:]
        cs = rows[4].split()[1:]
        width, n_chips = int(meta["n"]), int(meta["chips"])
        prov = Provenance(int(meta2["seed"], 16),
                          tuple(int(s, 16) for s in ks if s != "-"),
                          int(meta2["layers"]), int(meta2["drawn"]),
                          tuple(int(c) for c in cs if c != "-"))
        chips, buf = [], []
        for row in rows[5:]:
            buf.append(row)
            if row == "end":
                chips.append(parse_chip(buf, width))
                buf = []
        if buf or len(chips) != n_chips:
            raise ValidationError("evaluator file chip count does not match its header")
        return Evaluator(width, chips, int(meta["registers"]), prov)
    except (KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed evaluator file: {exc}") from None


def save_evaluator(ev: Evaluator, path: str | Path, explicit_identity: bool = False) -> None:
    Path(path).write_text(format_evaluator(ev, explicit_identity))


def load_evaluator(path: str | Path) -> Evaluator:
    return parse_evaluator(Path(path).read_text())
