"""Size and expansion bounds, and a verification report for compiled evaluators."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .chips import chip_metrics
from .cipher import JointRegister, make_rng
from .errors import ValidationError
from .evaluator import Evaluator, _keys_tuple, run
from .gates import Circuit, invert_circuit

MU3 = 3 * math.log2(3)
NU3 = 3 * math.log2(7 / 3)
GAMMA = math.log(7, 3)


def bmax_bound(level: int) -> int:
    """Largest output BDD of a NOT-seeded chip after ``level`` nonlinear layers."""
    if level < 0:
        raise ValidationError("level must be >= 0")
    return 7 ** level + 2


def network_wire_profile(level: int) -> list[int]:
    """Wire counts a_0..a_{3^level} between consecutive modules of the chip network.

    Each module splits into three with 0, 1 and 2 extra internal wires; the
    last entry is the single output wire.
    """
    if level < 0:
        raise ValidationError("level must be >= 0")
    a = [0]
    for _ in range(level):
        a = [x + d for x in a for d in (0, 1, 2)]
    return a + [1]


def profile_bound(level: int) -> int:
    return sum(2 ** x for x in network_wire_profile(level))


@dataclass(frozen=True)
class ExpansionBounds:
    mu: float
    nu: float
    max: float
    avg: float


def expansion_bounds(n: int) -> ExpansionBounds:
    """Worst-case and average gate counts n^mu3 and n^nu3 for conjugating one Toffoli through L."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    ell = n.bit_length() - 1
    if n == 1 << ell:
        # exact in integers when n is a power of two: n^mu3 = 27^log2(n)
        return ExpansionBounds(MU3, NU3, 27 ** ell, (7 / 3) ** (3 * ell))
    return ExpansionBounds(MU3, NU3, n ** MU3, n ** NU3)


# -- report -----------------------------------------------------------------------

@dataclass
class ChipRecord:
    index: int
    seed: str
    level: int
    width: int
    size: int
    volume: int
    bound: int | None
    slack: int | None
    width_bound: int | None


@dataclass
class BoundReport:
    n: int
    registers: int
    chips: list[ChipRecord] = field(default_factory=list)
    expansion: list[int] = field(default_factory=list)
    exponents: dict[str, float | None] = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        d = asdict(self)
        d["format"] = "eoc-report 1"
        d["ok"] = self.ok
        return json.dumps(d, indent=1, sort_keys=True)


def chip_records(ev: Evaluator) -> list[ChipRecord]:
    out = []
    for i, c in enumerate(ev.chips):
        m = chip_metrics(c)
        if c.seed_kind == "NOT":
            bound = bmax_bound(c.level)
            wb = 3 ** c.level
            out.append(ChipRecord(i, c.seed_kind, c.level, m.width, m.size, m.volume, bound,
                                  bound - m.size, wb))
        else:
            out.append(ChipRecord(i, c.seed_kind, c.level, m.width, m.size, m.volume, None, None, None))
    return out


def _fit(value: float, n: int) -> float | None:
    return math.log(value) / math.log(n) if value > 0 and n > 1 else None


def _sample_states(joint: JointRegister, budget: int, exhaustive: bool,
                   rng: np.random.Generator) -> np.ndarray:
    if exhaustive:
        if joint.n > 20:
            raise ValidationError("exhaustive check is limited to 20 bitlines")
        return np.arange(1 << joint.n, dtype=np.uint64)
    return rng.integers(0, 1 << joint.n, size=budget, dtype=np.uint64)


def functional_oracle(ev: Evaluator, keys, budget: int = 1000, circuit: Circuit | None = None,
                      exhaustive: bool = False, seed: int | None = None) -> dict:
    """Decrypt run(ciphertext) and check it against the plaintext.

    Without ``circuit`` only the padding can be checked: it must pass through
    unchanged, and the plaintext result may not depend on the padding.
    With ``circuit`` every decrypted plaintext must equal ``circuit`` applied
    to the input plaintext.
    """
    joint = JointRegister(_keys_tuple(keys))
    if joint.n != ev.width:
        raise ValidationError(f"key width {joint.n} does not match evaluator width {ev.width}")
    rng, _ = make_rng(seed)
    cts = _sample_states(joint, budget, exhaustive, rng)
    E = joint.circuit()
    Einv = invert_circuit(E)
    plain_in = Einv.apply_many(cts)
    plain_out = Einv.apply_many(run(ev, cts))
    bad = 0
    seen: dict[int, int] = {}
    for x, y in zip(plain_in.tolist(), plain_out.tolist()):
        px, pad_x = joint.split(x)
        py, pad_y = joint.split(y)
        if pad_x != pad_y:
            bad += 1
            continue
        if circuit is not None:
            bad += circuit.apply(px) != py
        else:
            prev = seen.setdefault(px, py)
            bad += prev != py
    return {"checked": int(len(cts)), "mismatches": int(bad),
            "mode": "circuit" if circuit is not None else "padding",
            "exhaustive": bool(exhaustive)}


def verify_report(ev: Evaluator, keys=None, budget: int = 1000, circuit: Circuit | None = None,
                  exhaustive: bool = False, seed: int | None = None) -> BoundReport:
    rep = BoundReport(ev.width, ev.registers)
    rep.chips = chip_records(ev)
    rep.expansion = list(ev.provenance.counts)
    for r in rep.chips:
        if r.slack is not None and r.slack < 0:
            rep.failures.append(f"chip {r.index}: size {r.size} exceeds bound {r.bound}")
        if r.width_bound is not None and r.width > r.width_bound:
            rep.failures.append(f"chip {r.index}: width {r.width} exceeds {r.width_bound}")
    n_reg = ev.width // max(ev.registers, 1)
    counts = rep.expansion
    not_sizes = [r.size for r in rep.chips if r.seed == "NOT"]
    rep.exponents = {
        "mu3": MU3, "nu3": NU3, "gamma": GAMMA,
        "fit_max_expansion": _fit(max(counts), n_reg) if counts else None,
        "fit_mean_expansion": _fit(float(np.mean(counts)), n_reg) if counts else None,
        "fit_not_size": _fit(max(not_sizes) - 2, n_reg) if not_sizes and max(not_sizes) > 2 else None,
    }
    if keys is not None and ev.chips:
        rep.oracle = functional_oracle(ev, keys, budget, circuit, exhaustive, seed)
        if rep.oracle["mismatches"]:
            rep.failures.append(f"functional oracle: {rep.oracle['mismatches']} mismatches")
    return rep
