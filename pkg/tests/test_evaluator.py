import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eoc.chips import chip_metrics
from eoc.cipher import JointRegister, RegisterLayout, keygen
from eoc.errors import ValidationError
from eoc.evaluator import (CompileOptions, bridge_two_register, compile, entropy_injected,
                           format_evaluator, load_evaluator, parse_evaluator, plan_flips,
                           run, save_evaluator)
from eoc.gates import (CNOT, NOT, TOFFOLI, Circuit, ControlledGate, invert_circuit,
                       random_circuit)

LAYOUT = RegisterLayout.from_counts(9, 2, 1)
ALL9 = np.arange(512, dtype=np.uint64)


def oracle(F, keys, states):
    """E F E^-1 on joint-register states, computed gate by gate on plaintexts."""
    joint = JointRegister(tuple(keys))
    E = joint.circuit()
    plain = invert_circuit(E).apply_many(states)
    out = []
    for s in plain.tolist():
        p, pads = joint.split(s)
        out.append(joint.assemble(F.apply(p), pads))
    return E.apply_many(np.asarray(out, dtype=np.uint64))


def test_empty_circuit_gives_empty_evaluator(key9):
    ev = compile(Circuit(3, ()), key9)
    assert len(ev) == 0
    assert (run(ev, ALL9) == ALL9).all()


def test_single_not_exhaustive(key9):
    F = Circuit(3, (NOT(0),))
    for rand in (False, True):
        ev = compile(F, key9, CompileOptions(randomize=rand, seed=1))
        assert (run(ev, ALL9) == oracle(F, [key9], ALL9)).all()


@settings(max_examples=12)
@given(st.integers(0, 2 ** 32), st.integers(1, 8), st.booleans())
def test_defining_identity_single(seed, size, rand):
    rng = np.random.default_rng(seed)
    key = keygen(LAYOUT, seed=seed)
    F = random_circuit(3, size, rng)
    ev = compile(F, key, CompileOptions(randomize=rand, seed=seed))
    assert (run(ev, ALL9) == oracle(F, [key], ALL9)).all()
    # scalar path agrees with the vector path
    x = int(rng.integers(512))
    assert run(ev, x) == int(run(ev, ALL9)[x])


def test_defining_identity_two_register(key9, key9b):
    rng = np.random.default_rng(7)
    F = random_circuit(6, 4, rng)
    states = rng.integers(0, 1 << 18, size=400, dtype=np.uint64)
    for rand in (False, True):
        ev = compile(F, [key9, key9b], CompileOptions(mode="two", randomize=rand, seed=5))
        assert ev.registers == 2 and ev.width == 18
        assert (run(ev, states) == oracle(F, [key9, key9b], states)).all()


def test_homomorphism(key9):
    rng = np.random.default_rng(3)
    F = random_circuit(3, 3, rng)
    G = random_circuit(3, 3, rng)
    opts = CompileOptions(randomize=True, seed=9)
    both = run(compile(G + F, key9, opts), ALL9)
    seq = run(compile(F, key9, opts), run(compile(G, key9, opts), ALL9))
    assert (both == seq).all()


def test_two_register_requires_two_keys(key9):
    with pytest.raises(ValidationError):
        compile(Circuit(3, (NOT(0),)), key9, CompileOptions(mode="two"))
    with pytest.raises(ValidationError):
        compile(Circuit(6, (NOT(0),)), [key9, key9], CompileOptions(mode="single"))
    with pytest.raises(ValidationError):
        compile(Circuit(4, (NOT(0),)), key9)
    with pytest.raises(ValidationError):
        CompileOptions(mode="three")


def test_refuses_large_gates(key9):
    big = ControlledGate(0, ((1, True), (2, True), (3, True)))
    lay = RegisterLayout.from_counts(27, 4, 0)
    with pytest.raises(ValidationError):
        compile(Circuit(4, (big,)), keygen(lay, seed=1))


def test_run_rejects_wide_states(key9):
    ev = compile(Circuit(3, (NOT(1),)), key9)
    with pytest.raises(ValidationError):
        run(ev, 1 << 9)
    with pytest.raises(ValidationError):
        run(ev, np.array([1 << 9], dtype=np.uint64))


# -- bridging -------------------------------------------------------------------------

bridge_gate = st.builds(
    lambda t, c, pols: ControlledGate(t, tuple((b, p) for b, p in zip(c, pols) if b != t)),
    st.integers(0, 17), st.lists(st.integers(0, 17), max_size=2, unique=True),
    st.lists(st.booleans(), min_size=2, max_size=2))


@settings(max_examples=80)
@given(bridge_gate)
def test_bridging_equivalent_and_bounded(gate):
    joint = JointRegister((keygen(LAYOUT, seed=1), keygen(LAYOUT, seed=2)))
    units = bridge_two_register(gate, joint)
    flat = [g for u in units for g in u]
    xs = np.random.default_rng(0).integers(0, 1 << 18, size=256, dtype=np.uint64)
    assert (Circuit(18, tuple(flat)).apply_many(xs) == Circuit(18, (gate,)).apply_many(xs)).all()
    k = len(gate.controls)
    if k == 0:
        assert len(units) == 1
    elif k == 1:
        cross = joint.register_of(gate.target) != joint.register_of(gate.controls[0][0])
        assert len(units) == (1 if cross else 3)
    else:
        assert len(units) <= 5
        moved = [u for u in units if len(u) == 1][0][0]
        lines = [c for c, _ in moved.controls] + [moved.target]
        assert sorted(joint.register_of(b) for b in lines) in ([0, 0, 1], [0, 1, 1])


def test_bridging_needs_two_registers(key9):
    with pytest.raises(ValidationError):
        bridge_two_register(CNOT(0, 1), JointRegister((key9,)))


# -- randomization ------------------------------------------------------------------

def test_plan_flips_without_rng(key9):
    gates = [NOT(0), CNOT(0, 1)]
    flips, drawn = plan_flips(gates, key9.nonlinear_layers, None)
    assert drawn == 0
    assert all(not a and not b for f in flips for a, b in f)


def test_randomization_off_draws_nothing(key9):
    ev = compile(Circuit(3, (TOFFOLI(0, 1, 2),)), key9, CompileOptions(randomize=False))
    assert ev.provenance.drawn == 0


def test_same_seed_is_deterministic(key9):
    F = random_circuit(3, 4, np.random.default_rng(2))
    a = compile(F, key9, CompileOptions(seed=77))
    b = compile(F, key9, CompileOptions(seed=77))
    assert format_evaluator(a) == format_evaluator(b)


def test_different_seeds_same_function(key9):
    F = random_circuit(3, 5, np.random.default_rng(4))
    a = compile(F, key9, CompileOptions(seed=1))
    b = compile(F, key9, CompileOptions(seed=2))
    assert (run(a, ALL9) == run(b, ALL9)).all()
    assert format_evaluator(a) != format_evaluator(b)
    # footprints do not depend on the flips; sizes may, since later layers see different functions
    assert [chip_metrics(c).width for c in a.chips] == [chip_metrics(c).width for c in b.chips]
    assert [c.footprint for c in a.chips] == [c.footprint for c in b.chips]


def test_entropy_report():
    rep = entropy_injected(27, 3, 100)
    assert rep.lower_bound == pytest.approx(81)
    assert rep.total == pytest.approx(181)
    assert entropy_injected(1, 0, 0).lower_bound == 0
    with pytest.raises(ValidationError):
        entropy_injected(0, 0, 0)


# -- file format --------------------------------------------------------------------

@pytest.mark.parametrize("explicit", [False, True])
def test_evaluator_file_round_trip(key9, tmp_path, explicit):
    F = random_circuit(3, 3, np.random.default_rng(8))
    ev = compile(F, key9, CompileOptions(seed=3))
    path = tmp_path / "ev.txt"
    save_evaluator(ev, path, explicit)
    back = load_evaluator(path)
    assert (run(back, ALL9) == run(ev, ALL9)).all()
    assert format_evaluator(back, explicit) == format_evaluator(ev, explicit)
    assert back.provenance.drawn == ev.provenance.drawn
    assert back.provenance.counts == ev.provenance.counts


def test_evaluator_parse_errors(key9):
    with pytest.raises(ValidationError):
        parse_evaluator("not an evaluator\n")
    text = format_evaluator(compile(Circuit(3, (NOT(0),)), key9))
    lines = text.splitlines()
    lines[1] = re.sub(r"chips \d+", "chips 999", lines[1])
    with pytest.raises(ValidationError):
        parse_evaluator("\n".join(lines) + "\n")
