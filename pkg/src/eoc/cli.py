"""Command-line front end.

Exit codes: 0 success, 1 invalid input, 2 verification failure. Errors go
to stderr prefixed with ``eoc: error:`` or ``eoc: verification failed:``.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import verify_report
from .chips import chip_metrics
from .cipher import (JointRegister, RegisterLayout, avalanche_probe, keygen, load_key, make_rng,
                     format_key)
from .errors import EOCError, ValidationError
from .evaluator import (CompileOptions, compile as compile_circuit, entropy_injected,
                        format_evaluator, load_evaluator, run)
from .gates import invert_circuit, parse_circuit
from .gateset import (enumerate_inflationary, enumerate_super_nonlinear, predicate_report,
                      topology_histogram)

FORMATS = """file formats:
  key        'eoc-key 1', header line, 'perm', optional 'permN', then
             'L <layer> a,b,c <9 matrix bits> <3 shift bits>' and
             'N <layer> a,b,c <8 lut digits>' records
  circuit    'n <width>' then one gate per line: NOT t=j | CNOT c=+i t=j |
             TOFFOLI c=+i c=-k t=j ('-' marks a negative control)
  data/ct    'bits <k>' then one hex value per line (bit i = bitline i)
  evaluator  'eoc-evaluator 1', header lines, then chips
             ('chip ...', 'out b', BDD lines, 'end')
  report     JSON, field 'format' = 'eoc-report 1'
"""


class VerificationFailure(EOCError):
    pass


# -- data files -----------------------------------------------------------------

def format_data(values: Sequence[int], bits: int, comment: str | None = None) -> str:
    width = max(1, (bits + 3) // 4)
    lines = [f"bits {bits}"]
    if comment:
        lines.append(f"# {comment}")
    lines += [f"{v:0{width}x}" for v in values]
    return "\n".join(lines) + "\n"


def parse_data(text: str) -> tuple[int, list[int]]:
    rows = [r.strip() for r in text.splitlines() if r.strip() and not r.strip().startswith("#")]
    if not rows or not rows[0].startswith("bits "):
        raise ValidationError("data file must start with 'bits <k>'")
    try:
        bits = int(rows[0].split()[1])
        values = [int(r, 16) for r in rows[1:]]
    except ValueError as exc:
        raise ValidationError(f"malformed data file: {exc}") from None
    for v in values:
        if v >> bits:
            raise ValidationError(f"value {v:x} does not fit in {bits} bits")
    return bits, values


def _read(path: str) -> str:
    return Path(path).read_text()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _check_paths(args: argparse.Namespace) -> None:
    for name in ("key", "data", "ct", "circuit", "evaluator", "gates_file"):
        value = getattr(args, name, None)
        for p in value if isinstance(value, list) else [value]:
            if p is not None and not Path(p).is_file():
                raise ValidationError(f"no such file: {p}")
    out = getattr(args, "out", None)
    if out is not None and not Path(out).resolve().parent.is_dir():
        raise ValidationError(f"output directory does not exist: {out}")


def _joint(paths: list[str]) -> JointRegister:
    return JointRegister(tuple(load_key(p) for p in paths))


def _seed(value: str | None) -> int | None:
    if value is None:
        return None
    try:
        return int(value, 0)
    except ValueError:
        raise ValidationError(f"bad seed {value!r}") from None


# -- commands -----------------------------------------------------------------------

def cmd_keygen(args) -> int:
    layout = RegisterLayout.from_counts(args.n, args.nd, args.na)
    nonlinear = None
    if args.gates_file:
        nonlinear = enumerate_super_nonlinear("external-list", args.gates_file)
    elif args.predicate != "strict":
        nonlinear = enumerate_super_nonlinear(args.predicate)
    key = keygen(layout, _seed(args.seed), nonlinear=nonlinear,
                 stage_permutations=args.stage_permutations, linear_depth=args.linear_depth)
    _emit(format_key(key), args.out)
    return 0


def cmd_encrypt(args) -> int:
    joint = _joint(args.key)
    bits, values = parse_data(_read(args.data))
    if bits != joint.k:
        raise ValidationError(f"data has {bits} bits, the key(s) expect {joint.k}")
    rng, seed = make_rng(_seed(args.seed))
    out = []
    for v in values:
        pads = [int.from_bytes(rng.bytes((k.layout.ng + 7) // 8), "little") & ((1 << k.layout.ng) - 1)
                for k in joint.keys]
        out.append(joint.circuit().apply(joint.assemble(v, pads)))
    _emit(format_data(out, joint.n, f"seed {seed:064x}"), args.out)
    return 0


def cmd_decrypt(args) -> int:
    joint = _joint(args.key)
    bits, values = parse_data(_read(args.ct))
    if bits != joint.n:
        raise ValidationError(f"ciphertext has {bits} bits, the key(s) expect {joint.n}")
    inv = invert_circuit(joint.circuit())
    plain = [joint.split(inv.apply(v))[0] for v in values]
    _emit(format_data(plain, joint.k), args.out)
    return 0


def cmd_compile(args) -> int:
    keys = tuple(load_key(p) for p in args.key)
    circuit = parse_circuit(_read(args.circuit))
    mode = "two" if args.two_register else "single"
    opts = CompileOptions(mode=mode, randomize=not args.no_random, seed=_seed(args.seed),
                          jobs=args.jobs, expansion=args.expansion)
    ev = compile_circuit(circuit, keys, opts)
    _emit(format_evaluator(ev, args.explicit_identity), args.out)
    return 0


def cmd_run(args) -> int:
    ev = load_evaluator(args.evaluator)
    bits, values = parse_data(_read(args.ct))
    if bits != ev.width:
        raise ValidationError(f"ciphertext has {bits} bits, the evaluator expects {ev.width}")
    out = [run(ev, v) for v in values]
    _emit(format_data(out, ev.width), args.out)
    return 0


def cmd_verify(args) -> int:
    ev = load_evaluator(args.evaluator)
    keys = tuple(load_key(p) for p in args.key)
    circuit = parse_circuit(_read(args.circuit)) if args.circuit else None
    rep = verify_report(ev, keys, args.budget, circuit, args.exhaustive, _seed(args.seed))
    _emit(rep.to_json() + "\n", args.out)
    if not rep.ok:
        raise VerificationFailure("; ".join(rep.failures[:5]))
    return 0


def cmd_gatesets(args) -> int:
    inf = enumerate_inflationary()
    hist = topology_histogram(inf)
    print(f"inflationary: {len(inf)}")
    print("topology: " + " ".join(f"{k}={v}" for k, v in sorted(hist.items())))
    if args.predicate == "all":
        for name, count in predicate_report().items():
            print(f"super-nonlinear ({name}): {count}")
    else:
        print(f"super-nonlinear ({args.predicate}): {len(enumerate_super_nonlinear(args.predicate))}")
    return 0


def cmd_stats(args) -> int:
    ev = load_evaluator(args.evaluator)
    metrics = [chip_metrics(c) for c in ev.chips]
    kinds = ev.kind_counts()
    n_reg = ev.width // ev.registers
    ent = entropy_injected(n_reg, ev.provenance.layers, ev)
    print(f"width: {ev.width}")
    print(f"registers: {ev.registers}")
    print(f"chips: {len(ev.chips)}")
    print("seeds: " + (" ".join(f"{k}={v}" for k, v in sorted(kinds.items())) or "-"))
    print(f"max size: {max((m.size for m in metrics), default=0)}")
    print(f"max width: {max((m.width for m in metrics), default=0)}")
    print(f"total volume: {sum(m.volume for m in metrics)}")
    print(f"drawn bits: {ent.drawn}")
    print(f"entropy lower bound: {ent.lower_bound:.2f}")
    return 0


def cmd_sac(args) -> int:
    key = load_key(args.key[0])
    rng, _ = make_rng(_seed(args.seed))
    sac = avalanche_probe(key, args.samples, rng)
    sigma = math.sqrt(0.25 / args.samples)
    dev = np.abs(sac - 0.5)
    outside = int((dev > 5 * sigma).sum())
    print(f"samples: {args.samples}")
    print(f"max deviation: {dev.max():.4f}")
    print(f"5-sigma band: {5 * sigma:.4f}")
    print(f"entries outside: {outside} of {sac.size}")
    if outside:
        raise VerificationFailure(f"{outside} SAC entries outside 0.5 +/- 5 sigma")
    return 0


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eoc", description="Encrypted operator computing toolkit.",
                                epilog=FORMATS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text, epilog=FORMATS,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.set_defaults(fn=fn)
        return sp

    sp = add("keygen", cmd_keygen, "draw a cipher key")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--nd", type=int, required=True)
    sp.add_argument("--na", type=int, default=0)
    sp.add_argument("--seed")
    sp.add_argument("--predicate", default="strict", choices=["strict", "coordinatewise"])
    sp.add_argument("--gates-file", help="explicit nonlinear gate list (8 ints per line)")
    sp.add_argument("--stage-permutations", action="store_true",
                    help="independent permutation for the nonlinear stage")
    sp.add_argument("--linear-depth", type=int,
                    help="override the linear depth (1 = experimental fast mode)")
    sp.add_argument("--out")

    sp = add("encrypt", cmd_encrypt, "encrypt plaintext values")
    sp.add_argument("--key", action="append", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--seed")
    sp.add_argument("--out")

    sp = add("decrypt", cmd_decrypt, "decrypt ciphertext values")
    sp.add_argument("--key", action="append", required=True)
    sp.add_argument("--ct", required=True)
    sp.add_argument("--out")

    sp = add("compile", cmd_compile, "compile a circuit into an evaluator")
    sp.add_argument("--key", action="append", required=True, help="repeat for two registers")
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--no-random", action="store_true")
    sp.add_argument("--two-register", action="store_true")
    sp.add_argument("--seed")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--expansion", default="auto", choices=["auto", "pivot", "expand"])
    sp.add_argument("--explicit-identity", action="store_true",
                    help="write identity outputs for lines outside each footprint")
    sp.add_argument("--out")

    sp = add("run", cmd_run, "run an evaluator on ciphertexts")
    sp.add_argument("--evaluator", required=True)
    sp.add_argument("--ct", required=True)
    sp.add_argument("--out")

    sp = add("verify", cmd_verify, "check bounds and run the functional oracle")
    sp.add_argument("--evaluator", required=True)
    sp.add_argument("--key", action="append", required=True)
    sp.add_argument("--circuit", help="plaintext circuit for an exact check")
    sp.add_argument("--exhaustive", action="store_true")
    sp.add_argument("--budget", type=int, default=1000)
    sp.add_argument("--seed")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out")

    sp = add("gatesets", cmd_gatesets, "enumerate the gate sets")
    sp.add_argument("--predicate", default="all", choices=["all", "strict", "coordinatewise"])

    sp = add("stats", cmd_stats, "summarize an evaluator")
    sp.add_argument("--evaluator", required=True)

    sp = add("sac", cmd_sac, "strict avalanche test of a key")
    sp.add_argument("--key", action="append", required=True)
    sp.add_argument("--samples", type=int, default=10000)
    sp.add_argument("--seed")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        _check_paths(args)
        return args.fn(args)
    except VerificationFailure as exc:
        print(f"eoc: verification failed: {exc}", file=sys.stderr)
        return 2
    except (EOCError, OSError) as exc:
        print(f"eoc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
