"""Compile a random circuit, run it on random ciphertexts and check the result."""

import argparse
import time
from dataclasses import dataclass

import numpy as np

from eoc.analysis import verify_report
from eoc.cipher import JointRegister, RegisterLayout, keygen
from eoc.evaluator import CompileOptions, compile
from eoc.gates import random_circuit


@dataclass
class Config:
    n: int = 9
    nd: int = 2
    gates: int = 10
    mode: str = "single"
    randomize: bool = True
    samples: int = 1000
    jobs: int = 1
    seed: int = 0


def run(cfg: Config) -> None:
    layout = RegisterLayout.from_counts(cfg.n, cfg.nd, 0)
    nkeys = 2 if cfg.mode == "two" else 1
    keys = [keygen(layout, seed=cfg.seed + i) for i in range(nkeys)]
    joint = JointRegister(tuple(keys))
    F = random_circuit(joint.k, cfg.gates, np.random.default_rng(cfg.seed))
    t0 = time.perf_counter()
    ev = compile(F, keys, CompileOptions(mode=cfg.mode, randomize=cfg.randomize,
                                          seed=cfg.seed, jobs=cfg.jobs))
    t1 = time.perf_counter()
    rep = verify_report(ev, keys, cfg.samples, F, seed=cfg.seed)
    t2 = time.perf_counter()
    sizes = [r.size for r in rep.chips]
    print(f"{cfg.mode} n={cfg.n} F={cfg.gates} gates -> {len(ev)} chips "
          f"(max size {max(sizes, default=0)}, drawn {ev.provenance.drawn}) "
          f"compile {t1 - t0:.1f}s, check {t2 - t1:.1f}s, "
          f"mismatches {rep.oracle.get('mismatches')}/{rep.oracle.get('checked')}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=Config.n)
    p.add_argument("--nd", type=int, default=Config.nd)
    p.add_argument("--gates", type=int, default=Config.gates)
    p.add_argument("--mode", choices=["single", "two"], default=Config.mode)
    p.add_argument("--no-random", action="store_true")
    p.add_argument("--samples", type=int, default=Config.samples)
    p.add_argument("--jobs", type=int, default=Config.jobs)
    p.add_argument("--seed", type=int, default=Config.seed)
    a = p.parse_args()
    run(Config(a.n, a.nd, a.gates, a.mode, not a.no_random, a.samples, a.jobs, a.seed))


if __name__ == "__main__":
    main()
