"""Strict-avalanche matrix of the cipher, with an optional extra nonlinear stage.

With ``--extra-stages 1`` the nonlinear stage of a second key is appended,
which shows how far the one-stage cipher is from the 0.5 target.
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from eoc.cipher import RegisterLayout, avalanche_probe, keygen


@dataclass
class Config:
    n: int = 27
    samples: int = 10_000
    extra_stages: int = 0
    seed: int = 0


def run(cfg: Config) -> None:
    layout = RegisterLayout.from_counts(cfg.n, max(1, cfg.n // 9), 0)
    key = keygen(layout, seed=cfg.seed)
    circ = key.circuit()
    for i in range(cfg.extra_stages):
        circ = circ + keygen(layout, seed=cfg.seed + 1 + i).nonlinear_circuit()
    sac = avalanche_probe(key, cfg.samples, np.random.default_rng(cfg.seed), circuit=circ)
    band = 5 * math.sqrt(0.25 / cfg.samples)
    dev = np.abs(sac - 0.5)
    print(f"n={cfg.n} extra stages {cfg.extra_stages}: {(dev > band).sum()}/{sac.size} entries "
          f"outside 0.5 +/- {band:.4f}; max deviation {dev.max():.4f}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=Config.n)
    p.add_argument("--samples", type=int, default=Config.samples)
    p.add_argument("--extra-stages", type=int, default=Config.extra_stages)
    p.add_argument("--seed", type=int, default=Config.seed)
    a = p.parse_args()
    run(Config(a.n, a.samples, a.extra_stages, a.seed))


if __name__ == "__main__":
    main()
