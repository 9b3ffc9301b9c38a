"""NOT-seeded chip sizes per nonlinear level against the 7^l + 2 bound."""

import argparse
from dataclasses import dataclass

import numpy as np

from eoc.analysis import bmax_bound
from eoc.chips import chip_metrics, conjugate_chip_layer, seed_chip
from eoc.cipher import RegisterLayout, keygen
from eoc.gates import NOT


@dataclass
class Config:
    n: int = 27
    keys: int = 50
    seed: int = 0


def run(cfg: Config) -> None:
    layout = RegisterLayout.from_counts(cfg.n, max(1, cfg.n // 9), 0)
    rng = np.random.default_rng(cfg.seed)
    per_level: dict[int, list[int]] = {}
    for _ in range(cfg.keys):
        key = keygen(layout, seed=int(rng.integers(2**63)))
        chip = seed_chip(NOT(int(rng.integers(cfg.n))), cfg.n)
        for level, layer in enumerate(key.nonlinear_layers, 1):
            chip = conjugate_chip_layer(chip, layer)
            per_level.setdefault(level, []).append(chip_metrics(chip).size)
    for level, sizes in per_level.items():
        s = np.array(sizes)
        print(f"level {level}: size mean {s.mean():.1f} max {s.max()} bound {bmax_bound(level)} "
              f"width {3 ** level}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=Config.n)
    p.add_argument("--keys", type=int, default=Config.keys)
    p.add_argument("--seed", type=int, default=Config.seed)
    a = p.parse_args()
    run(Config(a.n, a.keys, a.seed))


if __name__ == "__main__":
    main()
