"""Toffoli expansion under conjugation by random inflationary layers.

Reports the per-layer offspring distribution (against the 27 worst case and
the (7/3)^3 mean ceiling) and the total gate count after the full linear
stage for several register sizes.
"""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from eoc.analysis import MU3, NU3
from eoc.cipher import RegisterLayout, keygen
from eoc.gates import TOFFOLI
from eoc.linear import conjugate_affine_layer, conjugate_through_L, lift


@dataclass
class Config:
    draws: int = 1000
    full_draws: int = 50
    sizes: tuple[int, ...] = (9, 27)
    seed: int = 0


def random_toffoli(n, rng):
    c1, c2, t = (int(x) for x in rng.choice(n, size=3, replace=False))
    p1, p2 = (bool(x) for x in rng.integers(0, 2, size=2))
    return TOFFOLI(c1, c2, t, p1, p2)


def single_layer(cfg: Config, rng) -> None:
    layout = RegisterLayout.from_counts(27, 4, 0)
    counts = np.array([conjugate_affine_layer(lift(random_toffoli(27, rng)),
                                              keygen(layout, seed=int(rng.integers(2**63))).linear_layers[0]).term_count()
                       for _ in range(cfg.draws)])
    hist = np.bincount(counts, minlength=28)
    print(f"single layer, {cfg.draws} draws: mean {counts.mean():.3f} "
          f"(ceiling {(7 / 3) ** 3:.3f}), max {counts.max()} (worst case 27)")
    print("  histogram: " + " ".join(f"{i}:{c}" for i, c in enumerate(hist) if c))


def full_stage(cfg: Config, rng) -> None:
    for n in cfg.sizes:
        layout = RegisterLayout.from_counts(n, max(1, n // 9), 0)
        sizes = []
        for _ in range(cfg.full_draws):
            key = keygen(layout, seed=int(rng.integers(2**63)))
            circ, stats = conjugate_through_L(random_toffoli(n, rng), key)
            sizes.append(stats.term_count)
        sizes = np.array(sizes)
        print(f"n={n}: linear depth {layout.linear_depth}, terms mean {sizes.mean():.1f} "
              f"max {sizes.max()}; n^nu3 = {n ** NU3:.1f}, n^mu3 = {n ** MU3:.1f}; "
              f"fitted exponent of mean {math.log(sizes.mean()) / math.log(n):.2f}")


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--draws", type=int, default=Config.draws)
    p.add_argument("--full-draws", type=int, default=Config.full_draws)
    p.add_argument("--sizes", type=int, nargs="+", default=list(Config.sizes))
    p.add_argument("--seed", type=int, default=Config.seed)
    a = p.parse_args()
    cfg = Config(a.draws, a.full_draws, tuple(a.sizes), a.seed)
    rng = np.random.default_rng(cfg.seed)
    single_layer(cfg, rng)
    full_stage(cfg, rng)


if __name__ == "__main__":
    main()
