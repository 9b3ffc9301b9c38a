"""Print the table of polarity-equivalence classes for gate pairs.

Each row is one gate-pair shape (up to relabelling of the lines); each class
lists polarity assignments that act identically on the touched lines.

    python scripts/color_rules.py --bits 4 --controls 2 > docs/color_rules.md
"""

import argparse
from dataclasses import dataclass

from eoc.gates import format_gate
from eoc.rewrite import derive_color_rules


@dataclass
class Config:
    bits: int = 4
    controls: int = 2


def render(cfg: Config) -> str:
    rules = derive_color_rules(cfg.bits, cfg.controls)
    out = [f"# Polarity classes on {cfg.bits} lines, at most {cfg.controls} controls", "",
           f"{len(rules)} shapes have at least one nontrivial class.", "",
           "| shape | collision | equivalent pairs |", "|---|---|---|"]
    for r in rules:
        g, h = r["shape"]
        classes = ["; ".join(f"[{format_gate(a)}] [{format_gate(b)}]" for a, b in cls) for cls in r["classes"]]
        out.append(f"| [{format_gate(g)}] [{format_gate(h)}] | {r['collision']} | " + " / ".join(f"{{{c}}}" for c in classes) + " |")
    return "\n".join(out) + "\n"


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--bits", type=int, default=Config.bits)
    p.add_argument("--controls", type=int, default=Config.controls)
    a = p.parse_args()
    print(render(Config(a.bits, a.controls)), end="")


if __name__ == "__main__":
    main()
