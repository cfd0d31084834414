"""Analytic at-init loss values, derived from the declared head set only.

At a symmetric (zero-logit) initialization every categorical head emits a
uniform distribution, so its expected cross-entropy equals ln(number of
classes); the matched/mismatched discriminator pair contributes 2 ln 2.
This script computes those values from the component metadata without
touching the loss implementation, so the training code can be checked
against an independently derived target.

Usage: python3 tools/loss_oracles.py  -> JSON on stdout
"""

import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from playhouse.agent.heads import movement_components  # noqa: E402


def main():
    per_head = {}
    bc_movement = 0.0
    noop = None
    for comp in movement_components():
        value = math.log(comp.classes)
        per_head[comp.name] = value
        if comp.name == "noop":
            noop = value
        else:
            bc_movement += value
    assert noop is not None
    out = {
        "bc_movement": bc_movement,
        "noop": noop,
        "speak": math.log(2),
        "bc_noop": noop + math.log(2),
        "contrastive": 2 * math.log(2),
        "per_head": per_head,
    }
    json.dump(out, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
