#!/usr/bin/env python3
"""Regenerate the golden outputs for the shipped example configs.

Runs the CLI for each config in scripts/configs and writes the results to
scripts/golden/<config-stem>/. The plotting package's regeneration test
consumes these files, so rerun this script after any change that affects
run outputs.
"""

import sys
from pathlib import Path

from vme.cli import main

HERE = Path(__file__).resolve().parent

GOLDEN_CASES = [
    "one_qubit_real_classical",
    "one_qubit_real_noisy",
    "one_qubit_real_mitigated",
    "one_qubit_imag_mitigated",
    "two_qubit_real_heatmap",
]


def regenerate() -> int:
    for case in GOLDEN_CASES:
        config = HERE / "configs" / f"{case}.json"
        out = HERE / "golden" / case
        print(f"-> {case}")
        code = main(["run", "--config", str(config), "--out", str(out)])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(regenerate())
