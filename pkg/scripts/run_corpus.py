#!/usr/bin/env python3
"""Sweep the regression corpus and tabulate all inequality margins.

Writes one report directory per corpus entry under out/corpus/ and prints
a one-line summary per entry. Pass --fast for reduced grids.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wulffsym.cli import ExperimentConfig, regression_corpus, run  # noqa: E402


def main(argv=None):
    fast = "--fast" in (argv or sys.argv[1:])
    failures = 0
    for name, norm_spec, field_spec, orders, grids in regression_corpus():
        grids = dict(grids)
        if fast:
            grids.setdefault("levels", 160)
            grids.setdefault("rays", 512 if norm_spec["dim"] == 2 else 96)
        cfg = ExperimentConfig.from_dict({
            "norm": norm_spec,
            "field": field_spec,
            "orders": orders,
            "exponents": [1.5],
            "grids": grids,
            "tasks": ["mixedvol", "af", "polya_szego", "sobolev"],
            "output": {"directory": f"out/corpus/{name}",
                       "formats": ["json", "csv"]},
            "seed": 7,
        })
        report = run(cfg)
        verdict = "pass" if report["passed"] else "FAIL"
        margins = [row["margin"]
                   for row in report["tasks"]["polya_szego"]["rows"]]
        print(f"[{verdict}] {name}: min PS margin = {min(margins):+.6f} "
              f"({report['runtime_seconds']:.1f}s)")
        failures += 0 if report["passed"] else 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
