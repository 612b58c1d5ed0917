#!/usr/bin/env python3
"""Run the ellipse experiment end to end and print the headline numbers.

The Polya-Szego drop for the (2,1) ellipse at order 1 has closed-form
value pi/8: left side 5 pi/8, symmetrized side pi/2.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wulffsym.cli import ExperimentConfig, run  # noqa: E402

CONFIG = Path(__file__).parent / "configs" / "ellipse_polya_szego.json"


def main():
    cfg = ExperimentConfig.from_dict(json.loads(CONFIG.read_text()))
    report = run(cfg)
    for row in report["tasks"]["polya_szego"]["rows"]:
        print(f"k={row['k']} p={row['p']}: lhs={row['value']:.6f} "
              f"rhs={row['oracle']:.6f} margin={row['margin']:.6f} "
              f"pass={row['passed']}")
    out = cfg.output.get("directory")
    print(f"report written under {out}/")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
