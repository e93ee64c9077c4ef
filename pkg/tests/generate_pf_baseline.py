"""Regenerate the committed spectral-radius baseline.

Run from the repository root:

    python3 tests/generate_pf_baseline.py

Overwrites ``tests/data/pf_baseline.json`` with values computed at the
committed default seed and grid.  The acceptance suite compares fresh runs
against this file with a 5% tolerance band, so rewrite it only when the
operator assembly itself changes on purpose.
"""

from __future__ import annotations

import json
import os
import tempfile

from diraclab.cli import main


def regenerate(path: str) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        code = main(["bound-report", "--out", tmp])
        if code != 0:
            raise SystemExit(f"bound-report failed with exit code {code}")
        with open(os.path.join(tmp, "bound_report.json")) as fh:
            payload = json.load(fh)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as fh:
        json.dump({"config": payload["config"], "rows": payload["rows"]}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    here = os.path.dirname(os.path.abspath(__file__))
    target = os.path.join(here, "data", "pf_baseline.json")
    regenerate(target)
    print(f"wrote {target}")
