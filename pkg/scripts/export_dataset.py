#!/usr/bin/env python3
"""Bundle every episode log under runs/ into a shareable dataset directory."""
import sys
from pathlib import Path

from insertrl.cli import main

if __name__ == "__main__":
    logs = sorted(str(p) for p in Path("runs").glob("**/episodes.eplog"))
    if not logs:
        print("no episode logs under runs/", file=sys.stderr)
        sys.exit(1)
    sys.exit(main(["export-dataset", *logs, "--out", "dataset"]))
