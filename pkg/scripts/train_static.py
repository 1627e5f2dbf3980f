#!/usr/bin/env python3
"""Train the static insertion task and evaluate at full reset randomization."""
import sys
from pathlib import Path

from insertrl.cli import main

ROOT = Path(__file__).resolve().parent.parent
CFG = str(ROOT / "configs" / "static_usb.json")

if __name__ == "__main__":
    rc = main(["train", "--config", CFG])
    rc |= main(["eval", "--config", CFG, "--checkpoint", "runs/static_usb/checkpoint.json", "--episodes", "200"])
    sys.exit(rc)
