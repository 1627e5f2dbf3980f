#!/usr/bin/env python3
"""Start a live training session with the teleoperation service attached.
Open frontend/index.html (after `npm run build` there) to drive it."""
import sys
from pathlib import Path

from insertrl.cli import main

ROOT = Path(__file__).resolve().parent.parent
CFG = str(ROOT / "configs" / "static_usb.json")

if __name__ == "__main__":
    sys.exit(main(["serve", "--config", CFG, "--port", "8765"]))
