#!/usr/bin/env python3
"""Train blind key-lock search through the offset curriculum, then compare its
perturbation tolerance against the spiral-search baseline."""
import sys
from pathlib import Path

from insertrl.cli import main

ROOT = Path(__file__).resolve().parent.parent
CFG = str(ROOT / "configs" / "blind_search_key.json")

if __name__ == "__main__":
    rc = main(["train", "--config", CFG])
    rc |= main(["eval", "--config", CFG, "--checkpoint", "runs/blind_search_key/checkpoint.json", "--episodes", "100"])
    print("\n--- learned policy sweep ---")
    rc |= main(["sweep", "--config", CFG, "--checkpoint", "runs/blind_search_key/checkpoint.json",
                "--max-rings", "30", "--out", "runs/blind_search_key/sweep_learned.json"])
    print("\n--- spiral baseline sweep ---")
    rc |= main(["sweep", "--config", CFG, "--spiral", "--max-rings", "30",
                "--out", "runs/blind_search_key/sweep_spiral.json"])
    sys.exit(rc)
