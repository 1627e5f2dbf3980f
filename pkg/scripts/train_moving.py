#!/usr/bin/env python3
"""Pretrain visual features, then train moving-socket insertion end to end."""
import sys
from pathlib import Path

from insertrl.cli import main

ROOT = Path(__file__).resolve().parent.parent
CFG = str(ROOT / "configs" / "moving_socket_usb.json")

if __name__ == "__main__":
    rc = main(["pretrain-vae", "--config", CFG, "--out", "runs/moving_socket_usb/vae.json",
               "--frames", "5000", "--epochs", "100", "--beta", "0.1",
               "--classifier-out", "runs/moving_socket_usb/classifier.json"])
    rc |= main(["train", "--config", CFG])
    rc |= main(["eval", "--config", CFG, "--checkpoint", "runs/moving_socket_usb/checkpoint.json", "--episodes", "100"])
    sys.exit(rc)
