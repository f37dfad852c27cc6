"""Run every config in configs/ through the CLI and collect the CSVs in results/.

    python3 scripts/run_recipes.py [--threads N] [--out results]
"""
import argparse
import glob
import os
import sys

from ptdqd.cli import main as cli

COMMAND = {
    "balance": "tune-balance",
    "dynamics": "evolve",
    "transmission": "transmission",
    "steady": "steady",
    "compare": "compare-lindblad",
}


def command_for(name):
    for key, cmd in COMMAND.items():
        if key in name:
            return cmd
    raise SystemExit(f"cannot infer command for {name}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="results")
    ap.add_argument("--threads", default="1")
    args = ap.parse_args()
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    os.makedirs(args.out, exist_ok=True)
    failed = 0
    for cfg in sorted(glob.glob(os.path.join(root, "configs", "*.ini"))):
        name = os.path.splitext(os.path.basename(cfg))[0]
        cmd = command_for(name)
        code = cli([cmd, "--config", cfg, "--out", os.path.join(args.out, name + ".csv"), "--threads", args.threads])
        print(f"{name:36s} {cmd:18s} exit {code}")
        failed += code != 0
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
