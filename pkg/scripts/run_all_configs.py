"""Run every shipped config through the CLI and write CSVs to an output directory."""

import argparse
import json
import pathlib
import sys

from eik.cli import main

ROOT = pathlib.Path(__file__).resolve().parent.parent


def run(config_dir, out_dir):
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for path in sorted(config_dir.glob("*.json")):
        kind = json.loads(path.read_text())["kind"]
        out = out_dir / f"{path.stem}.csv"
        print(f"[{kind}] {path.name} -> {out}")
        code = main([kind, "--config", str(path), "--out", str(out)])
        failures += code != 0
    return failures


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--configs", type=pathlib.Path, default=ROOT / "configs")
    p.add_argument("--out", type=pathlib.Path, default=ROOT / "results")
    args = p.parse_args()
    sys.exit(1 if run(args.configs, args.out) else 0)
