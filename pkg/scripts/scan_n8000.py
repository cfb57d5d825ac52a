"""Simulated direct-scheme scan with N=8000 runs per point.

Drives the command-line tool with a polar grid and prints the largest
statistical error, which approaches 1/sqrt(N) far from the state.
"""

import argparse
import csv
import io
import json
import math
import pathlib
import tempfile

from photocount.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--state", default='{"type": "fock", "n": 1}')
    ap.add_argument("--efficiency", type=float, default=0.9)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("results/scan_n8000.csv"))
    args = ap.parse_args()
    cfg = {"state": json.loads(args.state), "efficiency": args.efficiency, "N": 8000, "seed": args.seed,
           "grid": {"kind": "polar", "radius": [0, 3, 20], "phases": 40}}
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(cfg, fh)
    rc = cli(["simulate", "--config", fh.name, "--out", str(args.out)])
    pathlib.Path(fh.name).unlink()
    if rc:
        raise SystemExit(rc)
    body = [line for line in args.out.read_text().splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    worst = max(rows, key=lambda r: float(r["pcgf_error"]))
    print(f"{len(rows)} points, max pcgf error {float(worst['pcgf_error']):.5e} "
          f"at beta={worst['re']}{float(worst['im']):+}j; 1/sqrt(N) = {1 / math.sqrt(8000):.5e}")


if __name__ == "__main__":
    main()
