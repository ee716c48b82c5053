#!/usr/bin/env python3
"""Thin an exported run for use as a test fixture.

Reads a run directory (trajectories.csv + metrics.json as written by
`pts-sim simulate`) and writes a strided copy: only every Nth step of the
trajectory table and of each per-step series is kept.  `sample_interval`
is multiplied by the stride so consumers can still reconstruct the time
axis; all other metadata (dt, steps, times, minima) is left untouched.

Usage: downsample.py <run_dir> <out_dir> <stride>

This is a pure post-processor of the exported files; it does not import
the simulator.
"""

import csv
import json
import sys
from pathlib import Path


def main() -> None:
    if len(sys.argv) != 4:
        sys.exit(__doc__)
    run_dir, out_dir, stride = Path(sys.argv[1]), Path(sys.argv[2]), int(sys.argv[3])
    if stride < 1:
        sys.exit("stride must be >= 1")
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(run_dir / "trajectories.csv", newline="") as src, \
            open(out_dir / "trajectories.csv", "w", newline="") as dst:
        reader = csv.reader(src)
        writer = csv.writer(dst, lineterminator="\n")
        writer.writerow(next(reader))
        for row in reader:
            if int(row[0]) % stride == 0:
                writer.writerow(row)

    doc = json.loads((run_dir / "metrics.json").read_text())
    doc["sample_interval"] = doc["sample_interval"] * stride
    for key in ("min_pairwise_distance", "min_pairwise_separation"):
        if key in doc:
            doc[key] = {fid: series[::stride] for fid, series in doc[key].items()}
    doc["follower_distance"] = {
        fid: [series[::stride] for series in robots]
        for fid, robots in doc["follower_distance"].items()}
    with open(out_dir / "metrics.json", "w") as handle:
        json.dump(doc, handle, indent=None, separators=(",", ":"))
        handle.write("\n")


if __name__ == "__main__":
    main()
