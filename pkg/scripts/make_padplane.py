#!/usr/bin/env python3
"""Write a rectangular-grid pad geometry CSV for testing and demos.

Usage:
    python scripts/make_padplane.py --nx 128 --ny 80 --pitch 2.5 --out plane.csv
"""

import argparse

from tpcnn.cloud import grid_padplane, write_padplane


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=64)
    ap.add_argument("--ny", type=int, default=64)
    ap.add_argument("--pitch", type=float, default=4.0)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    plane = grid_padplane(args.nx, args.ny, args.pitch)
    write_padplane(plane, args.out)
    print(f"wrote {plane.pad_count} pads to {args.out}")


if __name__ == "__main__":
    main()
