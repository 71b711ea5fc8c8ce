#!/usr/bin/env python3
"""Print Hopf-image distance vs necksize, and its dependence on t_range."""
import argparse

from unduloid_lab.classify import classify_unduloid
from unduloid_lab.config import SWEEP
from unduloid_lab.delaunay import NecksizeParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t-ranges", default="2,3,4")
    args = ap.parse_args()
    ts = [float(x) for x in args.t_ranges.split(",")]
    print("n," + ",".join(f"err_t{t:g}" for t in ts))
    for n in SWEEP:
        errs = [classify_unduloid(NecksizeParams(n), t_range=t).error for t in ts]
        print(f"{n}," + ",".join(f"{e:.3e}" for e in errs))


if __name__ == "__main__":
    main()
