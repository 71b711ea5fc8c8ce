#!/usr/bin/env python3
"""Floquet trace and class for each Fourier mode over a necksize sweep."""
import argparse

from unduloid_lab.delaunay import NecksizeParams
from unduloid_lab.jacobi_modes import classify_mode, mode_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--necksizes", default="0.3,0.9,1.5,2.1,2.7,3.141592653589793")
    ap.add_argument("--m-max", type=int, default=6)
    args = ap.parse_args()
    print("n,m,trace,class,tempered,wronskian_defect")
    for n in (float(x) for x in args.necksizes.split(",")):
        for d in mode_sweep(NecksizeParams(n), args.m_max):
            cls, cnt = classify_mode(d)
            print(f"{n:.6g},{d.m},{d.trace:.10g},{cls},{cnt},{d.wronskian_defect:.2e}")


if __name__ == "__main__":
    main()
