#!/usr/bin/env python3
"""Cotangent mean-curvature error vs grid and t_range (truncation balance)."""
import numpy as np

from unduloid_lab.delaunay import cotan_mean_curvature, immerse, profile_for


def main():
    print("n,grid,t_range,max|H-1|")
    for n in (0.3, 1.5, np.pi):
        for grid in ((100, 50), (200, 100), (400, 200)):
            for tr in (2.0, 3.0):
                p = immerse(profile_for(n), t_range=tr, grid=grid)
                err = np.abs(cotan_mean_curvature(p) - 1).max()
                print(f"{n:.4g},{grid[0]}x{grid[1]},{tr:g},{err:.3e}")


if __name__ == "__main__":
    main()
