"""Critical-set dimensions for grid averaging matrices.

Tabulates rank and kernel of Omega and the dimension of the critical set
for torus and clamped grids of several sizes and neighborhood radii.
Small tori (side 2 or 3 with large radius) give rank-deficient Omega.
"""

import argparse
from pathlib import Path

from afmech.io import atomic_write, table_to_csv
from afmech.labeling import GridGraph, build_omega, mane_analysis


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("out"))
    ap.add_argument("--labels", type=int, default=3)
    args = ap.parse_args()

    cols = {k: [] for k in ("height", "width", "radius", "torus", "rank_omega", "dim_ker", "dim_sigma")}
    for side in (2, 3, 4, 5, 6):
        for radius in (1, 2):
            for boundary in ("torus", "clamped"):
                g = GridGraph(side, side, radius=radius, boundary=boundary, norm="linf")
                rep = mane_analysis(build_omega(g), args.labels)
                for key, val in zip(cols, (side, side, radius, boundary == "torus", rep.rank_omega,
                                           rep.dim_ker_omega, rep.dim_sigma)):
                    cols[key].append(val)
                print(f"{side}x{side} r={radius} {boundary:8s} rank {rep.rank_omega:3d}  "
                      f"ker {rep.dim_ker_omega:2d}  dim Sigma {rep.dim_sigma:3d}")
    atomic_write(args.out / "critical_dims.csv", table_to_csv(cols))


if __name__ == "__main__":
    main()
