"""FEM against the radial oracle on a concentric annulus over a resolution ladder.

Prints the max nodal error, the torsion error and the first-eigenvalue
error per resolution, with observed orders. Optional CSV output.

    python3 scripts/convergence_study.py --p 2 --levels 8 16 32 --csv conv.csv
"""

import argparse
import csv
import math
import time

import numpy as np

from talenti_lab.fem import SolveParams, SourceSpec, solve_eigen, solve_state, torsion
from talenti_lab.mesh import generate_annulus_mesh
from talenti_lab.radial import FStarSpec, radial_distribution, solve_radial, solve_radial_eigen


def study(p, beta, R0, R1, levels, eigen):
    prof = solve_radial(2, p, beta, R0, R1, FStarSpec.constant(1.0))
    T_ref = radial_distribution(prof).integral()
    lam_ref = solve_radial_eigen(2, p, beta, R0, R1, grid=4000).lam if eigen else None
    rows = []
    for k in levels:
        t0 = time.perf_counter()
        mesh = generate_annulus_mesh(R0, R1, k, 4 * k)
        params = SolveParams(p, beta)
        u = solve_state(mesh, params, SourceSpec.constant(1.0))
        nodal = float(np.max(np.abs(u.nodal - prof(np.hypot(*mesh.vertices.T))))) / prof.c_bar
        row = {"k": k, "vertices": mesh.n_vertices, "nodal_rel": nodal,
               "torsion_rel": abs(torsion(u) - T_ref) / T_ref}
        if eigen:
            row["lambda_rel"] = abs(solve_eigen(mesh, params)[0] - lam_ref) / lam_ref
        row["seconds"] = time.perf_counter() - t0
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--R0", type=float, default=1.0)
    ap.add_argument("--R1", type=float, default=0.5)
    ap.add_argument("--levels", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--no-eigen", action="store_true", help="skip the eigenvalue column")
    ap.add_argument("--csv", help="also write the table here")
    args = ap.parse_args()
    eigen = not args.no_eigen and float(args.p).is_integer() and args.p >= 2
    rows = study(args.p, args.beta, args.R0, args.R1, args.levels, eigen)
    keys = [k for k in rows[0] if k not in ("k", "vertices", "seconds")]
    print(f"{'k':>4} {'verts':>7} " + " ".join(f"{k:>12} {'order':>6}" for k in keys) + f" {'sec':>6}")
    for i, row in enumerate(rows):
        cells = []
        for key in keys:
            order = ""
            if i:
                prev = rows[i - 1]
                ratio = row["k"] / prev["k"]
                if row[key] > 0 and prev[key] > 0:
                    order = f"{math.log(prev[key] / row[key]) / math.log(ratio):6.2f}"
            cells.append(f"{row[key]:12.4e} {order:>6}")
        print(f"{row['k']:4d} {row['vertices']:7d} " + " ".join(cells) + f" {row['seconds']:6.2f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
