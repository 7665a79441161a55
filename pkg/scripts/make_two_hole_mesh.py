"""Write a MESH v1 file for the unit disk with two circular holes.

Points are placed on concentric rings around each hole and on the outer
circle, filled with a hexagonal lattice, and triangulated with
scipy's Delaunay. Triangles whose centroid lies inside a hole circle get
that hole's region; interface edges are tagged from the region labels.

    python3 scripts/make_two_hole_mesh.py tests/data/two_hole.mesh
"""

import argparse
from collections import Counter

import numpy as np
from scipy.spatial import Delaunay

from talenti_lab.mesh import Mesh, export_mesh, validate_mesh

HOLES = (((-0.45, 0.0), 0.2), ((0.4, 0.1), 0.15))


def circle(c, r, m, phase=0.0):
    th = phase + 2 * np.pi * np.arange(m) / m
    return np.column_stack([c[0] + r * np.cos(th), c[1] + r * np.sin(th)])


def build(h=0.025, R0=1.0):
    pts = [circle((0.0, 0.0), R0, int(np.ceil(2 * np.pi * R0 / h)))]
    near = []
    for c, r in HOLES:
        m = int(np.ceil(2 * np.pi * r / h))
        # the hole boundary plus one ring on each side pins the interface edges
        for s in (-1, 0, 1):
            pts.append(circle(c, r + s * 0.5 * h, m, phase=0.0 if s == 0 else np.pi / m))
        rr = r - 1.5 * h
        while rr > 0.5 * h:
            pts.append(circle(c, rr, max(6, int(np.ceil(2 * np.pi * rr / h)))))
            rr -= h
        pts.append(np.array([c]))
        near.append((np.asarray(c), r + 1.2 * h))
    g = np.arange(-R0, R0 + h, h * np.sqrt(3) / 2)
    xs, ys = np.meshgrid(np.arange(-R0, R0 + h, h), g)
    xs = xs + 0.5 * h * (np.arange(len(g))[:, None] % 2)
    lattice = np.column_stack([xs.ravel(), ys.ravel()])
    keep = np.hypot(*lattice.T) < R0 - 0.7 * h
    for c, outer in near:
        keep &= np.hypot(*(lattice - c).T) > outer
    pts.append(lattice[keep])
    V = np.vstack(pts)

    tri = Delaunay(V).simplices.astype(np.int64)
    P = V[tri]
    # orient counter-clockwise
    cross = (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1]) - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    tri[cross < 0] = tri[cross < 0][:, [0, 2, 1]]
    tri = tri[np.abs(cross) > 1e-14]
    cen = V[tri].mean(axis=1)
    regions = np.zeros(len(tri), dtype=np.int64)
    for i, (c, r) in enumerate(HOLES, start=1):
        regions[np.hypot(*(cen - np.asarray(c)).T) < r] = i

    owner = {}
    count = Counter()
    for t, tr in enumerate(tri.tolist()):
        for a in range(3):
            key = tuple(sorted((tr[a], tr[(a + 1) % 3])))
            count[key] += 1
            owner.setdefault(key, []).append(int(regions[t]))
    edges, tags = [], []
    for key in sorted(count):
        rs = owner[key]
        if count[key] == 1:
            edges.append(key)
            tags.append(0)
        elif rs[0] != rs[1]:
            edges.append(key)
            tags.append(max(rs))
    mesh = Mesh(V, tri, regions, np.array(edges), np.array(tags))
    validate_mesh(mesh)
    return mesh


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--h", type=float, default=0.025)
    args = ap.parse_args()
    mesh = build(args.h)
    export_mesh(mesh, args.out)
    print(f"{args.out}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, {mesh.hole_count} holes")


if __name__ == "__main__":
    main()
