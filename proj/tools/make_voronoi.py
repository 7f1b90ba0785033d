#!/usr/bin/env python3
"""Write a Lloyd-relaxed Voronoi mesh of the unit square in off-poly format.

Test fixture helper; the solver itself only imports meshes. Sites are mirrored
across the four sides so that the Voronoi regions of the original sites tile
the square exactly.
"""
import argparse

import numpy as np
from scipy.spatial import Voronoi


def bounded_regions(sites):
    mirrored = [sites,
                np.column_stack([-sites[:, 0], sites[:, 1]]),
                np.column_stack([2.0 - sites[:, 0], sites[:, 1]]),
                np.column_stack([sites[:, 0], -sites[:, 1]]),
                np.column_stack([sites[:, 0], 2.0 - sites[:, 1]])]
    vor = Voronoi(np.vstack(mirrored))
    regions = [vor.regions[vor.point_region[i]] for i in range(len(sites))]
    return vor.vertices, regions


def lloyd(sites, iterations):
    for _ in range(iterations):
        verts, regions = bounded_regions(sites)
        new = []
        for reg in regions:
            p = verts[reg]
            x, y = p[:, 0], p[:, 1]
            xs, ys = np.roll(x, -1), np.roll(y, -1)
            cr = x * ys - xs * y
            a = cr.sum() / 2.0
            new.append([((x + xs) * cr).sum() / (6 * a), ((y + ys) * cr).sum() / (6 * a)])
        sites = np.array(new)
    return sites


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("cells", type=int)
    ap.add_argument("output")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--lloyd", type=int, default=30)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    sites = lloyd(rng.random((args.cells, 2)), args.lloyd)
    verts, regions = bounded_regions(sites)

    # snap to the square and merge coincident vertices
    verts = np.clip(verts, 0.0, 1.0)
    verts[np.abs(verts) < 1e-12] = 0.0
    verts[np.abs(verts - 1.0) < 1e-12] = 1.0
    index, out_verts, cells = {}, [], []
    for reg in regions:
        loop = []
        for v in reg:
            key = tuple(np.round(verts[v], 12))
            if key not in index:
                index[key] = len(out_verts)
                out_verts.append(verts[v])
            if not loop or loop[-1] != index[key]:
                loop.append(index[key])
        if loop[0] == loop[-1]:
            loop.pop()
        p = np.array([out_verts[i] for i in loop])
        x, y = p[:, 0], p[:, 1]
        if (x * np.roll(y, -1) - np.roll(x, -1) * y).sum() < 0:
            loop.reverse()
        cells.append(loop)

    with open(args.output, "w") as f:
        f.write("NPOLY\n%d\n" % len(out_verts))
        for v in out_verts:
            f.write("%.17g %.17g\n" % (v[0], v[1]))
        f.write("%d\n" % len(cells))
        for c in cells:
            f.write("%d %s\n" % (len(c), " ".join(map(str, c))))


if __name__ == "__main__":
    main()
