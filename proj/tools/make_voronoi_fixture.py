#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Write a Voronoi tessellation of the unit cube in the native JSON mesh format.

Seeds are a jittered n x n x n lattice. Cells are clipped to the box by
mirroring every seed across the six walls before calling qhull, so the cells
of the original seeds are exactly the clipped cells.

    make_voronoi_fixture.py --n 4 --jitter 0.3 --seed 7 --out voronoi_n4.json
"""

import argparse
import json

import numpy as np
from scipy.spatial import Voronoi


def mirrored(seeds):
    out = [seeds]
    for axis in range(3):
        for wall in (0.0, 1.0):
            m = seeds.copy()
            m[:, axis] = 2.0 * wall - m[:, axis]
            out.append(m)
    return np.vstack(out)


def ordered_loop(points, vids, normal):
    centre = points[vids].mean(axis=0)
    t1 = points[vids[0]] - centre
    t1 -= normal * np.dot(t1, normal)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    ang = [np.arctan2(np.dot(points[v] - centre, t2), np.dot(points[v] - centre, t1)) for v in vids]
    return [vids[i] for i in np.argsort(ang)]


def build(n, jitter, seed):
    rng = np.random.default_rng(seed)
    g = (np.arange(n) + 0.5) / n
    lattice = np.array(np.meshgrid(g, g, g, indexing="ij")).reshape(3, -1).T
    seeds = lattice + jitter / n * rng.uniform(-0.5, 0.5, lattice.shape)
    nseed = len(seeds)
    vor = Voronoi(mirrored(seeds))

    raw = vor.vertices.copy()
    raw[np.abs(raw) < 1e-12] = 0.0
    raw[np.abs(raw - 1.0) < 1e-12] = 1.0

    # merge qhull vertices that coincide to round-off
    key_to_id, remap, verts = {}, {}, []
    used = set()
    for (i, j), rv in zip(vor.ridge_points, vor.ridge_vertices):
        if i < nseed or j < nseed:
            used.update(rv)
    for v in sorted(used):
        if v < 0:
            raise RuntimeError("unbounded ridge touches an interior seed")
        key = tuple(np.round(raw[v] * 1e9).astype(np.int64))
        if key not in key_to_id:
            key_to_id[key] = len(verts)
            verts.append(raw[v])
        remap[v] = key_to_id[key]
    verts = np.array(verts)

    faces, cells = [], [[] for _ in range(nseed)]
    for (i, j), rv in zip(vor.ridge_points, vor.ridge_vertices):
        if i >= nseed and j >= nseed:
            continue
        if i >= nseed:
            i, j = j, i
        vids = list(dict.fromkeys(remap[v] for v in rv))
        if len(vids) < 3:
            continue
        normal = vor.points[j] - seeds[i]
        normal /= np.linalg.norm(normal)
        loop = ordered_loop(verts, vids, normal)
        area = 0.5 * np.linalg.norm(sum(np.cross(verts[loop[a]], verts[loop[(a + 1) % len(loop)]])
                                        for a in range(len(loop))))
        if area < 1e-14:
            continue
        faces.append(loop)
        fid = len(faces)
        cells[i].append(fid)
        if j < nseed:
            cells[j].append(-fid)

    return {
        "vertices": [[float(c) for c in v] for v in verts],
        "faces": [[int(v) for v in f] for f in faces],
        "cells": cells,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, required=True, help="seeds per direction")
    ap.add_argument("--jitter", type=float, default=0.3, help="lattice jitter as a fraction of the spacing")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    mesh = build(args.n, args.jitter, args.seed)
    with open(args.out, "w") as fh:
        json.dump(mesh, fh, separators=(",", ":"))
    print(f"{args.out}: {len(mesh['cells'])} cells, {len(mesh['faces'])} faces, {len(mesh['vertices'])} vertices")


if __name__ == "__main__":
    main()
