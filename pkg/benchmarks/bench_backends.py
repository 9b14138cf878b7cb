#!/usr/bin/env python3
"""Benchmark the Cython influence core against the NumPy fallback.

Times the hot kernels (boundary collocation assembly and interior stress
representation) on the shipped benchmark geometries and prints a table.
Run from the repository root::

    python benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import time

import numpy as np

import viscobem as vb
from viscobem import _core
from viscobem._core import _influence_np

try:
    from viscobem._core import _influence_cy
except ImportError:
    _influence_cy = None


def time_call(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_mesh(label, mesh, mat, repeat):
    from viscobem.assembly import assemble_region
    reg = assemble_region(mesh, 0, mat)  # warm caches; gives arrays
    pts = reg.nodes
    pn = np.arange(len(pts), dtype=np.int64)
    gx, gw = _core.gauss_rule(8)
    args_b = (pts, pn, reg.nodes, reg.conn, reg.normals, reg.lengths,
              mat.nu, mat.mu, gx, gw, 2.0, 256)
    interior = reg.nodes.mean(axis=0) + 0.02 * (reg.nodes[:32] - reg.nodes.mean(axis=0))
    args_s = (np.ascontiguousarray(interior), reg.nodes, reg.conn, reg.normals,
              reg.lengths, mat.nu, mat.mu, gx, gw, 2.0, 256)

    rows = []
    t_np = time_call(_influence_np.boundary_influence, *args_b, repeat=repeat)
    rows.append(("boundary", "python", t_np, 1.0))
    if _influence_cy is not None:
        t_cy = time_call(_influence_cy.boundary_influence, *args_b, repeat=repeat)
        rows.append(("boundary", "cython", t_cy, t_np / t_cy))
        Hn, Gn = _influence_np.boundary_influence(*args_b)
        Hc, Gc = _influence_cy.boundary_influence(*args_b)
        agree = max(np.abs(Hn - Hc).max(), np.abs(Gn - Gc).max())
    else:
        agree = float("nan")
    t_np = time_call(_influence_np.stress_influence, *args_s, repeat=repeat)
    rows.append(("stress", "python", t_np, 1.0))
    if _influence_cy is not None:
        t_cy = time_call(_influence_cy.stress_influence, *args_s, repeat=repeat)
        rows.append(("stress", "cython", t_cy, t_np / t_cy))

    print(f"\n{label}: {mesh.n_elems} elements, {len(pts)} collocation points "
          f"(backend agreement {agree:.2e})")
    for kernel, backend, t, speedup in rows:
        print(f"  {kernel:<9} {backend:<7} {t * 1e3:9.2f} ms   x{speedup:5.2f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"active backend: {vb.backend_name()}")
    bench_mesh("bar 180", vb.rectangle_mesh(800.0, 100.0, 80, 10),
               vb.Material(E=11.0e3, nu=0.0), args.repeat)
    bench_mesh("disk 270", vb.quarter_disk_mesh(0.75, 13.5, 60, 170, 20),
               vb.Material(E=70.0, nu=0.35), args.repeat)
    bench_mesh("bar 720", vb.rectangle_mesh(800.0, 100.0, 320, 40),
               vb.Material(E=11.0e3, nu=0.0), args.repeat)


if __name__ == "__main__":
    main()
