"""NumPy implementation of the element-influence integration core.

Fallback for (and reference of) the Cython module `_influence_cy`; both
expose the same flat-array API and must produce the same numbers for the
same Gauss rule.

Column layout of all element-based outputs: 4 columns per element,
``4*m + 2*local + component`` where ``local`` is the element-end index
(0 or 1) and ``component`` the Cartesian direction.  Row layout: 2 rows
per evaluation point (displacement kernels) or 3 rows per point (stress
kernels, components xx, yy, xy).

Weakly/strongly singular self-integrals (evaluation point equal to an
element end) use the analytic log antiderivative for the displacement
kernel; the traction kernel keeps only the finite far-end shape-function
part, the divergent near-end part being left for the rigid-body diagonal
completion done by the assembler.
"""

from __future__ import annotations

import numpy as np


def _subdivisions(point, x1, dvec, lengths, near_ratio, max_subdiv):
    """Composite-rule panel count per element for one evaluation point."""
    rel = point[None, :] - x1
    ll2 = np.maximum(lengths * lengths, 1e-300)
    proj = np.clip((rel * dvec).sum(axis=1) / ll2, 0.0, 1.0)
    close = x1 + proj[:, None] * dvec
    dist = np.hypot(*(point[None, :] - close).T)
    need = np.ceil(near_ratio * lengths / np.maximum(dist, 1e-300))
    counts = np.where(dist >= near_ratio * lengths, 1.0, need)
    return np.minimum(counts, max_subdiv).astype(np.int64)


def _composite_rule(gx, gw, c):
    """Panels x base Gauss rule mapped to [0, 1]."""
    j = np.arange(c)[:, None]
    s = ((j + (gx[None, :] + 1.0) * 0.5) / c).ravel()
    w = np.tile(gw * 0.5 / c, c)
    return s, w


def boundary_influence(points, point_node, nodes, conn, normals, lengths,
                       nu, mu, gx, gw, near_ratio=2.0, max_subdiv=256):
    """Traction (H) and displacement (G) influence blocks.

    Parameters
    ----------
    points : (P, 2) evaluation points
    point_node : (P,) mesh-node index of each point, -1 if the point is
        not a mesh node (interior representation use)
    nodes, conn, normals, lengths : mesh arrays
    gx, gw : base Gauss-Legendre rule on [-1, 1]

    Returns
    -------
    He, Ge : (2P, 4M) element-based influence blocks
    """
    points = np.asarray(points, dtype=float)
    P, M = len(points), len(conn)
    He = np.zeros((2 * P, 4 * M))
    Ge = np.zeros((2 * P, 4 * M))

    x1 = nodes[conn[:, 0]]
    dvec = nodes[conn[:, 1]] - x1
    kU = 1.0 / (8.0 * np.pi * mu * (1.0 - nu))
    kT = -1.0 / (4.0 * np.pi * (1.0 - nu))
    c2 = 1.0 - 2.0 * nu
    c3 = 3.0 - 4.0 * nu

    for p in range(P):
        pt = points[p]
        counts = _subdivisions(pt, x1, dvec, lengths, near_ratio, max_subdiv)
        sing = np.zeros(M, dtype=bool)
        pn = int(point_node[p])
        if pn >= 0:
            sing = (conn[:, 0] == pn) | (conn[:, 1] == pn)
            counts[sing] = 0  # handled analytically below

        for c in np.unique(counts):
            if c == 0:
                continue
            sel = np.nonzero(counts == c)[0]
            s, w = _composite_rule(gx, gw, int(c))
            xq = x1[sel, None, :] + s[None, :, None] * dvec[sel, None, :]
            rv = xq - pt[None, None, :]
            r = np.hypot(rv[..., 0], rv[..., 1])
            rd = rv / r[..., None]
            n = normals[sel]
            drdn = rd[..., 0] * n[:, None, 0] + rd[..., 1] * n[:, None, 1]
            lg = c3 * np.log(1.0 / r)
            wn = np.stack([w * (1.0 - s), w * s])  # (2, Q) shape-fn weights
            L = lengths[sel]
            for i in range(2):
                for j in range(2):
                    dij = 1.0 if i == j else 0.0
                    U = kU * (lg * dij + rd[..., i] * rd[..., j])
                    T = (kT / r) * (drdn * (c2 * dij + 2.0 * rd[..., i] * rd[..., j])
                                    + c2 * (n[:, None, i] * rd[..., j]
                                            - n[:, None, j] * rd[..., i]))
                    for loc in range(2):
                        col = 4 * sel + 2 * loc + j
                        Ge[2 * p + i, col] = L * (U @ wn[loc])
                        He[2 * p + i, col] = L * (T @ wn[loc])

        for m in np.nonzero(sing)[0]:
            loc_near = 0 if conn[m, 0] == pn else 1
            L = lengths[m]
            th = dvec[m] / L
            n = normals[m]
            rdir = th if loc_near == 0 else -th
            i_log = (0.75 - 0.5 * np.log(L), 0.25 - 0.5 * np.log(L))
            for i in range(2):
                for j in range(2):
                    dij = 1.0 if i == j else 0.0
                    for loc in range(2):
                        ilog = i_log[0] if loc == loc_near else i_log[1]
                        col = 4 * m + 2 * loc + j
                        Ge[2 * p + i, col] = kU * L * (c3 * ilog * dij
                                                       + 0.5 * th[i] * th[j])
                    far = 2 * (1 - loc_near)
                    He[2 * p + i, 4 * m + far + j] = kT * c2 * (n[i] * rdir[j]
                                                                - n[j] * rdir[i])
    return He, Ge


def stress_influence(points, nodes, conn, normals, lengths,
                     nu, mu, gx, gw, near_ratio=2.0, max_subdiv=256):
    """Interior stress representation blocks.

    Returns (De, Se), each (3P, 4M): sigma(xi) = De @ t_elem - Se @ u_elem
    with rows ordered (xx, yy, xy) per point.  Points must not lie on the
    boundary (no singular branch here).
    """
    points = np.asarray(points, dtype=float)
    P, M = len(points), len(conn)
    De = np.zeros((3 * P, 4 * M))
    Se = np.zeros((3 * P, 4 * M))

    x1 = nodes[conn[:, 0]]
    dvec = nodes[conn[:, 1]] - x1
    kD = 1.0 / (4.0 * np.pi * (1.0 - nu))
    kS = mu / (2.0 * np.pi * (1.0 - nu))
    c2 = 1.0 - 2.0 * nu
    comps = ((0, 0), (1, 1), (0, 1))

    for p in range(P):
        pt = points[p]
        counts = _subdivisions(pt, x1, dvec, lengths, near_ratio, max_subdiv)
        for c in np.unique(counts):
            sel = np.nonzero(counts == c)[0]
            s, w = _composite_rule(gx, gw, int(c))
            xq = x1[sel, None, :] + s[None, :, None] * dvec[sel, None, :]
            rv = xq - pt[None, None, :]
            r = np.hypot(rv[..., 0], rv[..., 1])
            rd = rv / r[..., None]
            n = normals[sel]
            nn = (n[:, None, 0], n[:, None, 1])
            drdn = rd[..., 0] * nn[0] + rd[..., 1] * nn[1]
            wn = np.stack([w * (1.0 - s), w * s])
            L = lengths[sel]
            for row, (i, j) in enumerate(comps):
                dij = 1.0 if i == j else 0.0
                rij = rd[..., i] * rd[..., j]
                for k in range(2):
                    dki = 1.0 if k == i else 0.0
                    dkj = 1.0 if k == j else 0.0
                    D = (kD / r) * (c2 * (dki * rd[..., j] + dkj * rd[..., i]
                                          - dij * rd[..., k])
                                    + 2.0 * rij * rd[..., k])
                    S = (kS / (r * r)) * (
                        2.0 * drdn * (c2 * dij * rd[..., k]
                                      + nu * (dki * rd[..., j] + dkj * rd[..., i])
                                      - 4.0 * rij * rd[..., k])
                        + 2.0 * nu * (nn[i] * rd[..., j] * rd[..., k]
                                      + nn[j] * rd[..., i] * rd[..., k])
                        + c2 * (2.0 * nn[k] * rij + nn[j] * dki + nn[i] * dkj)
                        - (1.0 - 4.0 * nu) * nn[k] * dij)
                    for loc in range(2):
                        col = 4 * sel + 2 * loc + k
                        De[3 * p + row, col] = L * (D @ wn[loc])
                        Se[3 * p + row, col] = L * (S @ wn[loc])
    return De, Se
