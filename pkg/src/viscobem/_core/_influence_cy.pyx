# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Cython implementation of the element-influence integration core.

Same API, column layout, subdivision rule and Gauss nodes as the NumPy
fallback `_influence_np`; kept in lockstep so the two backends agree to
floating-point rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, log, sqrt

cnp.import_array()


cdef inline double _clip01(double x) nogil:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


cdef inline long _panel_count(double px, double py, double ax, double ay,
                              double dx, double dy, double length,
                              double near_ratio, long max_subdiv) nogil:
    cdef double ll2 = length * length
    if ll2 < 1e-300:
        ll2 = 1e-300
    cdef double proj = _clip01(((px - ax) * dx + (py - ay) * dy) / ll2)
    cdef double cx = ax + proj * dx - px
    cdef double cy = ay + proj * dy - py
    cdef double dist = sqrt(cx * cx + cy * cy)
    if dist >= near_ratio * length:
        return 1
    cdef double need = ceil(near_ratio * length / (dist if dist > 1e-300 else 1e-300))
    if need > <double> max_subdiv:
        return max_subdiv
    return <long> need


def boundary_influence(const double[:, ::1] points, const long[::1] point_node,
                       const double[:, ::1] nodes, const long[:, ::1] conn,
                       const double[:, ::1] normals, const double[::1] lengths,
                       double nu, double mu,
                       const double[::1] gx, const double[::1] gw,
                       double near_ratio=2.0, long max_subdiv=256):
    cdef long P = points.shape[0]
    cdef long M = conn.shape[0]
    cdef long ng = gx.shape[0]
    He_arr = np.zeros((2 * P, 4 * M))
    Ge_arr = np.zeros((2 * P, 4 * M))
    cdef double[:, ::1] He = He_arr
    cdef double[:, ::1] Ge = Ge_arr

    cdef double pi = 3.14159265358979323846264338327950288
    cdef double kU = 1.0 / (8.0 * pi * mu * (1.0 - nu))
    cdef double kT = -1.0 / (4.0 * pi * (1.0 - nu))
    cdef double c2 = 1.0 - 2.0 * nu
    cdef double c3 = 3.0 - 4.0 * nu

    cdef long p, m, i, j, loc, panel, q, pn, loc_near, cpanels
    cdef double px, py, ax, ay, dx, dy, L, nx0, ny0
    cdef double s, w, xqx, xqy, rvx, rvy, r, rdx, rdy, drdn, lg
    cdef double u, t, wn0, wn1, thx, thy, rdirx, rdiry, ilog_near, ilog_far, ilog
    cdef double rd_i, rd_j, n_i, n_j, dij, th_i, th_j, rdir_i, rdir_j

    for p in range(P):
        px = points[p, 0]
        py = points[p, 1]
        pn = point_node[p]
        for m in range(M):
            ax = nodes[conn[m, 0], 0]
            ay = nodes[conn[m, 0], 1]
            dx = nodes[conn[m, 1], 0] - ax
            dy = nodes[conn[m, 1], 1] - ay
            L = lengths[m]
            nx0 = normals[m, 0]
            ny0 = normals[m, 1]

            if pn >= 0 and (conn[m, 0] == pn or conn[m, 1] == pn):
                # analytic endpoint-singular branch
                loc_near = 0 if conn[m, 0] == pn else 1
                thx = dx / L
                thy = dy / L
                if loc_near == 0:
                    rdirx = thx
                    rdiry = thy
                else:
                    rdirx = -thx
                    rdiry = -thy
                ilog_near = 0.75 - 0.5 * log(L)
                ilog_far = 0.25 - 0.5 * log(L)
                for i in range(2):
                    for j in range(2):
                        dij = 1.0 if i == j else 0.0
                        th_i = thx if i == 0 else thy
                        th_j = thx if j == 0 else thy
                        for loc in range(2):
                            ilog = ilog_near if loc == loc_near else ilog_far
                            Ge[2 * p + i, 4 * m + 2 * loc + j] = kU * L * (
                                c3 * ilog * dij + 0.5 * th_i * th_j)
                        rdir_i = rdirx if i == 0 else rdiry
                        rdir_j = rdirx if j == 0 else rdiry
                        n_i = nx0 if i == 0 else ny0
                        n_j = nx0 if j == 0 else ny0
                        He[2 * p + i, 4 * m + 2 * (1 - loc_near) + j] = kT * c2 * (
                            n_i * rdir_j - n_j * rdir_i)
                continue

            cpanels = _panel_count(px, py, ax, ay, dx, dy, L, near_ratio, max_subdiv)
            for panel in range(cpanels):
                for q in range(ng):
                    s = (panel + (gx[q] + 1.0) * 0.5) / cpanels
                    w = gw[q] * 0.5 / cpanels
                    xqx = ax + s * dx
                    xqy = ay + s * dy
                    rvx = xqx - px
                    rvy = xqy - py
                    r = sqrt(rvx * rvx + rvy * rvy)
                    rdx = rvx / r
                    rdy = rvy / r
                    drdn = rdx * nx0 + rdy * ny0
                    lg = c3 * log(1.0 / r)
                    wn0 = w * (1.0 - s)
                    wn1 = w * s
                    for i in range(2):
                        rd_i = rdx if i == 0 else rdy
                        n_i = nx0 if i == 0 else ny0
                        for j in range(2):
                            rd_j = rdx if j == 0 else rdy
                            n_j = nx0 if j == 0 else ny0
                            dij = 1.0 if i == j else 0.0
                            u = kU * (lg * dij + rd_i * rd_j)
                            t = (kT / r) * (drdn * (c2 * dij + 2.0 * rd_i * rd_j)
                                            + c2 * (n_i * rd_j - n_j * rd_i))
                            Ge[2 * p + i, 4 * m + j] += L * u * wn0
                            Ge[2 * p + i, 4 * m + 2 + j] += L * u * wn1
                            He[2 * p + i, 4 * m + j] += L * t * wn0
                            He[2 * p + i, 4 * m + 2 + j] += L * t * wn1
    return He_arr, Ge_arr


def stress_influence(const double[:, ::1] points,
                     const double[:, ::1] nodes, const long[:, ::1] conn,
                     const double[:, ::1] normals, const double[::1] lengths,
                     double nu, double mu,
                     const double[::1] gx, const double[::1] gw,
                     double near_ratio=2.0, long max_subdiv=256):
    cdef long P = points.shape[0]
    cdef long M = conn.shape[0]
    cdef long ng = gx.shape[0]
    De_arr = np.zeros((3 * P, 4 * M))
    Se_arr = np.zeros((3 * P, 4 * M))
    cdef double[:, ::1] De = De_arr
    cdef double[:, ::1] Se = Se_arr

    cdef double pi = 3.14159265358979323846264338327950288
    cdef double kD = 1.0 / (4.0 * pi * (1.0 - nu))
    cdef double kS = mu / (2.0 * pi * (1.0 - nu))
    cdef double c2 = 1.0 - 2.0 * nu

    cdef long p, m, row, k, loc, panel, q, cpanels, i, j
    cdef double px, py, ax, ay, dx, dy, L, nx0, ny0
    cdef double s, w, xqx, xqy, rvx, rvy, r, rdx, rdy, drdn
    cdef double wn0, wn1, d, sv, rij
    cdef double rd_i, rd_j, rd_k, n_i, n_j, n_k, dij, dki, dkj
    cdef long ii[3]
    cdef long jj[3]
    ii[0] = 0; ii[1] = 1; ii[2] = 0
    jj[0] = 0; jj[1] = 1; jj[2] = 1

    for p in range(P):
        px = points[p, 0]
        py = points[p, 1]
        for m in range(M):
            ax = nodes[conn[m, 0], 0]
            ay = nodes[conn[m, 0], 1]
            dx = nodes[conn[m, 1], 0] - ax
            dy = nodes[conn[m, 1], 1] - ay
            L = lengths[m]
            nx0 = normals[m, 0]
            ny0 = normals[m, 1]
            cpanels = _panel_count(px, py, ax, ay, dx, dy, L, near_ratio, max_subdiv)
            for panel in range(cpanels):
                for q in range(ng):
                    s = (panel + (gx[q] + 1.0) * 0.5) / cpanels
                    w = gw[q] * 0.5 / cpanels
                    xqx = ax + s * dx
                    xqy = ay + s * dy
                    rvx = xqx - px
                    rvy = xqy - py
                    r = sqrt(rvx * rvx + rvy * rvy)
                    rdx = rvx / r
                    rdy = rvy / r
                    drdn = rdx * nx0 + rdy * ny0
                    wn0 = w * (1.0 - s)
                    wn1 = w * s
                    for row in range(3):
                        i = ii[row]
                        j = jj[row]
                        dij = 1.0 if i == j else 0.0
                        rd_i = rdx if i == 0 else rdy
                        rd_j = rdx if j == 0 else rdy
                        n_i = nx0 if i == 0 else ny0
                        n_j = nx0 if j == 0 else ny0
                        rij = rd_i * rd_j
                        for k in range(2):
                            dki = 1.0 if k == i else 0.0
                            dkj = 1.0 if k == j else 0.0
                            rd_k = rdx if k == 0 else rdy
                            n_k = nx0 if k == 0 else ny0
                            d = (kD / r) * (c2 * (dki * rd_j + dkj * rd_i
                                                  - dij * rd_k)
                                            + 2.0 * rij * rd_k)
                            sv = (kS / (r * r)) * (
                                2.0 * drdn * (c2 * dij * rd_k
                                              + nu * (dki * rd_j + dkj * rd_i)
                                              - 4.0 * rij * rd_k)
                                + 2.0 * nu * (n_i * rd_j * rd_k
                                              + n_j * rd_i * rd_k)
                                + c2 * (2.0 * n_k * rij + n_j * dki + n_i * dkj)
                                - (1.0 - 4.0 * nu) * n_k * dij)
                            De[3 * p + row, 4 * m + k] += L * d * wn0
                            De[3 * p + row, 4 * m + 2 + k] += L * d * wn1
                            Se[3 * p + row, 4 * m + k] += L * sv * wn0
                            Se[3 * p + row, 4 * m + 2 + k] += L * sv * wn1
    return De_arr, Se_arr
