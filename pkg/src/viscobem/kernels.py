"""Closed-form 2D plane-strain Kelvin fundamental solutions.

Reference scalar implementations used by the tests and by the NumPy
influence backend; the Cython core re-implements the same formulas in C.

Conventions (r = |x - xi|, rd_i = (x_i - xi_i)/r, n = unit outward normal
at x):

    U_ij = [ (3-4nu) ln(1/r) d_ij + rd_i rd_j ] / (8 pi mu (1-nu))
    T_ij = -[ dr/dn ((1-2nu) d_ij + 2 rd_i rd_j)
              + (1-2nu)(n_i rd_j - n_j rd_i) ] / (4 pi (1-nu) r)

The first index is the direction of the point force at xi, the second the
component at x.  With these signs the boundary identity C(xi) u(xi) +
CPV int T u dS = int U t dS holds with free term +1/2 I at smooth
boundary points, the contour integral of T around an interior point
equals -I, and rigid rotations are annihilated (the orientation of the
antisymmetric term is fixed by the latter, which constant fields cannot
see).

The stress kernels D, S give the interior stress representation

    sigma_ij(xi) = int D_kij(x, xi) t_k(x) dS - int S_kij(x, xi) u_k(x) dS.
"""

from __future__ import annotations

import numpy as np

__all__ = ["kelvin_U", "kelvin_T", "kelvin_DS", "SingularPointError"]

NORMAL_TOL = 1e-12


class SingularPointError(ValueError):
    """Kernel evaluated at zero distance (x == xi)."""


def _geometry(x, xi):
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    d = x - xi
    r = float(np.hypot(d[0], d[1]))
    if r == 0.0:
        raise SingularPointError("kernel evaluation at coincident points")
    return d / r, r


def kelvin_U(x, xi, mat) -> np.ndarray:
    """Displacement influence of a unit point force; symmetric 2x2."""
    rd, r = _geometry(x, xi)
    k = 1.0 / (8.0 * np.pi * mat.mu * (1.0 - mat.nu))
    lg = (3.0 - 4.0 * mat.nu) * np.log(1.0 / r)
    return k * (lg * np.eye(2) + np.outer(rd, rd))


def kelvin_T(x, xi, n, mat) -> np.ndarray:
    """Traction influence at x (normal n) of a unit point force at xi."""
    n = np.asarray(n, dtype=float)
    if abs(np.hypot(n[0], n[1]) - 1.0) > NORMAL_TOL:
        raise ValueError("normal vector must have unit length")
    rd, r = _geometry(x, xi)
    drdn = float(rd @ n)
    c2 = 1.0 - 2.0 * mat.nu
    k = -1.0 / (4.0 * np.pi * (1.0 - mat.nu) * r)
    sym = drdn * (c2 * np.eye(2) + 2.0 * np.outer(rd, rd))
    antisym = c2 * (np.outer(n, rd) - np.outer(rd, n))
    return k * (sym + antisym)


def kelvin_DS(x, xi, n, mat):
    """Stress-representation kernels at interior point xi.

    Returns (D, S), each shaped (3, 2): rows are the stress components
    (xx, yy, xy) at xi, columns the Cartesian component k of the boundary
    traction (for D) or displacement (for S) at x.
    """
    n = np.asarray(n, dtype=float)
    rd, r = _geometry(x, xi)
    nu = mat.nu
    mu = mat.mu
    c2 = 1.0 - 2.0 * nu
    drdn = float(rd @ n)

    D = np.empty((3, 2))
    S = np.empty((3, 2))
    kd = 1.0 / (4.0 * np.pi * (1.0 - nu) * r)
    ks = mu / (2.0 * np.pi * (1.0 - nu) * r * r)
    for row, (i, j) in enumerate(((0, 0), (1, 1), (0, 1))):
        dij = 1.0 if i == j else 0.0
        for k in range(2):
            dki = 1.0 if k == i else 0.0
            dkj = 1.0 if k == j else 0.0
            D[row, k] = kd * (c2 * (dki * rd[j] + dkj * rd[i] - dij * rd[k])
                              + 2.0 * rd[i] * rd[j] * rd[k])
            S[row, k] = ks * (
                2.0 * drdn * (c2 * dij * rd[k] + nu * (dki * rd[j] + dkj * rd[i])
                              - 4.0 * rd[i] * rd[j] * rd[k])
                + 2.0 * nu * (n[i] * rd[j] * rd[k] + n[j] * rd[i] * rd[k])
                + c2 * (2.0 * n[k] * rd[i] * rd[j] + n[j] * dki + n[i] * dkj)
                - (1.0 - 4.0 * nu) * n[k] * dij)
    return D, S
