"""Influence-integration core with compiled/pure-Python backend selection.

The Cython extension is preferred when importable; set the environment
variable ``VISCOBEM_BACKEND=python`` (or ``cython``) to force a choice.
Both backends implement the same flat-array API and the same composite
Gauss rule, so results agree to rounding.
"""

from __future__ import annotations

import os

import numpy as np

from . import _influence_np

_choice = os.environ.get("VISCOBEM_BACKEND", "auto").lower()
_impl = None
if _choice in ("auto", "cython"):
    try:
        from . import _influence_cy as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = None
        if _choice == "cython":
            raise
if _impl is None:
    _impl = _influence_np
    BACKEND = "python"


def backend_name() -> str:
    """Name of the active influence backend ('cython' or 'python')."""
    return BACKEND


def gauss_rule(n: int):
    """Gauss-Legendre nodes/weights on [-1, 1], shared by both backends."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    return np.ascontiguousarray(x), np.ascontiguousarray(w)


def boundary_influence(points, point_node, nodes, conn, normals, lengths,
                       nu, mu, ngauss=8, near_ratio=2.0, max_subdiv=256,
                       impl=None):
    gx, gw = gauss_rule(ngauss)
    fn = (impl or _impl).boundary_influence
    return fn(np.ascontiguousarray(points, dtype=float),
              np.ascontiguousarray(point_node, dtype=np.int64),
              np.ascontiguousarray(nodes, dtype=float),
              np.ascontiguousarray(conn, dtype=np.int64),
              np.ascontiguousarray(normals, dtype=float),
              np.ascontiguousarray(lengths, dtype=float),
              float(nu), float(mu), gx, gw, float(near_ratio), int(max_subdiv))


def stress_influence(points, nodes, conn, normals, lengths,
                     nu, mu, ngauss=8, near_ratio=2.0, max_subdiv=256,
                     impl=None):
    gx, gw = gauss_rule(ngauss)
    fn = (impl or _impl).stress_influence
    return fn(np.ascontiguousarray(points, dtype=float),
              np.ascontiguousarray(nodes, dtype=float),
              np.ascontiguousarray(conn, dtype=np.int64),
              np.ascontiguousarray(normals, dtype=float),
              np.ascontiguousarray(lengths, dtype=float),
              float(nu), float(mu), gx, gw, float(near_ratio), int(max_subdiv))
