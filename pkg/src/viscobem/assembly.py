"""Collocation assembly of boundary influence matrices and mixed systems.

Per region, collocation at every node yields ``H v = G t`` with the
traction influence G kept element-based (4 columns per element) so that
known tractions may jump across corners.  The strongly singular diagonal
of H is never integrated: it is completed from the off-diagonal blocks by
the rigid-body technique (row block sums of H must annihilate both rigid
translations).

The mixed system rearranges the equation as ``G t_unknown - H v_unknown =
rhs(step data)`` so an all-Dirichlet problem keeps A = G.  The matrix is
time independent; it is LU-factored once and only right-hand sides change
across time steps.  Contact normal displacements and tractions are kept
as separate column groups for the contact solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import _core
from .model import (BCGroup, CONTACT, DIRICHLET, LoadProgram, Material, Mesh,
                    NEUMANN)

__all__ = [
    "RegionBem",
    "assemble_region",
    "rigid_body_diagonal",
    "element_influence",
    "boundary_mass",
    "MixedSystem",
    "UnsupportedConfigurationError",
]

INTERFACE = "interface"  # internal kind for coupled-region element groups


class UnsupportedConfigurationError(RuntimeError):
    """Boundary-condition layout the solver rejects (e.g. pure Neumann)."""


# ---------------------------------------------------------------------------
# Region assembly
# ---------------------------------------------------------------------------

@dataclass
class RegionBem:
    """Assembled influence operators of one region.

    Arrays are region-local: ``node_ids``/``elem_ids`` map local indices
    back to the global mesh.  ``H`` is nodal (2n x 2n, diagonal completed),
    ``Ge`` element-based (2n x 4m).
    """

    rid: int
    mat: Material
    node_ids: np.ndarray
    elem_ids: np.ndarray
    nodes: np.ndarray
    conn: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray
    lengths: np.ndarray
    group: np.ndarray
    H: np.ndarray
    Ge: np.ndarray
    ngauss: int

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elems(self) -> int:
        return len(self.conn)

    @property
    def G(self) -> np.ndarray:
        """Nodal displacement-influence matrix (element columns merged)."""
        return scatter_to_nodes(self.Ge, self.conn, self.n_nodes)

    def incident(self) -> list[list[tuple[int, int]]]:
        """Per local node: (element, local end) pairs, ordered by element."""
        inc: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for m, (a, b) in enumerate(self.conn):
            inc[a].append((m, 0))
            inc[b].append((m, 1))
        return inc

    def spread_nodal(self, v: np.ndarray) -> np.ndarray:
        """Nodal vector (2n,) -> element-entry vector (4m,)."""
        out = np.empty(4 * self.n_elems)
        out[0::4] = v[2 * self.conn[:, 0]]
        out[1::4] = v[2 * self.conn[:, 0] + 1]
        out[2::4] = v[2 * self.conn[:, 1]]
        out[3::4] = v[2 * self.conn[:, 1] + 1]
        return out


def scatter_to_nodes(Ae: np.ndarray, conn: np.ndarray, n_nodes: int) -> np.ndarray:
    """Accumulate element-based columns (rows x 4m) into nodal columns."""
    A = np.zeros((Ae.shape[0], 2 * n_nodes))
    for loc in range(2):
        for j in range(2):
            cols = 2 * conn[:, loc] + j
            np.add.at(A.T, cols, Ae[:, 4 * np.arange(len(conn)) + 2 * loc + j].T)
    return A


def rigid_body_diagonal(H: np.ndarray) -> np.ndarray:
    """Complete the 2x2 diagonal blocks of nodal H in place.

    Each diagonal block (free term plus the deferred Cauchy principal
    value) is set so that both rigid translations are annihilated exactly:
    it equals minus the sum of all off-diagonal blocks in its block row.
    """
    n = H.shape[0] // 2
    for j in range(2):
        rs = H[:, j::2].sum(axis=1)
        idx = 2 * np.arange(n)
        H[idx, idx + j] -= rs[0::2]
        H[idx + 1, idx + j] -= rs[1::2]
    return H


def assemble_region(mesh: Mesh, rid: int, mat: Material, ngauss: int = 8) -> RegionBem:
    """Collocate at every node of a mesh region and build H (nodal) and Ge."""
    elem_ids = mesh.elems_of_region(rid)
    node_ids = mesh.nodes_of_region(rid)
    local = {int(g): i for i, g in enumerate(node_ids)}
    conn = np.array([[local[int(a)], local[int(b)]] for a, b in mesh.elems[elem_ids]],
                    dtype=np.int64)
    nodes = mesh.nodes[node_ids]

    pts = nodes
    point_node = np.arange(len(nodes), dtype=np.int64)
    He, Ge = _core.boundary_influence(
        pts, point_node, nodes, conn, mesh.normals[elem_ids],
        mesh.lengths[elem_ids], mat.nu, mat.mu, ngauss=ngauss)
    H = scatter_to_nodes(He, conn, len(nodes))
    rigid_body_diagonal(H)
    return RegionBem(rid=int(rid), mat=mat, node_ids=node_ids, elem_ids=elem_ids,
                     nodes=nodes, conn=conn, normals=mesh.normals[elem_ids].copy(),
                     tangents=mesh.tangents[elem_ids].copy(),
                     lengths=mesh.lengths[elem_ids].copy(),
                     group=mesh.group[elem_ids].copy(), H=H, Ge=Ge, ngauss=ngauss)


def element_influence(point, elem_nodes, normal, mat: Material,
                      singular_end: int | None = None, ngauss: int = 8):
    """Influence blocks (h, g), each 2x4, of one linear element on one point.

    ``singular_end`` marks the element end (0 or 1) coinciding with the
    evaluation point; the strongly singular near-end traction part is then
    left at zero (rigid-body convention).
    """
    en = np.asarray(elem_nodes, dtype=float)
    d = en[1] - en[0]
    length = float(np.hypot(*d))
    conn = np.array([[0, 1]], dtype=np.int64)
    pn = np.array([conn[0, singular_end] if singular_end is not None else -1],
                  dtype=np.int64)
    He, Ge = _core.boundary_influence(
        np.asarray(point, dtype=float)[None, :], pn, en, conn,
        np.asarray(normal, dtype=float)[None, :], np.array([length]),
        mat.nu, mat.mu, ngauss=ngauss)
    return He.reshape(2, 4), Ge.reshape(2, 4)


def boundary_mass(reg: RegionBem) -> np.ndarray:
    """Matrix M (4m x 2n) with t_elem^T M v_nodal = integral of t . v over
    the boundary, both fields piecewise linear (t element-based)."""
    m, n = reg.n_elems, reg.n_nodes
    M = np.zeros((4 * m, 2 * n))
    for e in range(m):
        L6 = reg.lengths[e] / 6.0
        a, b = reg.conn[e]
        for j in range(2):
            M[4 * e + j, 2 * a + j] += 2.0 * L6
            M[4 * e + j, 2 * b + j] += L6
            M[4 * e + 2 + j, 2 * a + j] += L6
            M[4 * e + 2 + j, 2 * b + j] += 2.0 * L6
    return M


# ---------------------------------------------------------------------------
# Mixed system
# ---------------------------------------------------------------------------

@dataclass
class ContactNode:
    """Contact bookkeeping for one boundary node."""

    node: int                 # region-local node index
    normal: np.ndarray        # outward unit normal used for the gap test
    tangent: np.ndarray | None
    gap: float
    entries: list[tuple[int, int]] = field(default_factory=list)
    arc: float = 0.0


def _program_index(table: list[str], name: str) -> int:
    if name not in table:
        table.append(name)
    return table.index(name)


class MixedSystem:
    """Time-independent part of the single-region collocation system.

    Column-exchanged matrix ``A`` (unknown tractions from G, unknown
    displacements from -H) with contact normal displacement columns kept
    apart in ``Ac``.  Provides the per-step right-hand side and solution
    reconstruction maps; see :meth:`rhs` and :meth:`reconstruct`.
    """

    def __init__(self, reg: RegionBem, bc_groups: dict[str, BCGroup],
                 group_names: list[str], programs: dict[str, LoadProgram] | None = None,
                 interface_groups: set[str] = frozenset(),
                 require_dirichlet: bool = True, factor: bool = True):
        self.reg = reg
        self.programs = dict(programs or {})
        self.programs.setdefault("", LoadProgram.constant(1.0))
        self.group_names = list(group_names)
        self.interface_groups = set(interface_groups)
        n, m = reg.n_nodes, reg.n_elems

        def group_of(e: int) -> BCGroup:
            name = group_names[reg.group[e]]
            if name in interface_groups:
                return BCGroup(name=name, kind=(INTERFACE, INTERFACE))
            try:
                return bc_groups[name]
            except KeyError:
                raise UnsupportedConfigurationError(
                    f"element group '{name}' has no boundary condition") from None

        def kind_of(e: int, d: int) -> str:
            g = group_of(e)
            return CONTACT if g.contact else g.kind[d]

        incident = reg.incident()

        # --- nodal v classification -------------------------------------
        prog_table: list[str] = [""]
        self.v_dirichlet = np.zeros(2 * n, dtype=bool)
        self.w_base = np.zeros(2 * n)
        self.w_prog = np.zeros(2 * n, dtype=np.int64)
        v_contact = np.zeros(n, dtype=bool)
        for nd in range(n):
            for d in range(2):
                owners = sorted((m_, loc) for m_, loc in incident[nd]
                                if kind_of(m_, d) == DIRICHLET)
                if owners:
                    g = group_of(owners[0][0])
                    self.v_dirichlet[2 * nd + d] = True
                    self.w_base[2 * nd + d] = g.value[d]
                    self.w_prog[2 * nd + d] = _program_index(prog_table, g.program[d])
            if any(group_of(m_).contact for m_, _ in incident[nd]):
                v_contact[nd] = True

        # --- contact nodes ------------------------------------------------
        self.contact: list[ContactNode] = []
        contact_of_node: dict[int, int] = {}
        for nd in np.nonzero(v_contact)[0]:
            dir_mask = [self.v_dirichlet[2 * nd + d] for d in range(2)]
            if all(dir_mask):
                continue  # fully constrained corner: contact dropped
            entries = [(m_, loc) for m_, loc in incident[nd] if group_of(m_).contact]
            n_avg = np.mean([reg.normals[m_] for m_, _ in entries], axis=0)
            if any(dir_mask):
                free_axis = dir_mask.index(False)
                nrm = np.zeros(2)
                nrm[free_axis] = np.sign(n_avg[free_axis]) or 1.0
                tangent = None
            else:
                nrm = n_avg / np.hypot(*n_avg)
                tangent = np.array([-nrm[1], nrm[0]])
            g = group_of(entries[0][0])
            gap = _initial_gap(reg.nodes[nd], nrm, g)
            contact_of_node[int(nd)] = len(self.contact)
            self.contact.append(ContactNode(node=int(nd), normal=nrm,
                                            tangent=tangent, gap=gap,
                                            entries=entries))
        self._contact_arcs()

        # --- traction classification ---------------------------------------
        # unknown nodal tractions per (node, direction), fed by incident
        # Dirichlet- or interface-kind elements
        t_unknowns: list[tuple[int, int, list[tuple[int, int]]]] = []
        for nd in range(n):
            for d in range(2):
                feed = [(m_, loc) for m_, loc in incident[nd]
                        if kind_of(m_, d) in (DIRICHLET, INTERFACE)]
                if feed:
                    t_unknowns.append((nd, d, feed))
        self.t_unknowns = t_unknowns

        self.te_known = np.zeros(4 * m, dtype=bool)
        self.g_base = np.zeros(4 * m)
        self.g_prog = np.zeros(4 * m, dtype=np.int64)
        for e in range(m):
            g = group_of(e)
            if g.contact:
                continue
            for loc in range(2):
                for d in range(2):
                    if g.kind[d] == NEUMANN:
                        ent = 4 * e + 2 * loc + d
                        self.te_known[ent] = True
                        self.g_base[ent] = g.value[d]
                        self.g_prog[ent] = _program_index(prog_table, g.program[d])
        self.prog_table = prog_table

        # --- columns ---------------------------------------------------------
        H, Ge = reg.H, reg.Ge
        cols: list[np.ndarray] = []
        self.Rv = []   # (row, col, coeff) triplets into nodal v
        self.Rt = []   # triplets into element tractions
        self.v_col: dict[int, int] = {}        # nodal v dof -> column
        self.t_col: dict[tuple[int, int], int] = {}  # (node, dir) -> column
        Rvc: list[tuple[int, int, float]] = []

        for nd in range(n):
            for d in range(2):
                if self.v_dirichlet[2 * nd + d] or v_contact[nd]:
                    continue
                self.Rv.append((2 * nd + d, len(cols), 1.0))
                self.v_col[2 * nd + d] = len(cols)
                cols.append(-H[:, 2 * nd + d])
        for ci, cn in enumerate(self.contact):
            nd = cn.node
            if cn.tangent is not None:
                self.Rv.append((2 * nd, len(cols), cn.tangent[0]))
                self.Rv.append((2 * nd + 1, len(cols), cn.tangent[1]))
                cols.append(-(H[:, 2 * nd] * cn.tangent[0]
                              + H[:, 2 * nd + 1] * cn.tangent[1]))
            Rvc.append((2 * nd, ci, cn.normal[0]))
            Rvc.append((2 * nd + 1, ci, cn.normal[1]))
        for nd, d, feed in t_unknowns:
            col = np.zeros(2 * n)
            for m_, loc in feed:
                ent = 4 * m_ + 2 * loc + d
                col += Ge[:, ent]
                self.Rt.append((ent, len(cols), 1.0))
            self.t_col[(nd, d)] = len(cols)
            cols.append(col)
        self.n_free = len(cols)
        for cn in self.contact:
            col = np.zeros(2 * n)
            for m_, loc in cn.entries:
                for d in range(2):
                    ent = 4 * m_ + 2 * loc + d
                    col += Ge[:, ent] * cn.normal[d]
                    self.Rt.append((ent, len(cols), cn.normal[d]))
            cols.append(col)

        if require_dirichlet and not self.v_dirichlet.any():
            raise UnsupportedConfigurationError(
                "pure-Neumann problem: at least one Dirichlet dof is required")

        # [free | contact traction] columns form a square matrix; the contact
        # normal displacement columns (Ac) are extra, closed by complementarity.
        # Regions that take part in coupling stay rectangular here: their
        # interface unknowns are eliminated by the coupled assembly.
        self.A = np.column_stack(cols) if cols else np.zeros((2 * n, 0))
        if not interface_groups and self.A.shape[0] != self.A.shape[1]:
            raise UnsupportedConfigurationError(
                f"mixed system is not square: {self.A.shape[0]} equations, "
                f"{self.A.shape[1]} unknowns ({len(self.contact)} contact pairs)")
        self.Ac = np.zeros((2 * n, len(self.contact)))
        self._Rvc_triplets = Rvc
        for row, ci, coeff in Rvc:
            self.Ac[:, ci] -= H[:, row] * coeff
        square = self.A.shape[0] == self.A.shape[1] and self.A.size > 0
        self.lu = lu_factor(self.A) if (factor and square) else None

        # dense reconstruction maps
        self._Rv = np.zeros((2 * n, self.A.shape[1]))
        for row, col, coeff in self.Rv:
            self._Rv[row, col] = coeff
        self._Rt = np.zeros((4 * m, self.A.shape[1]))
        for row, col, coeff in self.Rt:
            self._Rt[row, col] = coeff
        self._Rvc = np.zeros((2 * n, len(self.contact)))
        for row, ci, coeff in Rvc:
            self._Rvc[row, ci] = coeff

    # -- per-step interface -------------------------------------------------

    def _contact_arcs(self) -> None:
        """Arclength coordinate of each contact node along the contact chain."""
        if not self.contact:
            return
        by_node = {cn.node: cn for cn in self.contact}
        # walk elements of the contact entries in element order
        arc = {}
        elems = sorted({m_ for cn in self.contact for m_, _ in cn.entries})
        s = 0.0
        if elems:
            first = elems[0]
            arc[int(self.reg.conn[first, 0])] = 0.0
            for m_ in elems:
                a, b = self.reg.conn[m_]
                sa = arc.get(int(a), s)
                arc[int(a)] = sa
                arc[int(b)] = sa + self.reg.lengths[m_]
                s = arc[int(b)]
        for nd, cn in by_node.items():
            cn.arc = float(arc.get(nd, 0.0))

    def sample_data(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Raw boundary data (w, g) at time t from the load programs."""
        pv = np.array([self.programs[name].value(t) for name in self.prog_table])
        w = self.w_base * pv[self.w_prog]
        g = self.g_base * pv[self.g_prog]
        return w, g

    def rhs(self, w_eff: np.ndarray, g_eff: np.ndarray) -> np.ndarray:
        """Right-hand side for transformed step data (knowns moved over)."""
        b = self.reg.H @ np.where(self.v_dirichlet, w_eff, 0.0)
        b -= self.reg.Ge @ np.where(self.te_known, g_eff, 0.0)
        return b

    def solve(self, b: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, b)

    def reconstruct(self, x: np.ndarray, w_eff: np.ndarray, g_eff: np.ndarray,
                    v_c: np.ndarray | None = None):
        """Assemble full nodal v (2n) and element tractions te (4m)."""
        v = self._Rv @ x + np.where(self.v_dirichlet, w_eff, 0.0)
        if len(self.contact):
            v += self._Rvc @ (v_c if v_c is not None else np.zeros(len(self.contact)))
        te = self._Rt @ x + np.where(self.te_known, g_eff, 0.0)
        return v, te


def _initial_gap(node_xy: np.ndarray, normal: np.ndarray, group: BCGroup) -> float:
    m = np.asarray(group.obstacle_normal, dtype=float)
    m = m / np.hypot(*m)
    p = np.asarray(group.obstacle_point, dtype=float)
    denom = -(normal @ m)
    if denom <= 1e-12:
        raise UnsupportedConfigurationError(
            f"contact normal at node {node_xy} does not point toward the obstacle")
    gap = float((node_xy - p) @ m) / denom
    if gap < -1e-12 * max(1.0, np.hypot(*node_xy)):
        raise UnsupportedConfigurationError(
            f"negative initial gap {gap:g} at node {node_xy}")
    return max(gap, 0.0)
