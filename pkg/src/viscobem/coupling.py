"""Conforming multi-region coupling.

At an interface the physical displacements must match while the solver
works with per-region auxiliary fields, so the compatibility condition
mixes the two regions' transform weights and displacement histories:

    (v1 + a1_1 u1_prev - a2_1 u1_pp) / a0_1
        = (v2 + a1_2 u2_prev - a2_2 u2_pp) / a0_2

together with traction equilibrium t1 = -t2 of the auxiliary tractions.
The secondary side's interface unknowns are eliminated by substitution,
coupling the regional collocation blocks into one square system that is
factored once; only the history term of the compatibility condition
changes per step.  Meshes must be conforming (node-matched pairs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .assembly import MixedSystem, RegionBem, UnsupportedConfigurationError

__all__ = ["InterfacePairing", "pair_interface_nodes", "CoupledSystem"]

PAIR_TOL = 1e-10  # relative to bounding-box scale


@dataclass
class InterfacePairing:
    """Node pairing of one interface: primary/secondary region-local ids."""

    primary_region: int
    secondary_region: int
    primary_nodes: np.ndarray
    secondary_nodes: np.ndarray


def pair_interface_nodes(regions: list[RegionBem], group_names: list[str],
                         primary_group: str, secondary_group: str) -> InterfacePairing:
    """Match nodes of two interface element groups geometrically."""
    gid_a = group_names.index(primary_group)
    gid_b = group_names.index(secondary_group)

    def side(gid):
        for ri, reg in enumerate(regions):
            sel = np.nonzero(reg.group == gid)[0]
            if len(sel):
                nds = np.unique(reg.conn[sel].ravel())
                return ri, nds
        raise UnsupportedConfigurationError(
            f"interface group '{group_names[gid]}' has no elements")

    ra, nodes_a = side(gid_a)
    rb, nodes_b = side(gid_b)
    if ra == rb:
        raise UnsupportedConfigurationError(
            f"interface groups '{primary_group}'/'{secondary_group}' lie in one region")
    if len(nodes_a) != len(nodes_b):
        raise UnsupportedConfigurationError(
            f"interface '{primary_group}'/'{secondary_group}' is not conforming: "
            f"{len(nodes_a)} vs {len(nodes_b)} nodes")
    xa = regions[ra].nodes[nodes_a]
    xb = regions[rb].nodes[nodes_b]
    scale = max(np.abs(xa).max(), np.abs(xb).max(), 1.0)
    paired_b = np.empty(len(nodes_a), dtype=np.int64)
    used = np.zeros(len(nodes_b), dtype=bool)
    for i, p in enumerate(xa):
        d = np.hypot(*(xb - p).T)
        j = int(np.argmin(d))
        if d[j] > PAIR_TOL * scale or used[j]:
            raise UnsupportedConfigurationError(
                f"unpaired interface node at {p} (nearest mismatch {d[j]:g})")
        used[j] = True
        paired_b[i] = nodes_b[j]
    return InterfacePairing(primary_region=ra, secondary_region=rb,
                            primary_nodes=nodes_a, secondary_nodes=paired_b)


class CoupledSystem:
    """Square block system of several regions joined by interfaces.

    ``mixed`` are per-region :class:`MixedSystem` objects built with the
    interface groups marked (interface displacements and tractions both
    unknown).  For every pairing the secondary side's interface columns
    are re-expressed through the primary side's unknowns, so the global
    unknown vector is the concatenation of regional unknowns minus the
    secondary interface dofs.
    """

    def __init__(self, regions: list[RegionBem], mixed: list[MixedSystem],
                 pairings: list[InterfacePairing], coeffs: list):
        if any(ms.contact for ms in mixed):
            raise UnsupportedConfigurationError(
                "contact combined with multi-region coupling is not supported")
        if not any(ms.v_dirichlet.any() for ms in mixed):
            raise UnsupportedConfigurationError(
                "pure-Neumann problem: at least one Dirichlet dof is required")
        self.regions = regions
        self.mixed = mixed
        self.pairings = pairings
        self.coeffs = list(coeffs)
        R = len(regions)

        # secondary interface columns to eliminate, per region
        drop: list[set[int]] = [set() for _ in range(R)]
        self._subs = []  # (rb, dofB, ra, dofA, s) for v and (rb,(nd,d),ra,(nd,d)) for t
        for pr in pairings:
            ra, rb = pr.primary_region, pr.secondary_region
            s = self.coeffs[rb].a0 / self.coeffs[ra].a0
            msb, msa = mixed[rb], mixed[ra]
            for na, nb in zip(pr.primary_nodes, pr.secondary_nodes):
                for d in range(2):
                    dofb = 2 * int(nb) + d
                    dofa = 2 * int(na) + d
                    if dofb in msb.v_col:
                        drop[rb].add(msb.v_col[dofb])
                    elif not msb.v_dirichlet[dofb]:
                        raise UnsupportedConfigurationError(
                            "secondary interface node carries a contact dof")
                    tb = msb.t_col.get((int(nb), d))
                    if tb is None:
                        raise UnsupportedConfigurationError(
                            f"secondary interface node {nb} has no traction unknown")
                    drop[rb].add(tb)
                    if (int(na), d) not in msa.t_col:
                        raise UnsupportedConfigurationError(
                            f"primary interface node {na} has no traction unknown")
                    self._subs.append((rb, dofb, ra, dofa, int(nb), int(na), d, s))

        # global column layout: kept columns per region
        self.keep = []
        self.col_of = []   # per region: local column -> global column (or -1)
        offset = 0
        for r in range(R):
            ncols = mixed[r].A.shape[1]
            keep = np.array([c for c in range(ncols) if c not in drop[r]], dtype=np.int64)
            cmap = np.full(ncols, -1, dtype=np.int64)
            cmap[keep] = offset + np.arange(len(keep))
            self.keep.append(keep)
            self.col_of.append(cmap)
            offset += len(keep)
        self.n_unknowns = offset
        rows = sum(2 * reg.n_nodes for reg in regions)
        if rows != offset:
            raise UnsupportedConfigurationError(
                f"coupled system is not square: {rows} equations, {offset} unknowns")
        self.row_off = np.cumsum([0] + [2 * reg.n_nodes for reg in regions])

        A = np.zeros((rows, offset))
        for r in range(R):
            r0 = self.row_off[r]
            A[r0:r0 + 2 * regions[r].n_nodes, self.col_of[r][self.keep[r]]] = \
                mixed[r].A[:, self.keep[r]]
        # substitution couplings: secondary rows gain primary columns
        for (rb, dofb, ra, dofa, nb, na, d, s) in self._subs:
            msb, msa = mixed[rb], mixed[ra]
            rb0 = self.row_off[rb]
            rows_b = slice(rb0, rb0 + 2 * regions[rb].n_nodes)
            # v substitution: v_b = s * v_a + h  (h handled in rhs)
            if dofb in msb.v_col:
                colv_b = -regions[rb].H[:, dofb]   # original local column
                if msa.v_dirichlet[dofa]:
                    pass  # known primary value, handled in rhs
                else:
                    ga = self.col_of[ra][msa.v_col[dofa]]
                    A[rows_b, ga] += s * colv_b
            # t substitution: t_b = -t_a
            colt_b = np.zeros(2 * regions[rb].n_nodes)
            for m_, loc in self._t_feed(msb, nb, d):
                colt_b += regions[rb].Ge[:, 4 * m_ + 2 * loc + d]
            ga = self.col_of[ra][msa.t_col[(na, d)]]
            A[rows_b, ga] -= colt_b
        self.A = A
        self.lu = lu_factor(A)

    @staticmethod
    def _t_feed(ms: MixedSystem, node: int, d: int):
        for nd, dd, feed in ms.t_unknowns:
            if nd == node and dd == d:
                return feed
        return []

    def interface_history(self, u_prev: list[np.ndarray], u_prev2: list[np.ndarray]):
        """Per-substitution history offsets h of the compatibility condition."""
        h = {}
        for (rb, dofb, ra, dofa, nb, na, d, s) in self._subs:
            ca, cb = self.coeffs[ra], self.coeffs[rb]
            h[(rb, dofb)] = (s * (ca.a1 * u_prev[ra][dofa] - ca.a2 * u_prev2[ra][dofa])
                             - cb.a1 * u_prev[rb][dofb] + cb.a2 * u_prev2[rb][dofb])
        return h

    def rhs(self, w_eff: list[np.ndarray], g_eff: list[np.ndarray], hist: dict):
        b = np.zeros(self.n_unknowns)
        for r, ms in enumerate(self.mixed):
            r0 = self.row_off[r]
            b[r0:r0 + 2 * self.regions[r].n_nodes] = ms.rhs(w_eff[r], g_eff[r])
        for (rb, dofb, ra, dofa, nb, na, d, s) in self._subs:
            msa = self.mixed[ra]
            known = hist.get((rb, dofb), 0.0)
            if msa.v_dirichlet[dofa]:
                known = known + s * w_eff[ra][dofa]
            if known != 0.0:
                rb0 = self.row_off[rb]
                b[rb0:rb0 + 2 * self.regions[rb].n_nodes] += \
                    self.regions[rb].H[:, dofb] * known
        return b

    def solve(self, b: np.ndarray) -> np.ndarray:
        return lu_solve(self.lu, b)

    def reconstruct(self, x: np.ndarray, w_eff: list[np.ndarray],
                    g_eff: list[np.ndarray], hist: dict):
        """Per-region nodal v and element tractions from the global solution."""
        out = []
        xloc = []
        for r, ms in enumerate(self.mixed):
            xl = np.zeros(ms.A.shape[1])
            xl[self.keep[r]] = x[self.col_of[r][self.keep[r]]]
            xloc.append(xl)
        # fill substituted secondary unknowns from the primary solution
        for (rb, dofb, ra, dofa, nb, na, d, s) in self._subs:
            msa, msb = self.mixed[ra], self.mixed[rb]
            if msa.v_dirichlet[dofa]:
                va = w_eff[ra][dofa]
            else:
                va = x[self.col_of[ra][msa.v_col[dofa]]]
            if dofb in msb.v_col:
                xloc[rb][msb.v_col[dofb]] = s * va + hist.get((rb, dofb), 0.0)
            ta = x[self.col_of[ra][msa.t_col[(na, d)]]]
            xloc[rb][msb.t_col[(nb, d)]] = -ta
        for r, ms in enumerate(self.mixed):
            out.append(ms.reconstruct(xloc[r], w_eff[r], g_eff[r]))
        return out
