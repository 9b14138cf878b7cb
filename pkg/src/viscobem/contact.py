"""Frictionless unilateral contact against a rigid obstacle.

Per time step the transformed problem is a bound-constrained strictly
convex quadratic program in the contact-normal displacements of the
auxiliary field: the no-penetration condition u.n <= gap becomes, through
the history transform, v.n <= b with a history-shifted bound.  The
quadratic energy is obtained by condensing the mixed collocation system
onto the contact normal dofs (Schur complement through the factored
system matrix); the collocation-condensed operator is not exactly
symmetric, so the QP uses its symmetric part and the relative asymmetry
is logged and checked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_solve

from .assembly import MixedSystem, UnsupportedConfigurationError, boundary_mass

__all__ = [
    "contact_bounds",
    "transformed_bounds",
    "ContactQP",
    "CondensedContact",
    "solve_qp",
    "kkt_check",
    "QPNonConvergenceError",
]

log = logging.getLogger(__name__)


class QPNonConvergenceError(RuntimeError):
    """Active-set iteration cap exceeded; carries the last iterate."""

    def __init__(self, msg, x, active):
        super().__init__(msg)
        self.x = x
        self.active = active


def contact_bounds(chi: float, tau: float, u_prev_n, gap) -> np.ndarray:
    """Transformed upper bounds on v.n for a Kelvin-Voigt material.

    The physical condition u.n <= gap at the end of the step maps to
    ``v.n <= ((tau+chi)/tau) gap - (chi/tau) u_prev.n``.
    """
    u_prev_n = np.asarray(u_prev_n, dtype=float)
    gap = np.broadcast_to(np.asarray(gap, dtype=float), u_prev_n.shape)
    return (tau + chi) / tau * gap - (chi / tau) * u_prev_n


def transformed_bounds(coeffs, gap, u_prev_n, u_prev2_n) -> np.ndarray:
    """General-rheology form of :func:`contact_bounds` via step weights."""
    u_prev_n = np.asarray(u_prev_n, dtype=float)
    gap = np.broadcast_to(np.asarray(gap, dtype=float), u_prev_n.shape)
    return coeffs.a0 * gap - coeffs.a1 * u_prev_n + coeffs.a2 * np.asarray(u_prev2_n)


@dataclass
class ContactQP:
    """One step's bound-constrained quadratic program."""

    K: np.ndarray
    c: np.ndarray
    b: np.ndarray
    asymmetry: float = 0.0
    scale: float = field(init=False, default=1.0)

    def __post_init__(self):
        self.scale = max(1.0, float(np.abs(self.K).max() * max(1.0, np.abs(self.b).max())),
                         float(np.abs(self.c).max()))

    def energy(self, v: np.ndarray) -> float:
        return float(0.5 * v @ self.K @ v + self.c @ v)


def solve_qp(K: np.ndarray, c: np.ndarray, b: np.ndarray,
             active: np.ndarray | None = None, max_iter: int | None = None):
    """Primal active-set solve of min 1/2 v'Kv + c'v subject to v <= b.

    K must be symmetric positive definite.  Ties among blocking or
    releasable constraints break toward the lowest index, which makes the
    iteration deterministic; ``active`` warm-starts the working set.
    Returns (v, lam, active, iterations) with lam = Kv + c (zero off the
    active set, <= 0 on it).
    """
    m = len(c)
    if m == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=bool), 0
    if max_iter is None:
        max_iter = max(10 * m, 30)
    # default start: everything at its bound (always feasible, and principal
    # submatrices of a floored K stay positive definite from there on)
    work = np.ones(m, dtype=bool) if active is None else active.copy()
    x = np.where(work, b, np.minimum(0.0, b))  # feasible start
    x = np.minimum(x, b)

    for it in range(1, max_iter + 1):
        free = ~work
        x_star = b.copy()
        if free.any():
            Kff = K[np.ix_(free, free)]
            rhs = -(c[free] + K[np.ix_(free, work)] @ b[work])
            x_star[free] = cho_solve(cho_factor(Kff), rhs)
        p = x_star - x
        if np.abs(p).max(initial=0.0) <= 1e-14 * max(1.0, np.abs(b).max(), np.abs(x).max()):
            grad = K @ x + c
            lam = np.where(work, grad, 0.0)
            worst = -1.0
            drop = -1
            for i in np.nonzero(work)[0]:
                if lam[i] > 1e-12 * max(1.0, abs(lam).max()) and lam[i] > worst:
                    worst = lam[i]
                    drop = int(i)
            if drop < 0:
                return x, lam, work, it
            work[drop] = False
            continue
        # ratio test toward the equality-constrained minimiser
        alpha = 1.0
        block = -1
        for i in np.nonzero(free)[0]:
            if p[i] > 0.0:
                ai = (b[i] - x[i]) / p[i]
                if ai < alpha - 1e-15:
                    alpha = max(ai, 0.0)
                    block = int(i)
        x = x + alpha * p
        if block >= 0:
            x[block] = b[block]
            work[block] = True
    raise QPNonConvergenceError(f"active-set QP did not converge in {max_iter} iterations",
                                x, work)


def kkt_check(qp: ContactQP, v: np.ndarray, lam: np.ndarray) -> dict:
    """Residuals of the Karush-Kuhn-Tucker system, all absolute values.

    ``primal``: max penetration max(v - b, 0); ``dual``: max positive
    multiplier; ``complementarity``: max |lam (v - b)|; ``stationarity``:
    ||Kv + c - lam||_inf.  All must stay below 1e-8 x problem scale.
    """
    if len(v) == 0:
        return {"primal": 0.0, "dual": 0.0, "complementarity": 0.0,
                "stationarity": 0.0, "scale": 1.0}
    r = v - qp.b
    return {
        "primal": float(np.maximum(r, 0.0).max()),
        "dual": float(np.maximum(lam, 0.0).max()),
        "complementarity": float(np.abs(lam * r).max()),
        "stationarity": float(np.abs(qp.K @ v + qp.c - lam).max()),
        "scale": qp.scale,
    }


class CondensedContact:
    """Contact condensation of a mixed system, built once per case.

    With the system matrix factored, every boundary quantity is an affine
    function of the contact normal displacements v_c.  The boundary
    stored-energy form 1/2 int t(v).v dS minus the load work then reduces
    to a quadratic in v_c whose (symmetrised) Hessian K is constant in
    time; only the linear term c and the bounds change per step.
    """

    ASYMMETRY_WARN = 1e-3
    EIG_FLOOR_REL = 1e-8
    INDEFINITE_LIMIT = 1e-2

    def __init__(self, ms: MixedSystem):
        if not ms.contact:
            raise UnsupportedConfigurationError("mixed system has no contact nodes")
        self.ms = ms
        self.mass = boundary_mass(ms.reg)
        self.gaps = np.array([cn.gap for cn in ms.contact])
        self.normals = np.array([cn.normal for cn in ms.contact])
        self.nodes = np.array([cn.node for cn in ms.contact])
        self.arcs = np.array([cn.arc for cn in ms.contact])

        # lumped boundary weight of each contact node (conjugate of the
        # multipliers: the weak nodal contact traction is lambda / weight)
        self.weights = np.array([sum(ms.reg.lengths[m] * 0.5 for m, _ in cn.entries)
                                 for cn in ms.contact])

        Xc = lu_solve(ms.lu, ms.Ac)                     # (2n, mc)
        self.Xc = Xc
        self.Vmap = ms._Rvc - ms._Rv @ Xc               # nodal v per unit v_c
        self.Tmap = -ms._Rt @ Xc                        # element t per unit v_c
        Kt = self.Tmap.T @ self.mass @ self.Vmap
        self.asymmetry = float(np.linalg.norm(Kt - Kt.T) / max(np.linalg.norm(Kt), 1e-300))
        K = 0.5 * (Kt + Kt.T)
        log.info("contact condensation: %d dofs, relative asymmetry %.3e",
                 len(self.gaps), self.asymmetry)
        if self.asymmetry > self.ASYMMETRY_WARN:
            log.warning("condensed contact operator asymmetry %.3e exceeds %.1e "
                        "(dominated by the contact-zone end corner; decays under "
                        "refinement)", self.asymmetry, self.ASYMMETRY_WARN)
        # A body held only by contact leaves K semidefinite (rigid mode along
        # the contact normals); symmetrisation noise can push that eigenvalue
        # slightly negative.  Floor the spectrum so every principal submatrix
        # met by the active-set iteration stays positive definite.
        lam, Q = np.linalg.eigh(K)
        lam_max = float(lam[-1])
        self.eig_min = float(lam[0])
        if lam[0] < -self.INDEFINITE_LIMIT * lam_max:
            raise UnsupportedConfigurationError(
                f"condensed contact operator is indefinite "
                f"(eigenvalues {lam[0]:.3e} .. {lam_max:.3e})")
        floor = self.EIG_FLOOR_REL * lam_max
        if lam[0] < floor:
            log.info("flooring %d contact eigenvalue(s) below %.3e (min %.3e)",
                     int((lam < floor).sum()), floor, lam[0])
            K = (Q * np.maximum(lam, floor)) @ Q.T
            K = 0.5 * (K + K.T)
        self.K = K
        cho_factor(self.K)  # must succeed now; raises LinAlgError otherwise
        self._active = np.ones(len(self.gaps), dtype=bool)

    def step_qp(self, w_eff: np.ndarray, g_eff: np.ndarray, bounds: np.ndarray) -> ContactQP:
        """Quadratic program of one step from transformed boundary data."""
        ms = self.ms
        x0 = ms.solve(ms.rhs(w_eff, g_eff))
        v0, t0 = ms.reconstruct(x0, w_eff, g_eff, np.zeros(len(self.gaps)))
        g_vec = np.where(ms.te_known, g_eff, 0.0)
        c = (0.5 * (self.Tmap.T @ (self.mass @ v0) + self.Vmap.T @ (self.mass.T @ t0))
             - self.Vmap.T @ (self.mass.T @ g_vec))
        qp = ContactQP(K=self.K, c=c, b=np.asarray(bounds, dtype=float),
                       asymmetry=self.asymmetry)
        qp._x0 = x0  # reused by solve_step
        return qp

    def solve_step(self, w_eff: np.ndarray, g_eff: np.ndarray, bounds: np.ndarray):
        """Solve one step: returns (v_nodal, te, v_c, lam, kkt residuals)."""
        qp = self.step_qp(w_eff, g_eff, bounds)
        v_c, lam, act, _ = solve_qp(qp.K, qp.c, qp.b, active=self._active)
        self._active = act
        x = qp._x0 - self.Xc @ v_c
        v, te = self.ms.reconstruct(x, w_eff, g_eff, v_c)
        return v, te, v_c, lam, kkt_check(qp, v_c, lam)

    def direct_energy(self, v: np.ndarray, te: np.ndarray, g_eff: np.ndarray) -> float:
        """Boundary evaluation of the step potential for a full solution.

        Independent of the condensed (K, c) path; used to cross-check the
        condensation.
        """
        g_vec = np.where(self.ms.te_known, g_eff, 0.0)
        return float(0.5 * te @ self.mass @ v - g_vec @ self.mass @ v)
