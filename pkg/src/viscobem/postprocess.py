"""Interior field recovery, dissipation accumulation and energy ledger.

Everything here works on the recorded boundary history of a finished run.
Interior values come from the representation integrals of the auxiliary
field followed by the same physical-recovery recursions as on the
boundary.  All energies are evaluated on the boundary: for equilibrium
fields the volume elastic product reduces to a contour integral
(Clapeyron), which keeps the method free of volume meshes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _core
from .assembly import boundary_mass, scatter_to_nodes
from .stepping import (RegionSeries, TimeLoopResult, _distance_to_boundary,
                       _point_in_region, recover_displacement, recover_traction)

__all__ = [
    "OutOfDomainError",
    "UnsupportedRheologyError",
    "interior_fields",
    "dissipated_energy",
    "EnergyRecord",
    "energy_balance",
    "elastic_traction_split",
]

NEAR_BOUNDARY_FACTOR = 0.1


class OutOfDomainError(ValueError):
    """Interior evaluation requested outside every region."""


class UnsupportedRheologyError(ValueError):
    """Operation defined only for the Kelvin-Voigt family."""


def _locate(result: TimeLoopResult, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Region index and near-boundary flag per point."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    region = np.full(len(points), -1, dtype=np.int64)
    near = np.zeros(len(points), dtype=bool)
    for i, p in enumerate(points):
        for ri, s in enumerate(result.regions):
            if _point_in_region(p, s.reg):
                region[i] = ri
                near[i] = (_distance_to_boundary(p, s.reg)
                           < NEAR_BOUNDARY_FACTOR * s.reg.lengths.min())
                break
        else:
            raise OutOfDomainError(f"point {p} lies outside every region")
    return points, region, near


def _interior_series(s: RegionSeries, pts: np.ndarray):
    """Per-step physical (u, sigma) histories at interior points of one region."""
    reg = s.reg
    pn = np.full(len(pts), -1, dtype=np.int64)
    He, Ge = _core.boundary_influence(pts, pn, reg.nodes, reg.conn, reg.normals,
                                      reg.lengths, reg.mat.nu, reg.mat.mu,
                                      ngauss=reg.ngauss)
    De, Se = _core.stress_influence(pts, reg.nodes, reg.conn, reg.normals,
                                    reg.lengths, reg.mat.nu, reg.mat.mu,
                                    ngauss=reg.ngauss)
    K = len(s.v)
    u_hist = np.zeros((K, 2 * len(pts)))
    s_hist = np.zeros((K, 3 * len(pts)))
    u1 = np.zeros(2 * len(pts))
    u2 = np.zeros(2 * len(pts))
    s1 = np.zeros(3 * len(pts))
    s2 = np.zeros(3 * len(pts))
    for k in range(K):
        ve = reg.spread_nodal(s.v[k])
        v_int = Ge @ s.t_aux[k] - He @ ve
        sig_aux = De @ s.t_aux[k] - Se @ ve
        u = recover_displacement(v_int, u1, u2, s.coeffs)
        sg = recover_traction(sig_aux, s1, s2, s.coeffs)
        u_hist[k], s_hist[k] = u, sg
        u2, u1 = u1, u
        s2, s1 = s1, sg
    return u_hist, s_hist


def interior_fields(result: TimeLoopResult, points, step: int | None = None):
    """Physical displacement and stress at interior points.

    Returns a dict with ``u`` (P, 2), ``sigma`` (P, 3, components xx, yy,
    xy) at the requested step (1-based; default the final step) and a
    ``near_boundary`` flag per point marking evaluations closer to the
    boundary than a tenth of the shortest nearby element, where the
    representation integrals lose accuracy.
    """
    points, region, near = _locate(result, points)
    K = result.n_steps()
    k = K if step is None else int(step)
    if not (1 <= k <= K):
        raise ValueError(f"step {k} outside the computed range 1..{K}")
    u = np.zeros((len(points), 2))
    sig = np.zeros((len(points), 3))
    for ri in np.unique(region):
        sel = np.nonzero(region == ri)[0]
        u_hist, s_hist = _interior_series(result.regions[ri], points[sel])
        u[sel] = u_hist[k - 1].reshape(-1, 2)
        sig[sel] = s_hist[k - 1].reshape(-1, 3)
    return {"u": u, "sigma": sig, "near_boundary": near}


def _strain_from_stress(sig: np.ndarray, mat) -> np.ndarray:
    """Plane-strain inverse of sigma = lam tr(eps) I + 2 mu eps, rows (xx,yy,xy)."""
    lam, mu = mat.lam, mat.mu
    tr_eps = (sig[..., 0] + sig[..., 1]) / (2.0 * (lam + mu))
    eps = np.empty_like(sig)
    eps[..., 0] = (sig[..., 0] - lam * tr_eps) / (2.0 * mu)
    eps[..., 1] = (sig[..., 1] - lam * tr_eps) / (2.0 * mu)
    eps[..., 2] = sig[..., 2] / (2.0 * mu)
    return eps


def _elastic_energy_density(eps: np.ndarray, mat) -> np.ndarray:
    lam, mu = mat.lam, mat.mu
    tr = eps[..., 0] + eps[..., 1]
    return (lam * tr * tr
            + 2.0 * mu * (eps[..., 0] ** 2 + eps[..., 1] ** 2 + 2.0 * eps[..., 2] ** 2))


def dissipated_energy(result: TimeLoopResult, points, upto_step: int | None = None):
    """Accumulated viscous dissipation density at interior points.

    Kelvin-Voigt family only: the density is the time integral of
    chi C e(du/dt) : e(du/dt), accumulated with the left-endpoint rule
    consistent with the implicit difference quotient, i.e. per step
    (chi/tau) C delta_eps : delta_eps.  Returns (P,) values.
    """
    points, region, _ = _locate(result, points)
    K = result.n_steps()
    k_end = K if upto_step is None else int(upto_step)
    density = np.zeros(len(points))
    for ri in np.unique(region):
        s = result.regions[ri]
        if not s.rheo.is_kelvin_voigt_family():
            raise UnsupportedRheologyError(
                "dissipation density is defined for the Kelvin-Voigt family only")
        chi = s.rheo.kv_relax_time()
        if chi == 0.0:
            continue
        sel = np.nonzero(region == ri)[0]
        _, s_hist = _interior_series(s, points[sel])
        sig = s_hist.reshape(K, -1, 3)
        tau = s.coeffs.tau
        # for this family the physical stress equals C eps(v), and the
        # physical strain follows the displacement recursion applied to
        # strains: eps_u <- (tau eps_v + chi eps_u) / (tau + chi)
        eps_v = _strain_from_stress(sig, s.reg.mat)
        eps_u = np.zeros((len(sel), 3))
        acc = np.zeros(len(sel))
        for k in range(k_end):
            eps_new = (tau * eps_v[k] + chi * eps_u) / (tau + chi)
            acc += (chi / tau) * _elastic_energy_density(eps_new - eps_u, s.reg.mat)
            eps_u = eps_new
        density[sel] = acc
    return density


@dataclass
class EnergyRecord:
    step: int
    time: float
    stored: float
    dissipated: float
    work: float
    slack: float
    work_quasistatic: float


def elastic_traction_split(result: TimeLoopResult, region: int = 0):
    """Split total tractions into elastic and viscous parts (KV family).

    The elastic traction obeys t_el^k = (tau t_aux^k + chi t_el^{k-1}) /
    (tau + chi), the traction-operator image of the displacement
    recursion; the viscous part is the remainder of the total traction.
    Returns (elastic, viscous), each (K, 4m) element-based.
    """
    s = result.regions[region]
    if not s.rheo.is_kelvin_voigt_family():
        raise UnsupportedRheologyError(
            "the elastic/viscous split is defined for the Kelvin-Voigt family only")
    chi = s.rheo.kv_relax_time()
    tau = s.coeffs.tau
    K = len(s.t_aux)
    elastic = np.zeros_like(s.t_aux)
    prev = np.zeros(s.t_aux.shape[1])
    for k in range(K):
        prev = (tau * s.t_aux[k] + chi * prev) / (tau + chi)
        elastic[k] = prev
    return elastic, s.p - elastic


def energy_balance(result: TimeLoopResult) -> list[EnergyRecord]:
    """Discrete energy ledger of a Kelvin-Voigt family run.

    Per step: stored elastic energy (boundary Clapeyron form on the
    elastic part), cumulative viscous dissipation, cumulative external
    boundary work, and the slack of the one-sided stability inequality

        stored + dissipated <= E(u0) + work,

    here with work paired right-endpoint (current tractions times the
    displacement increment), the pairing under which the inequality is
    exact for the implicit scheme.  ``work_quasistatic`` carries the
    trapezoidal pairing, which instead conserves energy exactly in the
    elastic limit; the CSV emits the right-endpoint column.
    """
    for s in result.regions:
        if not s.rheo.is_kelvin_voigt_family():
            raise UnsupportedRheologyError(
                "the energy ledger is defined for the Kelvin-Voigt family only")
    K = result.n_steps()
    masses = [boundary_mass(s.reg) for s in result.regions]
    splits = [elastic_traction_split(result, ri) for ri in range(len(result.regions))]

    e0 = 0.0
    p0 = []
    for ri, s in enumerate(result.regions):
        if np.any(s.u0):
            t0 = _tractions_of_field(s, s.u0)
            e0 += 0.5 * float(t0 @ masses[ri] @ s.u0)
            p0.append(t0)
        else:
            p0.append(np.zeros(4 * s.reg.n_elems))

    records = []
    diss = 0.0
    work = 0.0
    work_tr = 0.0
    for k in range(K):
        stored = 0.0
        for ri, s in enumerate(result.regions):
            M = masses[ri]
            chi = s.rheo.kv_relax_time()
            tau = s.coeffs.tau
            el = splits[ri][0]
            u_now = s.u[k]
            u_old = s.u[k - 1] if k else s.u0
            el_now = el[k]
            el_old = el[k - 1] if k else p0[ri]
            p_now = s.p[k]
            p_old = s.p[k - 1] if k else p0[ri]
            du = u_now - u_old
            stored += 0.5 * float(el_now @ M @ u_now)
            if chi > 0.0:
                diss += (chi / tau) * float((el_now - el_old) @ M @ du)
            work += float(p_now @ M @ du)
            work_tr += 0.5 * float((p_now + p_old) @ M @ du)
        slack = e0 + work - stored - diss
        records.append(EnergyRecord(step=k + 1, time=float(result.times[k]),
                                    stored=stored, dissipated=diss, work=work,
                                    slack=slack, work_quasistatic=work_tr))
    return records


def _tractions_of_field(s: RegionSeries, u: np.ndarray) -> np.ndarray:
    """Boundary tractions of an equilibrium field given its boundary trace.

    All-Dirichlet solve G t = H u with nodal tractions; used only for the
    stored energy of a nonzero initial state.
    """
    reg = s.reg
    Gn = scatter_to_nodes(reg.Ge, reg.conn, reg.n_nodes)
    t_nodal = np.linalg.solve(Gn, reg.H @ u)
    return reg.spread_nodal(t_nodal)


def snapshot_fields(result: TimeLoopResult, points, step: int | None = None):
    """Combined (u, sigma, dissipation) table for field snapshots."""
    fields = interior_fields(result, points, step=step)
    kv = all(s.rheo.is_kelvin_voigt_family() for s in result.regions)
    diss = (dissipated_energy(result, points, upto_step=step) if kv
            else np.zeros(len(fields["u"])))
    return {**fields, "dissipated": diss}
