"""Implicit time stepping via the auxiliary elastostatic transform.

Each implicit-Euler step of the visco-elastic evolution is rewritten in
an auxiliary displacement variable

    v_k = a0 u_k - a1 u_{k-1} + a2 u_{k-2},

whose field equation is plain elastostatics, so one constant (factored
once) boundary-element system serves every step.  Boundary data transform
the same way; after the solve the physical fields come back through

    u_k = (v_k + a1 u_{k-1} - a2 u_{k-2}) / a0
    p_k = t(e(v_k)) + b1 p_{k-1} - b2 p_{k-2},

with the same recursion as p_k for interior stresses.  The five weights
derive from the rheology's coefficient triples and the step size; they
are constant because the step is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _core
from .assembly import (MixedSystem, RegionBem, UnsupportedConfigurationError,
                       assemble_region)
from .contact import CondensedContact, transformed_bounds
from .coupling import CoupledSystem, pair_interface_nodes
from .model import BCGroup, InvalidModelError, LoadProgram, Material, Mesh, Rheology

__all__ = [
    "StepCoeffs",
    "step_coefficients",
    "kv_step_coefficients",
    "transform_dirichlet",
    "transform_neumann",
    "recover_displacement",
    "recover_traction",
    "DegenerateRheologyError",
    "Probe",
    "RegionSeries",
    "TimeLoopResult",
    "run_time_loop",
]


class DegenerateRheologyError(ValueError):
    """Step-coefficient denominator vanished or the transform is singular."""


@dataclass(frozen=True)
class StepCoeffs:
    """Per-step scalar weights of the transform and recovery recursions.

    a0, a1, a2 weight the displacement history in the forward transform;
    b1, b2 weight the stress/traction history in the recovery recursion.
    """

    a0: float
    a1: float
    a2: float
    b1: float
    b2: float
    tau: float


def step_coefficients(rheo: Rheology, tau: float) -> StepCoeffs:
    """General second-order-rheology step weights for a fixed step tau."""
    if tau <= 0.0:
        raise DegenerateRheologyError(f"time step must be positive, got {tau}")
    u0, u1, u2 = rheo.disp
    s0, s1, s2 = rheo.stress
    den = s2 + tau * s1 + s0 * tau * tau
    if den == 0.0:
        raise DegenerateRheologyError("stress-side coefficients give a zero denominator")
    a0 = (u2 + tau * u1 + u0 * tau * tau) / den
    if a0 == 0.0:
        raise DegenerateRheologyError("transform is not invertible (a0 = 0)")
    return StepCoeffs(a0=a0,
                      a1=(2.0 * u2 + tau * u1) / den,
                      a2=u2 / den,
                      b1=(2.0 * s2 + tau * s1) / den,
                      b2=s2 / den,
                      tau=tau)


def kv_step_coefficients(chi: float, tau: float) -> StepCoeffs:
    """Dedicated Kelvin-Voigt weights, a0 = (chi+tau)/tau, a1 = chi/tau."""
    if tau <= 0.0:
        raise DegenerateRheologyError(f"time step must be positive, got {tau}")
    if chi < 0.0:
        raise DegenerateRheologyError("relaxation time must be non-negative")
    return StepCoeffs(a0=(chi + tau) / tau, a1=chi / tau, a2=0.0,
                      b1=0.0, b2=0.0, tau=tau)


def transform_dirichlet(w, w_prev, w_prev2, c: StepCoeffs):
    """Dirichlet data of the auxiliary problem from three data samples."""
    return c.a0 * np.asarray(w) - c.a1 * np.asarray(w_prev) + c.a2 * np.asarray(w_prev2)


def transform_neumann(g, g_prev, g_prev2, c: StepCoeffs):
    """Neumann data of the auxiliary problem from three data samples."""
    return np.asarray(g) - c.b1 * np.asarray(g_prev) + c.b2 * np.asarray(g_prev2)


def recover_displacement(v, u_prev, u_prev2, c: StepCoeffs):
    """Invert the transform for the physical displacement of this step."""
    return (np.asarray(v) + c.a1 * np.asarray(u_prev)
            - c.a2 * np.asarray(u_prev2)) / c.a0


def recover_traction(t_aux, p_prev, p_prev2, c: StepCoeffs):
    """Physical (total) traction recursion; also valid for stresses."""
    return np.asarray(t_aux) + c.b1 * np.asarray(p_prev) - c.b2 * np.asarray(p_prev2)


# ---------------------------------------------------------------------------
# Case orchestration
# ---------------------------------------------------------------------------

@dataclass
class Probe:
    """Named output location; boundary probes snap to the nearest node."""

    name: str
    kind: str               # 'boundary' | 'interior'
    point: tuple[float, float]
    region: int = 0
    node: int = -1          # region-local node (boundary probes, resolved)
    near_boundary: bool = False


@dataclass
class RegionSeries:
    """Per-region solution history of a finished run (step rows 1..K)."""

    reg: RegionBem
    rheo: Rheology
    coeffs: StepCoeffs
    ms: MixedSystem
    u0: np.ndarray
    v: np.ndarray = None        # (K, 2n) auxiliary boundary displacements
    u: np.ndarray = None        # (K, 2n) physical boundary displacements
    t_aux: np.ndarray = None    # (K, 4m) auxiliary element tractions
    p: np.ndarray = None        # (K, 4m) physical element tractions
    w_raw: np.ndarray = None    # (K+1, 2n) raw Dirichlet samples (row 0 = t=0)
    g_raw: np.ndarray = None    # (K+1, 4m) raw Neumann samples


@dataclass
class TimeLoopResult:
    tau: float
    times: np.ndarray
    regions: list[RegionSeries]
    probes: list[Probe]
    boundary_series: dict = field(default_factory=dict)  # name -> dict of arrays
    interior_series: dict = field(default_factory=dict)
    contact_rows: list = field(default_factory=list)  # per-step per-node records
    kkt_rows: list = field(default_factory=list)
    energy = None  # filled by postprocess.energy_balance via run helpers

    def n_steps(self) -> int:
        return len(self.times)


def _point_in_region(point, reg: RegionBem) -> bool:
    """Crossing-number test against the region's element loops."""
    x, y = point
    crossings = 0
    for (a, b) in reg.conn:
        x1, y1 = reg.nodes[a]
        x2, y2 = reg.nodes[b]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                crossings += 1
    return crossings % 2 == 1


def _resolve_probes(probes, regions: list[RegionBem]) -> list[Probe]:
    out = []
    for pr in probes:
        pr = Probe(name=pr.name, kind=pr.kind, point=tuple(pr.point),
                   region=pr.region, node=pr.node)
        if pr.kind == "boundary":
            best = (np.inf, 0, -1)
            for ri, reg in enumerate(regions):
                d = np.hypot(*(reg.nodes - np.asarray(pr.point)).T)
                j = int(np.argmin(d))
                if d[j] < best[0]:
                    best = (d[j], ri, j)
            pr.region, pr.node = best[1], best[2]
        elif pr.kind == "interior":
            hit = [ri for ri, reg in enumerate(regions) if _point_in_region(pr.point, reg)]
            if not hit:
                raise UnsupportedConfigurationError(
                    f"interior probe '{pr.name}' at {pr.point} lies outside every region")
            pr.region = hit[0]
            reg = regions[pr.region]
            dmin = _distance_to_boundary(pr.point, reg)
            pr.near_boundary = dmin < 0.1 * reg.lengths.min()
        else:
            raise InvalidModelError(f"unknown probe kind '{pr.kind}'")
        out.append(pr)
    return out


def _distance_to_boundary(point, reg: RegionBem) -> float:
    p = np.asarray(point, dtype=float)
    x1 = reg.nodes[reg.conn[:, 0]]
    dv = reg.nodes[reg.conn[:, 1]] - x1
    ll2 = np.maximum((dv * dv).sum(axis=1), 1e-300)
    s = np.clip(((p - x1) * dv).sum(axis=1) / ll2, 0.0, 1.0)
    close = x1 + s[:, None] * dv
    return float(np.hypot(*(p - close).T).min())


def _node_value(reg: RegionBem, te: np.ndarray, node: int) -> np.ndarray:
    """Element-based traction value at a node, from the lowest incident element."""
    for m, (a, b) in enumerate(reg.conn):
        if a == node:
            return te[4 * m:4 * m + 2]
        if b == node:
            return te[4 * m + 2:4 * m + 4]
    return np.zeros(2)


def run_time_loop(mesh: Mesh, materials, rheologies, bc_groups, *,
                  tau: float, total_time: float,
                  programs: dict[str, LoadProgram] | None = None,
                  probes=(), interfaces=(), u0=None,
                  ngauss: int = 8, kv_mode: str = "auto") -> TimeLoopResult:
    """Run the recursive time loop over T/tau implicit steps.

    ``materials``/``rheologies`` map region ids to their models (a single
    object is broadcast to all regions).  ``kv_mode`` selects the step
    weights: 'general' uses the second-order formulas for any rheology,
    'dedicated' the specialised Kelvin-Voigt ones (only for that family),
    'auto' picks 'dedicated' when possible.  ``u0`` is an initial nodal
    displacement (Kelvin-Voigt family only); histories start at zero
    otherwise.
    """
    n_steps = total_time / tau
    if abs(n_steps - round(n_steps)) > 1e-9 * max(1.0, abs(n_steps)):
        raise InvalidModelError(
            f"total time {total_time} must be an integer multiple of tau {tau}")
    n_steps = int(round(n_steps))
    if n_steps < 1:
        raise InvalidModelError("the time grid must contain at least one step")

    rids = [int(r) for r in mesh.region_ids()]
    mats = materials if isinstance(materials, dict) else {r: materials for r in rids}
    rheos = rheologies if isinstance(rheologies, dict) else {r: rheologies for r in rids}
    groups = {g.name: g for g in bc_groups} if not isinstance(bc_groups, dict) else bc_groups
    iface_groups = {name for pair in interfaces for name in pair}

    regions: list[RegionBem] = []
    coeffs: list[StepCoeffs] = []
    mixed: list[MixedSystem] = []
    for r in rids:
        reg = assemble_region(mesh, r, mats[r], ngauss=ngauss)
        rheo = rheos[r]
        mode = kv_mode
        if mode == "auto":
            mode = "dedicated" if rheo.is_kelvin_voigt_family() else "general"
        if mode == "dedicated":
            c = kv_step_coefficients(rheo.kv_relax_time(), tau)
        elif mode == "general":
            c = step_coefficients(rheo, tau)
        else:
            raise InvalidModelError(f"unknown kv_mode '{kv_mode}'")
        regions.append(reg)
        coeffs.append(c)
        mixed.append(MixedSystem(reg, groups, mesh.group_names,
                                 programs=programs, interface_groups=iface_groups,
                                 require_dirichlet=not interfaces))

    has_contact = any(ms.contact for ms in mixed)
    coupled = None
    condensed = None
    if interfaces:
        pairings = [pair_interface_nodes(regions, mesh.group_names, a, b)
                    for a, b in interfaces]
        coupled = CoupledSystem(regions, mixed, pairings, coeffs)
    elif has_contact:
        if len(rids) > 1:
            raise UnsupportedConfigurationError(
                "contact requires a single region (no coupling)")
        if not rheos[rids[0]].is_kelvin_voigt_family():
            raise UnsupportedConfigurationError(
                "unilateral contact is defined for the Kelvin-Voigt family only")
        condensed = CondensedContact(mixed[0])

    if u0 is not None:
        for r in rids:
            if not rheos[r].is_kelvin_voigt_family():
                raise UnsupportedConfigurationError(
                    "nonzero initial displacements require a Kelvin-Voigt family "
                    "rheology; general laws start from zero histories")

    # per-region state and storage
    series = []
    for ri, reg in enumerate(regions):
        n2, m4 = 2 * reg.n_nodes, 4 * reg.n_elems
        u_init = np.zeros(n2) if u0 is None else np.asarray(u0, dtype=float).copy()
        s = RegionSeries(reg=reg, rheo=rheos[rids[ri]], coeffs=coeffs[ri],
                         ms=mixed[ri], u0=u_init,
                         v=np.zeros((n_steps, n2)), u=np.zeros((n_steps, n2)),
                         t_aux=np.zeros((n_steps, m4)), p=np.zeros((n_steps, m4)),
                         w_raw=np.zeros((n_steps + 1, n2)),
                         g_raw=np.zeros((n_steps + 1, m4)))
        s.w_raw[0], s.g_raw[0] = mixed[ri].sample_data(0.0)
        series.append(s)

    probes = _resolve_probes(probes, regions)
    interior_pts: dict[int, list[int]] = {}
    for pi, pr in enumerate(probes):
        if pr.kind == "interior":
            interior_pts.setdefault(pr.region, []).append(pi)
    int_ops = {}
    int_state = {}
    for ri, plist in interior_pts.items():
        reg = regions[ri]
        pts = np.array([probes[pi].point for pi in plist])
        pn = np.full(len(pts), -1, dtype=np.int64)
        He_i, Ge_i = _core.boundary_influence(pts, pn, reg.nodes, reg.conn,
                                              reg.normals, reg.lengths,
                                              reg.mat.nu, reg.mat.mu, ngauss=ngauss)
        De_i, Se_i = _core.stress_influence(pts, reg.nodes, reg.conn,
                                            reg.normals, reg.lengths,
                                            reg.mat.nu, reg.mat.mu, ngauss=ngauss)
        int_ops[ri] = (He_i, Ge_i, De_i, Se_i, plist)
        k = len(plist)
        int_state[ri] = {"u_prev": np.zeros(2 * k), "u_prev2": np.zeros(2 * k),
                         "s_prev": np.zeros(3 * k), "s_prev2": np.zeros(3 * k)}

    for pr in probes:
        if pr.kind == "boundary":
            store = {"u": np.zeros((n_steps, 2)), "v": np.zeros((n_steps, 2)),
                     "p": np.zeros((n_steps, 2))}
        else:
            store = {"u": np.zeros((n_steps, 2)), "sigma": np.zeros((n_steps, 3)),
                     "near_boundary": pr.near_boundary}
        pr._store = store  # type: ignore[attr-defined]

    times = tau * np.arange(1, n_steps + 1)
    result = TimeLoopResult(tau=tau, times=times, regions=series, probes=probes)
    for pr in probes:
        if pr.kind == "boundary":
            result.boundary_series[pr.name] = pr._store
        else:
            result.interior_series[pr.name] = pr._store

    # history state per region
    u_prev = [s.u0.copy() for s in series]
    u_prev2 = [np.zeros_like(s.u0) for s in series]
    p_prev = [np.zeros(4 * s.reg.n_elems) for s in series]
    p_prev2 = [np.zeros(4 * s.reg.n_elems) for s in series]

    for k in range(1, n_steps + 1):
        t = k * tau
        w_eff, g_eff = [], []
        for ri, s in enumerate(series):
            w_k, g_k = s.ms.sample_data(t)
            s.w_raw[k], s.g_raw[k] = w_k, g_k
            w1 = s.w_raw[k - 1]
            w2 = s.w_raw[k - 2] if k >= 2 else np.zeros_like(w_k)
            g1 = s.g_raw[k - 1]
            g2 = s.g_raw[k - 2] if k >= 2 else np.zeros_like(g_k)
            w_eff.append(transform_dirichlet(w_k, w1, w2, s.coeffs))
            g_eff.append(transform_neumann(g_k, g1, g2, s.coeffs))

        if coupled is not None:
            hist = coupled.interface_history(u_prev, u_prev2)
            x = coupled.solve(coupled.rhs(w_eff, g_eff, hist))
            pairs = coupled.reconstruct(x, w_eff, g_eff, hist)
        elif condensed is not None:
            cn_nodes = condensed.nodes
            upn = np.array([u_prev[0][2 * nd] * condensed.normals[i, 0]
                            + u_prev[0][2 * nd + 1] * condensed.normals[i, 1]
                            for i, nd in enumerate(cn_nodes)])
            upn2 = np.array([u_prev2[0][2 * nd] * condensed.normals[i, 0]
                             + u_prev2[0][2 * nd + 1] * condensed.normals[i, 1]
                             for i, nd in enumerate(cn_nodes)])
            bounds = transformed_bounds(series[0].coeffs, condensed.gaps, upn, upn2)
            v, te, v_c, lam, kkt = condensed.solve_step(w_eff[0], g_eff[0], bounds)
            pairs = [(v, te)]
            result.kkt_rows.append({"step": k, "time": t, **kkt})
        else:
            pairs = []
            for ri, s in enumerate(series):
                x = s.ms.solve(s.ms.rhs(w_eff[ri], g_eff[ri]))
                pairs.append(s.ms.reconstruct(x, w_eff[ri], g_eff[ri]))

        for ri, s in enumerate(series):
            v, te = pairs[ri]
            u = recover_displacement(v, u_prev[ri], u_prev2[ri], s.coeffs)
            p = recover_traction(te, p_prev[ri], p_prev2[ri], s.coeffs)
            s.v[k - 1], s.u[k - 1] = v, u
            s.t_aux[k - 1], s.p[k - 1] = te, p
            u_prev2[ri], u_prev[ri] = u_prev[ri], u
            p_prev2[ri], p_prev[ri] = p_prev[ri], p

        if condensed is not None:
            s = series[0]
            u = s.u[k - 1]
            for i, nd in enumerate(condensed.nodes):
                nrm = condensed.normals[i]
                result.contact_rows.append({
                    "step": k, "time": t, "node": int(nd),
                    "arc_coord": float(condensed.arcs[i]),
                    "vn": float(v_c[i]),
                    "un": float(u[2 * nd] * nrm[0] + u[2 * nd + 1] * nrm[1]),
                    # weak nodal traction conjugate to the minimisation,
                    # compressive by construction
                    "tn": float(lam[i] / condensed.weights[i]),
                    "active": bool(lam[i] != 0.0),
                })

        for ri, ops in int_ops.items():
            He_i, Ge_i, De_i, Se_i, plist = ops
            s = series[ri]
            st = int_state[ri]
            v, te = pairs[ri]
            ve = s.reg.spread_nodal(v)
            v_int = Ge_i @ te - He_i @ ve
            s_aux = De_i @ te - Se_i @ ve
            u_int = recover_displacement(v_int, st["u_prev"], st["u_prev2"], s.coeffs)
            s_int = recover_traction(s_aux, st["s_prev"], st["s_prev2"], s.coeffs)
            st["u_prev2"], st["u_prev"] = st["u_prev"], u_int
            st["s_prev2"], st["s_prev"] = st["s_prev"], s_int
            for slot, pi in enumerate(plist):
                pr = probes[pi]
                pr._store["u"][k - 1] = u_int[2 * slot:2 * slot + 2]
                pr._store["sigma"][k - 1] = s_int[3 * slot:3 * slot + 3]

        for pr in probes:
            if pr.kind != "boundary":
                continue
            s = series[pr.region]
            nd = pr.node
            pr._store["u"][k - 1] = s.u[k - 1, 2 * nd:2 * nd + 2]
            pr._store["v"][k - 1] = s.v[k - 1, 2 * nd:2 * nd + 2]
            pr._store["p"][k - 1] = _node_value(s.reg, s.p[k - 1], nd)

    return result
