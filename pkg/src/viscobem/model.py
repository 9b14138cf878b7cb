"""Geometry, material, rheology and boundary-condition data model.

Everything here is immutable after construction so model objects can be
shared freely between concurrent solver runs.  Units are the caller's
responsibility: any consistent (length, stress, time) system works, the
solver never converts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Material",
    "Rheology",
    "rheology_preset",
    "LoadProgram",
    "BCGroup",
    "Mesh",
    "generate_mesh",
    "rectangle_mesh",
    "quarter_disk_mesh",
    "stacked_rectangles_mesh",
    "validate_model",
    "InvalidModelError",
]

DUPLICATE_TOL = 1e-12  # relative to bounding-box diagonal


class InvalidModelError(ValueError):
    """Raised for geometry/material/BC data that violates a model invariant."""


# ---------------------------------------------------------------------------
# Material
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Material:
    """Isotropic plane-strain elastic material.

    Parameters
    ----------
    E : Young's modulus (> 0, stress units)
    nu : Poisson ratio, strictly inside (-1, 0.5)
    """

    E: float
    nu: float

    def __post_init__(self):
        if not self.E > 0:
            raise InvalidModelError(f"Young's modulus must be positive, got {self.E}")
        if not (-1.0 < self.nu < 0.5):
            raise InvalidModelError(f"Poisson ratio out of range (-1, 0.5): {self.nu}")

    @property
    def mu(self) -> float:
        """Shear modulus E / (2 (1 + nu))."""
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        """Plane-strain Lame constant 2 mu nu / (1 - 2 nu)."""
        return 2.0 * self.mu * self.nu / (1.0 - 2.0 * self.nu)


# ---------------------------------------------------------------------------
# Rheology
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rheology:
    """Coefficients of the second-order stress-strain evolution law.

    The law relates the stress history to the displacement history through
    one shared elastic tensor and two coefficient triples::

        s0*sigma + s1*d(sigma)/dt + s2*d2(sigma)/dt2
            = C e( u0*u + u1*du/dt + u2*d2u/dt2 )

    ``disp`` holds (u0, u1, u2) with units (1, time, time^2); ``stress``
    holds (s0, s1, s2) likewise.  Presets normalise s0 = 1 where present
    (s1 = 1 otherwise) to remove the common-scale gauge freedom.
    """

    disp: tuple[float, float, float]
    stress: tuple[float, float, float]
    preset: str = "custom"

    def __post_init__(self):
        if not any(c != 0.0 for c in self.disp):
            raise InvalidModelError("all displacement-side coefficients are zero")
        if not any(c != 0.0 for c in self.stress):
            raise InvalidModelError("all stress-side coefficients are zero")

    def is_kelvin_voigt_family(self) -> bool:
        """True for laws of the form sigma = C e(u + chi du/dt), chi >= 0.

        Covers the purely elastic case (chi = 0).  These are the laws for
        which the energy ledger, the dissipation field and unilateral
        contact are defined.
        """
        u0, u1, u2 = self.disp
        s0, s1, s2 = self.stress
        return u0 != 0.0 and u2 == 0.0 and s1 == 0.0 and s2 == 0.0 and u1 / u0 >= 0.0

    def kv_relax_time(self) -> float:
        """Relaxation time chi of a Kelvin-Voigt family law."""
        if not self.is_kelvin_voigt_family():
            raise InvalidModelError(
                f"operation requires a Kelvin-Voigt family rheology, got '{self.preset}'")
        # the stress side is s0*sigma, so chi = (u1/u0) * (s0/s0)
        return self.disp[1] / self.disp[0]


def _require(params: dict, name: str, preset: str) -> float:
    if name not in params:
        raise InvalidModelError(f"preset '{preset}' requires parameter '{name}'")
    value = float(params[name])
    if value <= 0.0:
        raise InvalidModelError(f"parameter '{name}' of preset '{preset}' must be positive")
    return value


def rheology_preset(name: str, **params) -> Rheology:
    """Build a named rheological model from its spring/damper constants.

    All models share one elastic tensor C; springs scale it by a ratio and
    dampers pair it with a time constant:

    ========  =====================================  ==================
    name      assembly                               parameters
    ========  =====================================  ==================
    hooke     single spring C                        --
    newton    single damper  mu1*C                   mu1
    kelvin_   spring C parallel damper mu1*C         chi (= mu1)
    voigt
    maxwell   spring C series damper mu2*C           chi (= mu2)
    boltzmann spring alpha*C series KV(C, mu1)       alpha, chi (= mu1)
    jeffreys  damper mu2*C series KV(C, mu1)         mu1, mu2
    burgers   maxwell(alpha*C, mu2*C) series         alpha, mu1, mu2
              KV(C, mu1)
    solid4    KV(C, mu1) series KV(alpha*C, mu2*C)   alpha, mu1, mu2
    ========  =====================================  ==================

    Time constants are relaxation times (viscosity / stiffness, time
    units).  The returned coefficients are normalised to unit zeroth
    stress coefficient.
    """
    name = name.lower()
    if name == "hooke":
        return Rheology((1.0, 0.0, 0.0), (1.0, 0.0, 0.0), "hooke")
    if name == "newton":
        mu1 = _require(params, "mu1", name)
        return Rheology((0.0, mu1, 0.0), (1.0, 0.0, 0.0), "newton")
    if name == "kelvin_voigt":
        chi = float(params.get("chi", params.get("mu1", 0.0)))
        if chi < 0.0:
            raise InvalidModelError("kelvin_voigt relaxation time must be >= 0")
        return Rheology((1.0, chi, 0.0), (1.0, 0.0, 0.0), "kelvin_voigt")
    if name == "maxwell":
        chi = float(params.get("chi", params.get("mu2", 0.0)))
        if chi <= 0.0:
            raise InvalidModelError("maxwell relaxation time must be positive")
        return Rheology((0.0, chi, 0.0), (1.0, chi, 0.0), "maxwell")
    if name == "boltzmann":
        alpha = _require(params, "alpha", name)
        mu1 = float(params.get("chi", params.get("mu1", 0.0)))
        if mu1 <= 0.0:
            raise InvalidModelError("boltzmann requires positive 'chi' (or 'mu1')")
        s = 1.0 + alpha
        return Rheology((alpha / s, alpha * mu1 / s, 0.0), (1.0, mu1 / s, 0.0), "boltzmann")
    if name == "jeffreys":
        mu1 = _require(params, "mu1", name)
        mu2 = _require(params, "mu2", name)
        return Rheology((0.0, mu2, mu1 * mu2), (1.0, mu1 + mu2, 0.0), "jeffreys")
    if name == "burgers":
        alpha = _require(params, "alpha", name)
        mu1 = _require(params, "mu1", name)
        mu2 = _require(params, "mu2", name)
        return Rheology((0.0, mu2, mu1 * mu2),
                        (1.0, mu2 * (1.0 + 1.0 / alpha) + mu1, mu1 * mu2 / alpha),
                        "burgers")
    if name == "solid4":
        alpha = _require(params, "alpha", name)
        mu1 = _require(params, "mu1", name)
        mu2 = _require(params, "mu2", name)
        s = 1.0 + alpha
        return Rheology((alpha / s, (mu2 + alpha * mu1) / s, mu1 * mu2 / s),
                        (1.0, (mu1 + mu2) / s, 0.0), "solid4")
    raise InvalidModelError(f"unknown rheology preset '{name}'")


# ---------------------------------------------------------------------------
# Load program
# ---------------------------------------------------------------------------

class LoadProgram:
    """Piecewise-linear scalar multiplier of time.

    Breakpoints are (time, value) pairs with non-decreasing times; a jump
    is written as two breakpoints at the same time.  Evaluation at a
    breakpoint returns the left limit (the value *before* a jump), which
    lets a load removed at t_r still act on the step sampled exactly at
    t_r.  Outside the breakpoint range the first/last value extends as a
    constant.
    """

    def __init__(self, points: Sequence[tuple[float, float]]):
        pts = [(float(t), float(v)) for t, v in points]
        if not pts:
            raise InvalidModelError("load program needs at least one breakpoint")
        times = [t for t, _ in pts]
        for a, b in zip(times, times[1:]):
            if b < a:
                raise InvalidModelError("load program times must be non-decreasing")
        for t in times:
            if times.count(t) > 2:
                raise InvalidModelError(f"more than two breakpoints at t={t}")
        self._t = np.array(times)
        self._v = np.array([v for _, v in pts])

    @classmethod
    def constant(cls, value: float = 1.0) -> "LoadProgram":
        return cls([(0.0, value)])

    def value(self, t: float) -> float:
        tt, vv = self._t, self._v
        if t <= tt[0]:
            return float(vv[0])
        if t >= tt[-1]:
            # at the last breakpoint the left limit is still wanted
            if t == tt[-1]:
                i = int(np.searchsorted(tt, t, side="left"))
                return float(vv[i])
            return float(vv[-1])
        # left limit at a duplicated breakpoint: take the first occurrence
        i = int(np.searchsorted(tt, t, side="left"))
        if tt[i] == t:
            return float(vv[i])
        t0, t1 = tt[i - 1], tt[i]
        v0, v1 = vv[i - 1], vv[i]
        if t1 == t0:
            return float(v1)
        return float(v0 + (v1 - v0) * (t - t0) / (t1 - t0))

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self._t.tolist(), self._v.tolist()))


# ---------------------------------------------------------------------------
# Boundary conditions
# ---------------------------------------------------------------------------

DIRICHLET = "dirichlet"
NEUMANN = "neumann"
CONTACT = "contact"
INTERFACE = "interface"  # internal: assigned to paired multi-region groups


@dataclass(frozen=True)
class BCGroup:
    """Boundary condition of one element group.

    For ``dirichlet``/``neumann`` kinds the condition is per Cartesian
    direction: ``kind[d]`` and ``value[d]`` give the constraint on
    direction d, scaled in time by the group's load program.  A
    ``contact`` group imposes frictionless unilateral contact against a
    rigid obstacle in the node-normal direction (zero tangential
    traction); the obstacle is the line through ``obstacle_point`` with
    inward normal ``obstacle_normal`` and the initial gap is measured
    from each node along its outward normal.
    """

    name: str
    kind: tuple[str, str] = (NEUMANN, NEUMANN)
    value: tuple[float, float] = (0.0, 0.0)
    program: str | tuple[str, str] = ""
    contact: bool = False
    obstacle_point: tuple[float, float] = (0.0, 0.0)
    obstacle_normal: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        if isinstance(self.program, str):
            object.__setattr__(self, "program", (self.program, self.program))
        if self.contact:
            return
        for k in self.kind:
            if k not in (DIRICHLET, NEUMANN, INTERFACE):
                raise InvalidModelError(f"unknown BC kind '{k}' in group '{self.name}'")


# ---------------------------------------------------------------------------
# Mesh
# ---------------------------------------------------------------------------

class Mesh:
    """Closed polygonal boundary of one or more regions, linear elements.

    ``nodes`` is (N, 2); ``elems`` is (M, 2) node indices oriented so the
    outward normal (tangent rotated by -90 degrees) points away from the
    region interior, i.e. loops around a region run counter-clockwise for
    outer boundaries.  ``region`` and ``group`` give per-element region
    id and BC-group id; ``group_names`` maps group ids to names.
    """

    def __init__(self, nodes, elems, region=None, group=None, group_names=None):
        self.nodes = np.ascontiguousarray(np.asarray(nodes, dtype=float))
        self.elems = np.ascontiguousarray(np.asarray(elems, dtype=np.int64))
        m = len(self.elems)
        self.region = (np.zeros(m, dtype=np.int64) if region is None
                       else np.asarray(region, dtype=np.int64).copy())
        self.group = (np.zeros(m, dtype=np.int64) if group is None
                      else np.asarray(group, dtype=np.int64).copy())
        self.group_names = list(group_names) if group_names is not None else ["all"]

        d = self.nodes[self.elems[:, 1]] - self.nodes[self.elems[:, 0]]
        self.lengths = np.hypot(d[:, 0], d[:, 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            t = d / self.lengths[:, None]
        self.tangents = t
        self.normals = np.column_stack([t[:, 1], -t[:, 0]])  # outward for CCW loops

        for a in (self.nodes, self.elems, self.region, self.group,
                  self.lengths, self.tangents, self.normals):
            a.flags.writeable = False

    # -- queries ------------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elems(self) -> int:
        return len(self.elems)

    def region_ids(self):
        return np.unique(self.region)

    def group_id(self, name: str) -> int:
        try:
            return self.group_names.index(name)
        except ValueError:
            raise KeyError(f"mesh has no BC group named '{name}'") from None

    def elems_of_region(self, rid: int) -> np.ndarray:
        return np.nonzero(self.region == rid)[0]

    def nodes_of_region(self, rid: int) -> np.ndarray:
        return np.unique(self.elems[self.region == rid].ravel())

    def incident_elements(self) -> list[list[int]]:
        """Per node, list of incident element indices (ordered by element id)."""
        inc = [[] for _ in range(self.n_nodes)]
        for e, (a, b) in enumerate(self.elems):
            inc[a].append(e)
            inc[b].append(e)
        return inc

    def bbox_diagonal(self) -> float:
        lo = self.nodes.min(axis=0)
        hi = self.nodes.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def nearest_node(self, point) -> int:
        d = self.nodes - np.asarray(point, dtype=float)
        return int(np.argmin(np.hypot(d[:, 0], d[:, 1])))

    # -- validation ---------------------------------------------------------

    def validate(self) -> list[str]:
        """Return a diagnostic string per violated invariant (empty if ok)."""
        diags: list[str] = []
        n, m = self.n_nodes, self.n_elems
        if self.elems.size and (self.elems.min() < 0 or self.elems.max() >= n):
            diags.append("element references a node index out of range")
            return diags

        for e in np.nonzero(self.lengths == 0.0)[0]:
            diags.append(f"zero-length element #{e}")

        # coincident nodes are an error only within one region: conforming
        # multi-region interfaces deliberately duplicate their nodes
        tol = DUPLICATE_TOL * max(self.bbox_diagonal(), 1.0)
        node_region: dict[int, set[int]] = {}
        for e, (a, b) in enumerate(self.elems):
            node_region.setdefault(int(a), set()).add(int(self.region[e]))
            node_region.setdefault(int(b), set()).add(int(self.region[e]))
        order = np.lexsort((self.nodes[:, 1], self.nodes[:, 0]))
        sn = self.nodes[order]
        close = np.nonzero(np.hypot(*(sn[1:] - sn[:-1]).T) < tol)[0]
        for i in close:
            na, nb = int(order[i]), int(order[i + 1])
            if node_region.get(na, set()) & node_region.get(nb, set()):
                diags.append(f"duplicate nodes #{na} and #{nb}")

        for rid in self.region_ids():
            sel = self.region == rid
            counts = np.zeros(n, dtype=int)
            for a, b in self.elems[sel]:
                counts[a] += 1
                counts[b] += 1
            bad = np.nonzero((counts != 0) & (counts != 2))[0]
            for nd in bad:
                diags.append(f"node #{nd} of region {rid} has {counts[nd]} incident "
                             "elements (closed loops need exactly 2)")
            if len(bad) == 0 and sel.any():
                for loop in self._loops(np.nonzero(sel)[0]):
                    area = self._signed_area(loop)
                    if area <= 0.0:
                        diags.append(f"loop starting at element #{loop[0]} of region "
                                     f"{rid} is not counter-clockwise (signed area "
                                     f"{area:g})")
        if self.group.size and (self.group.min() < 0
                                or self.group.max() >= len(self.group_names)):
            diags.append("element BC-group id out of range")
        return diags

    def _loops(self, elem_ids) -> list[list[int]]:
        """Split a region's elements into closed loops following connectivity."""
        start_of = {}
        for e in elem_ids:
            start_of.setdefault(self.elems[e, 0], []).append(e)
        unused = set(int(e) for e in elem_ids)
        loops = []
        while unused:
            e0 = min(unused)
            loop = [e0]
            unused.discard(e0)
            node = int(self.elems[e0, 1])
            while True:
                nxt = [e for e in start_of.get(node, ()) if e in unused]
                if not nxt:
                    break
                e = min(nxt)
                loop.append(e)
                unused.discard(e)
                node = int(self.elems[e, 1])
            loops.append(loop)
        return loops

    def _signed_area(self, loop) -> float:
        a = 0.0
        for e in loop:
            p, q = self.nodes[self.elems[e, 0]], self.nodes[self.elems[e, 1]]
            a += 0.5 * (p[0] * q[1] - p[1] * q[0])
        return a

    # -- text format ---------------------------------------------------------

    def write_text(self, path) -> None:
        """Write the mesh in the plain-text exchange format.

        Format: a line ``NODES n`` followed by n lines ``id x y``, then
        ``ELEMENTS m`` followed by m lines ``id n1 n2 region bcgroup``.
        ``#`` starts a comment.  Group names are emitted as comments so a
        round trip preserves them.
        """
        with open(path, "w") as fh:
            for gid, name in enumerate(self.group_names):
                fh.write(f"# group {gid} {name}\n")
            fh.write(f"NODES {self.n_nodes}\n")
            for i, (x, y) in enumerate(self.nodes):
                fh.write(f"{i} {float(x)!r} {float(y)!r}\n")
            fh.write(f"ELEMENTS {self.n_elems}\n")
            for e in range(self.n_elems):
                a, b = self.elems[e]
                fh.write(f"{e} {a} {b} {self.region[e]} {self.group[e]}\n")

    @classmethod
    def read_text(cls, path) -> "Mesh":
        group_names: dict[int, str] = {}
        tokens: list[list[str]] = []
        with open(path) as fh:
            for raw in fh:
                line = raw.strip()
                if line.startswith("# group "):
                    parts = line.split(maxsplit=3)
                    if len(parts) == 4:
                        group_names[int(parts[2])] = parts[3]
                line = line.split("#", 1)[0].strip()
                if line:
                    tokens.append(line.split())
        it = iter(tokens)
        head = next(it, None)
        if head is None or head[0].upper() != "NODES":
            raise InvalidModelError("mesh file must start with 'NODES n'")
        n = int(head[1])
        nodes = np.zeros((n, 2))
        for _ in range(n):
            rec = next(it)
            nodes[int(rec[0])] = (float(rec[1]), float(rec[2]))
        head = next(it, None)
        if head is None or head[0].upper() != "ELEMENTS":
            raise InvalidModelError("expected 'ELEMENTS m' after the node block")
        m = int(head[1])
        elems = np.zeros((m, 2), dtype=np.int64)
        region = np.zeros(m, dtype=np.int64)
        group = np.zeros(m, dtype=np.int64)
        for _ in range(m):
            rec = next(it)
            e = int(rec[0])
            elems[e] = (int(rec[1]), int(rec[2]))
            region[e] = int(rec[3])
            group[e] = int(rec[4])
        n_groups = int(group.max()) + 1 if m else 1
        names = [group_names.get(g, f"group{g}") for g in range(n_groups)]
        return cls(nodes, elems, region, group, names)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def rectangle_mesh(length: float, height: float, nx: int, ny: int) -> Mesh:
    """Rectangle [0, length] x [0, height], CCW loop, one region.

    Groups: bottom, right, top, left.  nx/ny are element counts along the
    horizontal/vertical sides, so the loop has 2 (nx + ny) elements.
    """
    if length <= 0 or height <= 0:
        raise InvalidModelError("rectangle dimensions must be positive")
    if nx < 1 or ny < 1:
        raise InvalidModelError("rectangle needs at least one element per side")
    pts = []
    for i in range(nx):
        pts.append((length * i / nx, 0.0))
    for j in range(ny):
        pts.append((length, height * j / ny))
    for i in range(nx, 0, -1):
        pts.append((length * i / nx, height))
    for j in range(ny, 0, -1):
        pts.append((0.0, height * j / ny))
    nodes = np.array(pts)
    m = len(pts)
    elems = np.column_stack([np.arange(m), (np.arange(m) + 1) % m])
    group = np.concatenate([
        np.full(nx, 0), np.full(ny, 1), np.full(nx, 2), np.full(ny, 3)])
    return Mesh(nodes, elems, None, group, ["bottom", "right", "top", "left"])


def quarter_disk_mesh(radius: float, contact_angle_deg: float,
                      n_contact: int, n_free: int, n_straight: int) -> Mesh:
    """Quarter disk resting on the line y = 0, CCW loop, one region.

    The disk of the given radius is centred at (0, radius) and touches
    the obstacle line at the origin.  Groups: ``contact_arc`` (arc from
    the bottom point up to the contact angle), ``free_arc`` (rest of the
    arc up to (radius, radius)), ``top`` (loaded straight edge back to
    (0, radius)) and ``symmetry`` (straight edge down to the origin).
    """
    if radius <= 0:
        raise InvalidModelError("disk radius must be positive")
    phi = np.radians(contact_angle_deg)
    if not (0 < phi < np.pi / 2):
        raise InvalidModelError("contact angle must lie in (0, 90) degrees")
    if min(n_contact, n_free, n_straight) < 1:
        raise InvalidModelError("quarter disk needs at least one element per part")

    def arc(theta):
        return (radius * np.sin(theta), radius * (1.0 - np.cos(theta)))

    pts = []
    for j in range(n_contact):
        pts.append(arc(phi * j / n_contact))
    for j in range(n_free):
        pts.append(arc(phi + (np.pi / 2 - phi) * j / n_free))
    for j in range(n_straight):
        pts.append((radius * (1.0 - j / n_straight), radius))
    for j in range(n_straight):
        pts.append((0.0, radius * (1.0 - j / n_straight)))
    nodes = np.array(pts)
    m = len(pts)
    elems = np.column_stack([np.arange(m), (np.arange(m) + 1) % m])
    group = np.concatenate([
        np.full(n_contact, 0), np.full(n_free, 1),
        np.full(n_straight, 2), np.full(n_straight, 3)])
    return Mesh(nodes, elems, None, group,
                ["contact_arc", "free_arc", "top", "symmetry"])


def stacked_rectangles_mesh(length: float, h1: float, h2: float,
                            nx: int, ny1: int, ny2: int) -> Mesh:
    """Two rectangular regions stacked vertically with a conforming interface.

    Region 0 occupies [0, length] x [0, h1], region 1 sits on top of it.
    Groups: bottom, right_low, iface_low, left_low (region 0) and
    iface_up, right_up, top, left_up (region 1).  The two ``iface``
    groups trace the same line y = h1 with opposite orientation and
    matching nodes, ready to be paired as an interface.
    """
    if min(length, h1, h2) <= 0:
        raise InvalidModelError("stacked rectangle dimensions must be positive")
    if min(nx, ny1, ny2) < 1:
        raise InvalidModelError("stacked rectangles need >= 1 element per side")
    pts = []
    # region 0 loop
    for i in range(nx):
        pts.append((length * i / nx, 0.0))
    for j in range(ny1):
        pts.append((length, h1 * j / ny1))
    for i in range(nx, 0, -1):
        pts.append((length * i / nx, h1))
    for j in range(ny1, 0, -1):
        pts.append((0.0, h1 * j / ny1))
    m0 = len(pts)
    # region 1 loop: re-uses no node ids (interface nodes are duplicated,
    # geometrically coincident), runs CCW around [0,L] x [h1, h1+h2]
    for i in range(nx):
        pts.append((length * i / nx, h1))
    for j in range(ny2):
        pts.append((length, h1 + h2 * j / ny2))
    for i in range(nx, 0, -1):
        pts.append((length * i / nx, h1 + h2))
    for j in range(ny2, 0, -1):
        pts.append((0.0, h1 + h2 * j / ny2))
    nodes = np.array(pts)
    e0 = np.column_stack([np.arange(m0), (np.arange(m0) + 1) % m0])
    m1 = len(pts) - m0
    e1 = m0 + np.column_stack([np.arange(m1), (np.arange(m1) + 1) % m1])
    elems = np.vstack([e0, e1])
    region = np.concatenate([np.zeros(m0, np.int64), np.ones(m1, np.int64)])
    group = np.concatenate([
        np.full(nx, 0), np.full(ny1, 1), np.full(nx, 2), np.full(ny1, 3),
        np.full(nx, 4), np.full(ny2, 5), np.full(nx, 6), np.full(ny2, 7)])
    names = ["bottom", "right_low", "iface_low", "left_low",
             "iface_up", "right_up", "top", "left_up"]
    return Mesh(nodes, elems, region, group, names)


def generate_mesh(shape: str, **params) -> Mesh:
    """Generator dispatch used by the CLI and config files."""
    shape = shape.lower()
    if shape == "rectangle":
        return rectangle_mesh(params["length"], params["height"],
                              int(params["nx"]), int(params["ny"]))
    if shape == "quarter_disk":
        return quarter_disk_mesh(params["radius"], params["contact_angle_deg"],
                                 int(params["n_contact"]), int(params["n_free"]),
                                 int(params["n_straight"]))
    if shape == "stacked_rectangles":
        return stacked_rectangles_mesh(params["length"], params["h1"], params["h2"],
                                       int(params["nx"]), int(params["ny1"]),
                                       int(params["ny2"]))
    raise InvalidModelError(f"unknown mesh shape '{shape}'")


# ---------------------------------------------------------------------------
# Whole-model validation
# ---------------------------------------------------------------------------

def validate_model(mesh: Mesh, materials=None, bc_groups=None) -> list[str]:
    """Collect diagnostics for a mesh plus optional materials and BC groups.

    Returns one human-readable string per violation; an empty list means
    the model satisfies every invariant.  Never raises on bad data.
    """
    diags = list(mesh.validate())

    if materials is not None:
        mats = materials if isinstance(materials, dict) else dict(enumerate(materials))
        for rid in mesh.region_ids():
            if int(rid) not in mats:
                diags.append(f"region {rid} has no material")
        for rid, mat in mats.items():
            if not isinstance(mat, Material):
                try:
                    Material(*mat)
                except InvalidModelError as exc:
                    diags.append(f"region {rid}: {exc}")

    if bc_groups is not None:
        by_name = {g.name: g for g in bc_groups}
        for gid, name in enumerate(mesh.group_names):
            if np.any(mesh.group == gid) and name not in by_name:
                diags.append(f"BC group '{name}' is used by the mesh but undefined")
        for g in bc_groups:
            if g.contact:
                nrm = np.hypot(*g.obstacle_normal)
                if not nrm > 0:
                    diags.append(f"contact group '{g.name}' has a zero obstacle normal")
    return diags
