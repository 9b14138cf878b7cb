"""Batch interface: JSON case configuration, orchestration, CSV emission.

Subcommands::

    viscobem run --config case.json --out results/ [--tau 2.5]
    viscobem mesh rectangle --length 800 --height 100 --nx 80 --ny 10 --out m.txt
    viscobem mesh quarter_disk --radius 0.75 --contact-angle 13.5 \
        --n-contact 60 --n-free 170 --n-straight 20 --out m.txt
    viscobem validate --config case.json

Exit codes: 0 success, 2 configuration error, 3 solver error.  Outputs are
deterministic: the same inputs produce byte-identical CSV files.  Floats
are written with ``repr`` (shortest round-trip, '.' decimal separator).
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import postprocess
from .assembly import UnsupportedConfigurationError
from .model import (BCGroup, CONTACT, DIRICHLET, InvalidModelError, LoadProgram,
                    Material, Mesh, NEUMANN, Rheology, generate_mesh,
                    rheology_preset, validate_model)
from .stepping import Probe, TimeLoopResult, run_time_loop

__all__ = ["Case", "ConfigError", "parse_config", "load_case", "run_case", "main"]


class ConfigError(ValueError):
    """Configuration rejected; the message carries the offending path."""


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# strict schema helpers
# ---------------------------------------------------------------------------

def _check_keys(obj: dict, path: str, required: dict, optional: dict = {}):
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in obj:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}.{key}: unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}: required key missing")


def _number(obj, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(obj)


def _integer(obj, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ConfigError(f"{path}: expected an integer")
    return int(obj)


def _string(obj, path: str) -> str:
    if not isinstance(obj, str):
        raise ConfigError(f"{path}: expected a string")
    return obj


def _point(obj, path: str) -> tuple[float, float]:
    if not isinstance(obj, (list, tuple)) or len(obj) != 2:
        raise ConfigError(f"{path}: expected [x, y]")
    return (_number(obj[0], path + "[0]"), _number(obj[1], path + "[1]"))


# ---------------------------------------------------------------------------
# Case
# ---------------------------------------------------------------------------

@dataclass
class Case:
    """Fully materialised run description."""

    mesh: Mesh
    materials: dict[int, Material]
    rheologies: dict[int, Rheology]
    bc_groups: list[BCGroup]
    programs: dict[str, LoadProgram]
    tau: float
    total_time: float
    probes: list[Probe] = field(default_factory=list)
    interfaces: list[tuple[str, str]] = field(default_factory=list)
    u0: np.ndarray | None = None
    outputs: dict = field(default_factory=dict)
    ngauss: int = 8
    kv_mode: str = "auto"
    description: str = ""


_MESH_SHAPES = {
    "rectangle": {"length", "height", "nx", "ny"},
    "quarter_disk": {"radius", "contact_angle_deg", "n_contact", "n_free", "n_straight"},
    "stacked_rectangles": {"length", "h1", "h2", "nx", "ny1", "ny2"},
}

_PRESET_PARAMS = {"chi", "alpha", "mu1", "mu2"}


def parse_config(text: str, base_dir: Path | str = ".") -> Case:
    """Parse and validate a JSON case document (strict: unknown keys fail)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from None
    _check_keys(doc, "$", required={"mesh": 1, "regions": 1, "bc_groups": 1, "time": 1},
                optional={"programs": 1, "probes": 1, "interfaces": 1, "outputs": 1,
                          "solver": 1, "description": 1, "initial_displacement": 1})

    mesh_spec = doc["mesh"]
    if not isinstance(mesh_spec, dict):
        raise ConfigError("$.mesh: expected an object")
    if "file" in mesh_spec:
        _check_keys(mesh_spec, "$.mesh", required={"file": 1})
        path = Path(base_dir) / _string(mesh_spec["file"], "$.mesh.file")
        if not path.exists():
            raise ConfigError(f"$.mesh.file: '{path}' not found")
        mesh = Mesh.read_text(path)
    else:
        _check_keys(mesh_spec, "$.mesh", required={"shape": 1},
                    optional={k: 1 for ks in _MESH_SHAPES.values() for k in ks})
        shape = _string(mesh_spec["shape"], "$.mesh.shape")
        if shape not in _MESH_SHAPES:
            raise ConfigError(f"$.mesh.shape: unknown shape '{shape}'")
        missing = _MESH_SHAPES[shape] - set(mesh_spec)
        extra = set(mesh_spec) - _MESH_SHAPES[shape] - {"shape"}
        if missing:
            raise ConfigError(f"$.mesh: shape '{shape}' needs keys {sorted(missing)}")
        if extra:
            raise ConfigError(f"$.mesh: keys {sorted(extra)} do not belong to '{shape}'")
        params = {k: _number(v, f"$.mesh.{k}") for k, v in mesh_spec.items()
                  if k != "shape"}
        try:
            mesh = generate_mesh(shape, **params)
        except InvalidModelError as exc:
            raise ConfigError(f"$.mesh: {exc}") from None

    regions_spec = doc["regions"]
    if not isinstance(regions_spec, list) or not regions_spec:
        raise ConfigError("$.regions: expected a non-empty array")
    materials: dict[int, Material] = {}
    rheologies: dict[int, Rheology] = {}
    for i, rspec in enumerate(regions_spec):
        path = f"$.regions[{i}]"
        _check_keys(rspec, path, required={"material": 1, "rheology": 1})
        mspec = rspec["material"]
        _check_keys(mspec, path + ".material", required={"E": 1, "nu": 1})
        try:
            materials[i] = Material(E=_number(mspec["E"], path + ".material.E"),
                                    nu=_number(mspec["nu"], path + ".material.nu"))
        except InvalidModelError as exc:
            raise ConfigError(f"{path}.material: {exc}") from None
        hspec = rspec["rheology"]
        _check_keys(hspec, path + ".rheology", required={"preset": 1},
                    optional={k: 1 for k in _PRESET_PARAMS})
        params = {k: _number(v, f"{path}.rheology.{k}")
                  for k, v in hspec.items() if k != "preset"}
        try:
            rheologies[i] = rheology_preset(_string(hspec["preset"],
                                                    path + ".rheology.preset"), **params)
        except InvalidModelError as exc:
            raise ConfigError(f"{path}.rheology: {exc}") from None
    for rid in mesh.region_ids():
        if int(rid) not in materials:
            raise ConfigError(f"$.regions: mesh region {rid} has no entry")

    programs: dict[str, LoadProgram] = {}
    for name, pts in (doc.get("programs") or {}).items():
        path = f"$.programs.{name}"
        if not isinstance(pts, list):
            raise ConfigError(f"{path}: expected an array of [t, value] pairs")
        try:
            programs[name] = LoadProgram([_point(p, f"{path}[{i}]")
                                          for i, p in enumerate(pts)])
        except InvalidModelError as exc:
            raise ConfigError(f"{path}: {exc}") from None

    bc_groups: list[BCGroup] = []
    groups_spec = doc["bc_groups"]
    if not isinstance(groups_spec, dict):
        raise ConfigError("$.bc_groups: expected an object keyed by group name")
    iface_names = {n for pair in (doc.get("interfaces") or []) for n in pair}
    for name, gspec in groups_spec.items():
        path = f"$.bc_groups.{name}"
        if name not in mesh.group_names:
            raise ConfigError(f"{path}: mesh has no group of this name")
        if "contact" in gspec:
            _check_keys(gspec, path, required={"contact": 1})
            cspec = gspec["contact"]
            _check_keys(cspec, path + ".contact",
                        required={"obstacle_point": 1, "obstacle_normal": 1})
            bc_groups.append(BCGroup(
                name=name, contact=True,
                obstacle_point=_point(cspec["obstacle_point"],
                                      path + ".contact.obstacle_point"),
                obstacle_normal=_point(cspec["obstacle_normal"],
                                       path + ".contact.obstacle_normal")))
            continue
        _check_keys(gspec, path, required={"x": 1, "y": 1})
        kinds, values, progs = [], [], []
        for d, dn in enumerate("xy"):
            dspec = gspec[dn]
            _check_keys(dspec, f"{path}.{dn}", required={"kind": 1, "value": 1},
                        optional={"program": 1})
            kind = _string(dspec["kind"], f"{path}.{dn}.kind")
            if kind not in (DIRICHLET, NEUMANN):
                raise ConfigError(f"{path}.{dn}.kind: must be 'dirichlet' or 'neumann'")
            prog = _string(dspec.get("program", ""), f"{path}.{dn}.program")
            if prog and prog not in programs:
                raise ConfigError(f"{path}.{dn}.program: unknown program '{prog}'")
            kinds.append(kind)
            values.append(_number(dspec["value"], f"{path}.{dn}.value"))
            progs.append(prog)
        bc_groups.append(BCGroup(name=name, kind=tuple(kinds), value=tuple(values),
                                 program=tuple(progs)))
    defined = {g.name for g in bc_groups} | iface_names
    for gid, gname in enumerate(mesh.group_names):
        if np.any(mesh.group == gid) and gname not in defined:
            raise ConfigError(f"$.bc_groups: mesh group '{gname}' has no boundary "
                              "condition (and is not an interface)")

    interfaces = []
    for i, pair in enumerate(doc.get("interfaces") or []):
        path = f"$.interfaces[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError(f"{path}: expected [primary_group, secondary_group]")
        for n in pair:
            if _string(n, path) not in mesh.group_names:
                raise ConfigError(f"{path}: mesh has no group '{n}'")
        interfaces.append((pair[0], pair[1]))

    tspec = doc["time"]
    _check_keys(tspec, "$.time", required={"total": 1, "step": 1})
    total = _number(tspec["total"], "$.time.total")
    tau = _number(tspec["step"], "$.time.step")
    if tau <= 0 or total <= 0:
        raise ConfigError("$.time: total and step must be positive")
    ratio = total / tau
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError("$.time: total/step must be an integer")

    probes = []
    for i, pspec in enumerate(doc.get("probes") or []):
        path = f"$.probes[{i}]"
        _check_keys(pspec, path, required={"name": 1, "type": 1, "point": 1})
        kind = _string(pspec["type"], path + ".type")
        if kind not in ("boundary", "interior"):
            raise ConfigError(f"{path}.type: must be 'boundary' or 'interior'")
        probes.append(Probe(name=_string(pspec["name"], path + ".name"),
                            kind=kind, point=_point(pspec["point"], path + ".point")))
    if len({p.name for p in probes}) != len(probes):
        raise ConfigError("$.probes: probe names must be unique")

    outputs = {"timeseries": True, "ledger": True, "contact": True, "snapshots": None}
    ospec = doc.get("outputs")
    if ospec is not None:
        _check_keys(ospec, "$.outputs", required={},
                    optional={"timeseries": 1, "ledger": 1, "contact": 1, "snapshots": 1})
        for key in ("timeseries", "ledger", "contact"):
            if key in ospec:
                if not isinstance(ospec[key], bool):
                    raise ConfigError(f"$.outputs.{key}: expected true/false")
                outputs[key] = ospec[key]
        if "snapshots" in ospec and ospec["snapshots"] is not None:
            sspec = ospec["snapshots"]
            _check_keys(sspec, "$.outputs.snapshots", required={"steps": 1},
                        optional={"grid": 1, "points": 1})
            steps = sspec["steps"]
            if not isinstance(steps, list) or not steps:
                raise ConfigError("$.outputs.snapshots.steps: expected a step array")
            snap = {"steps": [_integer(s, "$.outputs.snapshots.steps[]")
                              for s in steps]}
            if "grid" in sspec:
                g = sspec["grid"]
                _check_keys(g, "$.outputs.snapshots.grid", required={"nx": 1, "ny": 1})
                snap["grid"] = (_integer(g["nx"], "...nx"), _integer(g["ny"], "...ny"))
            elif "points" in sspec:
                snap["points"] = [_point(p, f"$.outputs.snapshots.points[{i}]")
                                  for i, p in enumerate(sspec["points"])]
            else:
                raise ConfigError("$.outputs.snapshots: needs 'grid' or 'points'")
            outputs["snapshots"] = snap

    ngauss, kv_mode = 8, "auto"
    sspec = doc.get("solver")
    if sspec is not None:
        _check_keys(sspec, "$.solver", required={},
                    optional={"ngauss": 1, "kv_mode": 1})
        if "ngauss" in sspec:
            ngauss = _integer(sspec["ngauss"], "$.solver.ngauss")
            if not (2 <= ngauss <= 64):
                raise ConfigError("$.solver.ngauss: expected 2..64")
        if "kv_mode" in sspec:
            kv_mode = _string(sspec["kv_mode"], "$.solver.kv_mode")
            if kv_mode not in ("auto", "general", "dedicated"):
                raise ConfigError("$.solver.kv_mode: 'auto', 'general' or 'dedicated'")

    u0 = None
    if "initial_displacement" in doc:
        ux, uy = _point(doc["initial_displacement"], "$.initial_displacement")
        u0 = np.zeros(2 * mesh.n_nodes)
        u0[0::2], u0[1::2] = ux, uy
        for rid, rheo in rheologies.items():
            if not rheo.is_kelvin_voigt_family():
                raise ConfigError("$.initial_displacement: only supported for "
                                  "Kelvin-Voigt family rheologies")

    diags = validate_model(mesh, materials, bc_groups)
    if diags:
        raise ConfigError("model validation failed: " + "; ".join(diags))

    return Case(mesh=mesh, materials=materials, rheologies=rheologies,
                bc_groups=bc_groups, programs=programs, tau=tau, total_time=total,
                probes=probes, interfaces=interfaces, u0=u0, outputs=outputs,
                ngauss=ngauss, kv_mode=kv_mode,
                description=doc.get("description", ""))


def load_case(path) -> Case:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def _write_timeseries(path: Path, result: TimeLoopResult):
    with open(path, "w") as fh:
        fh.write("step,time,probe,ux,uy,vx,vy,px,py\n")
        for k in range(result.n_steps()):
            t = result.times[k]
            for pr in result.probes:
                if pr.kind != "boundary":
                    continue
                st = result.boundary_series[pr.name]
                row = [str(k + 1), _fmt(t), pr.name]
                row += [_fmt(x) for x in st["u"][k]]
                row += [_fmt(x) for x in st["v"][k]]
                row += [_fmt(x) for x in st["p"][k]]
                fh.write(",".join(row) + "\n")


def _write_interior(path: Path, result: TimeLoopResult):
    rows = [pr for pr in result.probes if pr.kind == "interior"]
    if not rows:
        return
    with open(path, "w") as fh:
        fh.write("step,time,probe,x,y,ux,uy,sxx,syy,sxy\n")
        for k in range(result.n_steps()):
            t = result.times[k]
            for pr in rows:
                st = result.interior_series[pr.name]
                row = [str(k + 1), _fmt(t), pr.name, _fmt(pr.point[0]), _fmt(pr.point[1])]
                row += [_fmt(x) for x in st["u"][k]]
                row += [_fmt(x) for x in st["sigma"][k]]
                fh.write(",".join(row) + "\n")


def _write_ledger(path: Path, records):
    with open(path, "w") as fh:
        fh.write("step,time,stored,dissipated,work,slack\n")
        for r in records:
            fh.write(f"{r.step},{_fmt(r.time)},{_fmt(r.stored)},{_fmt(r.dissipated)},"
                     f"{_fmt(r.work)},{_fmt(r.slack)}\n")


def _write_contact(path: Path, result: TimeLoopResult):
    with open(path, "w") as fh:
        fh.write("step,time,node,arc_coord,vn,un,tn,active\n")
        for r in result.contact_rows:
            fh.write(f"{r['step']},{_fmt(r['time'])},{r['node']},{_fmt(r['arc_coord'])},"
                     f"{_fmt(r['vn'])},{_fmt(r['un'])},{_fmt(r['tn'])},"
                     f"{1 if r['active'] else 0}\n")


def _snapshot_points(case: Case, spec) -> np.ndarray:
    if "points" in spec:
        return np.array(spec["points"], dtype=float)
    nx, ny = spec["grid"]
    lo = case.mesh.nodes.min(axis=0)
    hi = case.mesh.nodes.max(axis=0)
    xs = lo[0] + (hi[0] - lo[0]) * (np.arange(nx) + 0.5) / nx
    ys = lo[1] + (hi[1] - lo[1]) * (np.arange(ny) + 0.5) / ny
    return np.array([(x, y) for x in xs for y in ys])


def _write_snapshots(outdir: Path, case: Case, result: TimeLoopResult):
    spec = case.outputs.get("snapshots")
    if not spec:
        return
    pts = _snapshot_points(case, spec)
    # keep strictly interior points, away from the boundary
    from .stepping import _distance_to_boundary, _point_in_region
    keep = []
    for p in pts:
        for s in result.regions:
            if (_point_in_region(p, s.reg)
                    and _distance_to_boundary(p, s.reg) > 0.05 * s.reg.lengths.min()):
                keep.append(p)
                break
    pts = np.array(keep)
    if not len(pts):
        return
    for step in spec["steps"]:
        fields = postprocess.snapshot_fields(result, pts, step=step)
        with open(outdir / f"snapshot_{step}.csv", "w") as fh:
            fh.write("x,y,ux,uy,sxx,syy,sxy,diss\n")
            for i, p in enumerate(pts):
                row = [_fmt(p[0]), _fmt(p[1])]
                row += [_fmt(x) for x in fields["u"][i]]
                row += [_fmt(x) for x in fields["sigma"][i]]
                row.append(_fmt(fields["dissipated"][i]))
                fh.write(",".join(row) + "\n")


def run_case(case: Case, outdir, tau_override: float | None = None) -> TimeLoopResult:
    """Execute a case and write its output files into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tau = case.tau if tau_override is None else float(tau_override)
    ratio = case.total_time / tau
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError("total time / tau must be an integer")

    result = run_time_loop(case.mesh, case.materials, case.rheologies,
                           case.bc_groups, tau=tau, total_time=case.total_time,
                           programs=case.programs, probes=case.probes,
                           interfaces=case.interfaces, u0=case.u0,
                           ngauss=case.ngauss, kv_mode=case.kv_mode)

    if case.outputs.get("timeseries", True):
        _write_timeseries(outdir / "timeseries.csv", result)
        _write_interior(outdir / "interior.csv", result)
    if case.outputs.get("ledger", True):
        if all(s.rheo.is_kelvin_voigt_family() for s in result.regions):
            records = postprocess.energy_balance(result)
            result.energy = records
            _write_ledger(outdir / "ledger.csv", records)
    if case.outputs.get("contact", True) and result.contact_rows:
        _write_contact(outdir / "contact.csv", result)
    _write_snapshots(outdir, case, result)
    return result


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="viscobem",
                                 description="2D quasistatic visco-elastic BEM solver")
    sub = ap.add_subparsers(dest="command", required=True)

    runp = sub.add_parser("run", help="run a case configuration")
    runp.add_argument("--config", required=True)
    runp.add_argument("--out", required=True)
    runp.add_argument("--tau", type=float, default=None,
                      help="override the configured time step")

    meshp = sub.add_parser("mesh", help="generate a mesh file")
    meshsub = meshp.add_subparsers(dest="shape", required=True)
    rect = meshsub.add_parser("rectangle")
    rect.add_argument("--length", type=float, required=True)
    rect.add_argument("--height", type=float, required=True)
    rect.add_argument("--nx", type=int, required=True)
    rect.add_argument("--ny", type=int, required=True)
    rect.add_argument("--out", required=True)
    disk = meshsub.add_parser("quarter_disk")
    disk.add_argument("--radius", type=float, required=True)
    disk.add_argument("--contact-angle", type=float, required=True)
    disk.add_argument("--n-contact", type=int, required=True)
    disk.add_argument("--n-free", type=int, required=True)
    disk.add_argument("--n-straight", type=int, required=True)
    disk.add_argument("--out", required=True)

    valp = sub.add_parser("validate", help="check a case configuration")
    valp.add_argument("--config", required=True)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            case = load_case(args.config)
            outdir = Path(args.out)
            try:
                run_case(case, outdir, tau_override=args.tau)
            except ConfigError:
                raise
            except Exception as exc:
                outdir.mkdir(parents=True, exist_ok=True)
                (outdir / "error.txt").write_text(
                    f"{type(exc).__name__}: {exc}\n\n{traceback.format_exc()}")
                print(f"solver error: {exc}", file=sys.stderr)
                return 3
            return 0
        if args.command == "mesh":
            if args.shape == "rectangle":
                mesh = generate_mesh("rectangle", length=args.length,
                                     height=args.height, nx=args.nx, ny=args.ny)
            else:
                mesh = generate_mesh("quarter_disk", radius=args.radius,
                                     contact_angle_deg=args.contact_angle,
                                     n_contact=args.n_contact, n_free=args.n_free,
                                     n_straight=args.n_straight)
            mesh.write_text(args.out)
            print(f"wrote {mesh.n_nodes} nodes / {mesh.n_elems} elements to {args.out}")
            return 0
        if args.command == "validate":
            load_case(args.config)
            print("configuration is valid")
            return 0
    except (ConfigError, InvalidModelError, UnsupportedConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
