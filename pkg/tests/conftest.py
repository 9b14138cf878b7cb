import numpy as np
import pytest

import viscobem as vb

# Table-style benchmark data reused across the suite
BAR = dict(E=11.0e3, nu=0.0, L=800.0, h=100.0, p=5.0, chi=45.454545,
           t_removal=400.0, T=800.0)
DISK = dict(E=70.0, nu=0.35, r=0.75, phi=13.5, pn=-250.0, t_peak=250.0,
            T=500.0, tau=2.5)


def bar_mesh(nx=80, ny=10):
    return vb.rectangle_mesh(BAR["L"], BAR["h"], nx, ny)


def bar_bcs(program="load"):
    return [
        vb.BCGroup("left", ("dirichlet", "dirichlet"), (0.0, 0.0)),
        vb.BCGroup("right", ("neumann", "neumann"), (BAR["p"], 0.0), program=program),
        vb.BCGroup("top", ("neumann", "neumann"), (0.0, 0.0)),
        vb.BCGroup("bottom", ("neumann", "neumann"), (0.0, 0.0)),
    ]


def creep_program():
    tr, T = BAR["t_removal"], BAR["T"]
    return vb.LoadProgram([(0.0, 0.0), (0.0, 1.0), (tr, 1.0), (tr, 0.0), (T, 0.0)])


def creep_exact(t, with_removal=True):
    """Uniaxial Kelvin-Voigt tip displacement of the bar benchmark."""
    p, E, chi, L, tr = BAR["p"], BAR["E"], BAR["chi"], BAR["L"], BAR["t_removal"]
    t = np.asarray(t, dtype=float)
    eps_on = (p / E) * (1.0 - np.exp(-t / chi))
    if not with_removal:
        return eps_on * L
    eps_peak = (p / E) * (1.0 - np.exp(-tr / chi))
    return np.where(t <= tr, eps_on, eps_peak * np.exp(-(t - tr) / chi)) * L


def disk_mesh():
    return vb.quarter_disk_mesh(DISK["r"], DISK["phi"], 60, 170, 20)


def disk_bcs():
    return [
        vb.BCGroup("contact_arc", contact=True, obstacle_point=(0.0, 0.0),
                   obstacle_normal=(0.0, 1.0)),
        vb.BCGroup("free_arc", ("neumann", "neumann"), (0.0, 0.0)),
        vb.BCGroup("top", ("neumann", "neumann"), (0.0, DISK["pn"]), program="ramp"),
        vb.BCGroup("symmetry", ("dirichlet", "neumann"), (0.0, 0.0)),
    ]


def disk_program():
    tp, T = DISK["t_peak"], DISK["T"]
    return vb.LoadProgram([(0.0, 0.0), (tp, 1.0), (tp, 0.0), (T, 0.0)])


@pytest.fixture(scope="session")
def bar_region():
    """Assembled 180-element bar region (elastic material data)."""
    mesh = bar_mesh()
    mat = vb.Material(E=BAR["E"], nu=BAR["nu"])
    return mesh, mat, vb.assemble_region(mesh, 0, mat)


@pytest.fixture(scope="session")
def creep_run_tau1():
    """Example creep run, tau = 1 (shared by accuracy and energy tests)."""
    mesh = bar_mesh()
    mat = vb.Material(E=BAR["E"], nu=BAR["nu"])
    kv = vb.rheology_preset("kelvin_voigt", chi=BAR["chi"])
    return vb.run_time_loop(
        mesh, mat, kv, bar_bcs(), tau=1.0, total_time=BAR["T"],
        programs={"load": creep_program()},
        probes=[vb.Probe("tip", "boundary", (BAR["L"], BAR["h"] / 2)),
                vb.Probe("centroid", "interior", (BAR["L"] / 2, BAR["h"] / 2))])


@pytest.fixture(scope="session")
def disk_runs():
    """Contact benchmark runs for the three relaxation times."""
    mesh = disk_mesh()
    mat = vb.Material(E=DISK["E"], nu=DISK["nu"])
    out = {}
    for chi in (0.0, 22.5, 45.0):
        kv = vb.rheology_preset("kelvin_voigt", chi=chi)
        out[chi] = vb.run_time_loop(
            mesh, mat, kv, disk_bcs(), tau=DISK["tau"], total_time=DISK["T"],
            programs={"ramp": disk_program()},
            probes=[vb.Probe("edge_mid", "boundary", (0.0, DISK["r"]))])
    return out
