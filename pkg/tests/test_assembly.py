import numpy as np
import pytest
from scipy.integrate import quad

import viscobem as vb
from viscobem.assembly import (MixedSystem, UnsupportedConfigurationError,
                               assemble_region, boundary_mass, element_influence)
from viscobem.kernels import kelvin_T, kelvin_U

from conftest import BAR, bar_bcs, bar_mesh

MAT = vb.Material(E=2.5, nu=0.25)  # mu = 1


# --- single-element influence -------------------------------------------------

def _quad_oracle(point, elem_nodes, normal, mat, n=4000):
    """Composite midpoint quadrature of the scalar kernels (independent path)."""
    a, b = np.asarray(elem_nodes, dtype=float)
    L = np.hypot(*(b - a))
    ss = (np.arange(n) + 0.5) / n
    h = np.zeros((2, 4))
    g = np.zeros((2, 4))
    for s in ss:
        x = a + s * (b - a)
        T = kelvin_T(x, point, normal, mat)
        U = kelvin_U(x, point, mat)
        for loc, N in ((0, 1 - s), (1, s)):
            h[:, 2 * loc:2 * loc + 2] += T * N * L / n
            g[:, 2 * loc:2 * loc + 2] += U * N * L / n
    return h, g


def test_far_element_matches_midpoint_kernel():
    # the midpoint x shape-weight approximation of the weighted integral is
    # first order in length/distance, so "far" must be taken seriously
    L = 2e-6
    elem = np.array([[0.0, 0.0], [L, 0.0]])
    normal = np.array([0.0, -1.0])
    point = np.array([3.0, 4.0])
    h, g = element_influence(point, elem, normal, MAT)
    mid = elem.mean(axis=0)
    Tm = kelvin_T(mid, point, normal, MAT) * L / 2
    Um = kelvin_U(mid, point, MAT) * L / 2
    for loc in range(2):
        assert np.abs(h[:, 2 * loc:2 * loc + 2] - Tm).max() < 1e-6 * np.abs(Tm).max()
        assert np.abs(g[:, 2 * loc:2 * loc + 2] - Um).max() < 1e-6 * np.abs(Um).max()


@pytest.mark.parametrize("point", [(2.0, 0.3), (0.5, 0.7), (0.52, 0.11), (-1.0, -0.4)])
def test_regular_influence_against_quadrature_oracle(point):
    elem = np.array([[0.0, 0.0], [1.0, 0.0]])
    normal = np.array([0.0, -1.0])
    h, g = element_influence(np.array(point), elem, normal, MAT)
    ho, go = _quad_oracle(np.array(point), elem, normal, MAT)
    assert np.abs(h - ho).max() < 1e-6 * max(np.abs(ho).max(), 1e-3)
    assert np.abs(g - go).max() < 1e-6 * max(np.abs(go).max(), 1e-3)


@pytest.mark.parametrize("end", [0, 1])
def test_singular_displacement_integral_matches_log_antiderivative(end):
    elem = np.array([[0.2, -0.1], [1.1, 0.6]])
    d = elem[1] - elem[0]
    L = np.hypot(*d)
    normal = np.array([d[1], -d[0]]) / L
    point = elem[end]
    _, g = element_influence(point, elem, normal, MAT, singular_end=end)
    # oracle: adaptive quadrature of the integrable log kernel
    go = np.zeros((2, 4))
    for i in range(2):
        for j in range(2):
            for loc, N in ((0, lambda s: 1 - s), (1, lambda s: s)):
                f = lambda s: kelvin_U(elem[0] + s * d, point, MAT)[i, j] * N(s) * L
                go[i, 2 * loc + j] = quad(f, 1e-13, 1.0, limit=400)[0]
    assert np.abs(g - go).max() < 1e-9 * np.abs(go).max()


@pytest.mark.parametrize("end", [0, 1])
def test_singular_traction_far_part_matches_cpv_oracle(end):
    elem = np.array([[0.2, -0.1], [1.1, 0.6]])
    d = elem[1] - elem[0]
    L = np.hypot(*d)
    normal = np.array([d[1], -d[0]]) / L
    point = elem[end]
    h, _ = element_influence(point, elem, normal, MAT, singular_end=end)
    near = slice(2 * end, 2 * end + 2)
    far = slice(2 * (1 - end), 2 * (1 - end) + 2)
    assert np.all(h[:, near] == 0.0)  # deferred to the rigid-body diagonal
    ho = np.zeros((2, 2))
    Nfar = (lambda s: s) if end == 0 else (lambda s: 1 - s)
    for i in range(2):
        for j in range(2):
            f = lambda s: kelvin_T(elem[0] + s * d, point, normal, MAT)[i, j] \
                * Nfar(s) * L
            ho[i, j] = quad(f, 1e-12, 1.0 - 1e-12, limit=400)[0]
    assert np.abs(h[:, far] - ho).max() < 1e-8 * max(np.abs(ho).max(), 1e-3)


def test_mirror_symmetry_flips_off_diagonal_blocks():
    elem = np.array([[0.1, 0.2], [0.9, 0.5]])
    d = elem[1] - elem[0]
    normal = np.array([d[1], -d[0]]) / np.hypot(*d)
    point = np.array([2.0, 1.3])
    flip = np.diag([1.0, -1.0])
    h1, g1 = element_influence(point, elem, normal, MAT)
    h2, g2 = element_influence(flip @ point, elem @ flip, (flip @ normal), MAT)
    for loc in range(2):
        b1 = g1[:, 2 * loc:2 * loc + 2]
        b2 = g2[:, 2 * loc:2 * loc + 2]
        assert np.allclose(b2, flip @ b1 @ flip, rtol=1e-12, atol=1e-15)
        c1 = h1[:, 2 * loc:2 * loc + 2]
        c2 = h2[:, 2 * loc:2 * loc + 2]
        assert np.allclose(c2, flip @ c1 @ flip, rtol=1e-12, atol=1e-15)


# --- assembled operators -------------------------------------------------------

def test_unit_square_matrix_sizes():
    mesh = vb.rectangle_mesh(1.0, 1.0, 1, 1)
    reg = assemble_region(mesh, 0, MAT)
    assert reg.H.shape == (8, 8)
    assert reg.G.shape == (8, 8)
    assert reg.Ge.shape == (8, 16)


def test_rigid_translations_annihilated(bar_region):
    _, _, reg = bar_region
    n = reg.n_nodes
    scale = np.abs(reg.H).max()
    for d in range(2):
        t = np.zeros(2 * n)
        t[d::2] = 1.0
        assert np.abs(reg.H @ t).max() / scale < 1e-10


def test_rigid_rotation_annihilated(bar_region):
    # rotations are not enforced by the diagonal completion, so this checks
    # the actual traction-kernel integration
    _, _, reg = bar_region
    rot = np.zeros(2 * reg.n_nodes)
    rot[0::2] = -reg.nodes[:, 1]
    rot[1::2] = reg.nodes[:, 0]
    assert np.abs(reg.H @ rot).max() < 1e-9 * np.abs(reg.H).max() * np.abs(rot).max()


def test_smooth_point_diagonal_is_half_identity():
    # equal-length collinear neighbours: the principal-value parts cancel
    # pairwise and the completed diagonal equals the smooth free term
    mesh = vb.rectangle_mesh(1.0, 1.0, 4, 4)
    reg = assemble_region(mesh, 0, MAT)
    mid = reg.nodes[:, 1] == 0.0
    interior = np.nonzero(mid & (reg.nodes[:, 0] > 0.0) & (reg.nodes[:, 0] < 1.0))[0]
    nd = int(interior[0])
    block = reg.H[2 * nd:2 * nd + 2, 2 * nd:2 * nd + 2]
    assert np.abs(block - 0.5 * np.eye(2)).max() < 1e-8


def test_corner_diagonal_differs_from_half_identity():
    mesh = vb.rectangle_mesh(1.0, 1.0, 4, 4)
    reg = assemble_region(mesh, 0, MAT)
    corner = int(np.nonzero((reg.nodes == 0.0).all(axis=1))[0][0])
    block = reg.H[2 * corner:2 * corner + 2, 2 * corner:2 * corner + 2]
    assert np.abs(block - 0.5 * np.eye(2)).max() > 1e-3


def test_quadrature_convergence_on_benchmark_meshes():
    for mesh, mat in ((vb.rectangle_mesh(800.0, 100.0, 40, 5),
                       vb.Material(E=11.0e3, nu=0.0)),
                      (vb.quarter_disk_mesh(0.75, 13.5, 30, 85, 10),
                       vb.Material(E=70.0, nu=0.35))):
        r8 = assemble_region(mesh, 0, mat, ngauss=8)
        r16 = assemble_region(mesh, 0, mat, ngauss=16)
        assert np.abs(r8.H - r16.H).max() < 1e-9 * np.abs(r16.H).max()
        assert np.abs(r8.Ge - r16.Ge).max() < 1e-9 * np.abs(r16.Ge).max()


# --- mixed system ---------------------------------------------------------------

def _patch_system(nx=80, ny=10):
    mesh = bar_mesh(nx, ny)
    mat = vb.Material(E=BAR["E"], nu=BAR["nu"])
    reg = assemble_region(mesh, 0, mat)
    bcs = {g.name: g for g in bar_bcs(program="")}
    return mesh, reg, MixedSystem(reg, bcs, mesh.group_names)


def test_patch_test_boundary_fields():
    _, reg, ms = _patch_system()
    w, g = ms.sample_data(0.0)
    x = ms.solve(ms.rhs(w, g))
    v, te = ms.reconstruct(x, w, g)
    exact = BAR["p"] * reg.nodes[:, 0] / BAR["E"]
    assert np.abs(v[0::2] - exact).max() < 1e-6 * exact.max()
    assert np.abs(v[1::2]).max() < 1e-6 * exact.max()
    assert np.abs(ms.A @ x - ms.rhs(w, g)).max() < 1e-10 * np.abs(ms.rhs(w, g)).max()


def test_patch_solution_mesh_refinement_invariance():
    # the exact field is linear, so refining the mesh must not move the
    # boundary solution
    _, reg1, ms1 = _patch_system(40, 5)
    _, reg2, ms2 = _patch_system(80, 10)
    sols = []
    for reg, ms in ((reg1, ms1), (reg2, ms2)):
        w, g = ms.sample_data(0.0)
        v, _ = ms.reconstruct(ms.solve(ms.rhs(w, g)), w, g)
        sols.append((reg.nodes, v))
    nodes1, v1 = sols[0]
    nodes2, v2 = sols[1]
    scale = np.abs(v2).max()
    for i, p in enumerate(nodes1):
        j = int(np.argmin(np.hypot(*(nodes2 - p).T)))
        assert np.abs(v1[2 * i:2 * i + 2] - v2[2 * j:2 * j + 2]).max() < 1e-8 * scale


def test_all_dirichlet_system_is_displacement_influence_matrix():
    mesh = vb.rectangle_mesh(1.0, 1.0, 2, 2)
    reg = assemble_region(mesh, 0, MAT)
    bcs = {name: vb.BCGroup(name, ("dirichlet", "dirichlet"), (0.0, 0.0))
           for name in mesh.group_names}
    ms = MixedSystem(reg, bcs, mesh.group_names)
    # every unknown is a traction; A's columns are nodal G columns
    assert ms.A.shape == (16, 16)
    G = reg.G
    cols = sorted(ms.t_col.items())
    for (nd, d), col in cols:
        assert np.allclose(ms.A[:, col], G[:, 2 * nd + d], rtol=0, atol=1e-15)


def test_mixed_bar_unknown_count():
    _, reg, ms = _patch_system(8, 2)
    assert ms.A.shape == (2 * reg.n_nodes, 2 * reg.n_nodes)


def test_pure_neumann_rejected():
    mesh = vb.rectangle_mesh(1.0, 1.0, 2, 2)
    reg = assemble_region(mesh, 0, MAT)
    bcs = {name: vb.BCGroup(name, ("neumann", "neumann"), (0.0, 0.0))
           for name in mesh.group_names}
    with pytest.raises(UnsupportedConfigurationError, match="Neumann"):
        MixedSystem(reg, bcs, mesh.group_names)


def test_boundary_mass_integrates_linear_product():
    mesh = vb.rectangle_mesh(2.0, 1.0, 3, 2)
    reg = assemble_region(mesh, 0, MAT)
    M = boundary_mass(reg)
    # t = const (1, 0) elementwise, v = const (1, 0): integral = perimeter
    te = np.zeros(4 * reg.n_elems)
    te[0::4] = 1.0
    te[2::4] = 1.0
    v = np.zeros(2 * reg.n_nodes)
    v[0::2] = 1.0
    assert te @ M @ v == pytest.approx(6.0, rel=1e-14)
