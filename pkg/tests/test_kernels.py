import numpy as np
import pytest

import viscobem as vb
from viscobem.kernels import SingularPointError, kelvin_DS, kelvin_T, kelvin_U

MAT = vb.Material(E=2.5, nu=0.25)  # mu = 1


def test_displacement_kernel_reference_values():
    U = kelvin_U((1.0, 0.0), (0.0, 0.0), MAT)
    assert U[0, 0] == pytest.approx(1.0 / (6.0 * np.pi), rel=1e-14)
    assert U[1, 1] == 0.0
    assert U[0, 1] == 0.0


def test_traction_kernel_reference_values():
    T = kelvin_T((1.0, 0.0), (0.0, 0.0), (1.0, 0.0), MAT)
    assert T[0, 0] == pytest.approx(-2.5 / (3.0 * np.pi), rel=1e-14)
    assert T[1, 1] == pytest.approx(-0.5 / (3.0 * np.pi), rel=1e-14)
    assert T[0, 1] == 0.0 and T[1, 0] == 0.0


def test_displacement_kernel_symmetry():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, xi = rng.normal(size=2), rng.normal(size=2)
        U1 = kelvin_U(x, xi, MAT)
        U2 = kelvin_U(xi, x, MAT)
        assert np.allclose(U1, U2.T, rtol=0, atol=1e-15)
        assert np.allclose(U1, U1.T, rtol=0, atol=1e-15)


def test_displacement_kernel_log_scaling():
    # scaling both points adds a constant to the diagonal only
    x, xi = np.array([0.7, -0.2]), np.array([-0.1, 0.4])
    lam = 3.7
    shift = -(3 - 4 * MAT.nu) * np.log(lam) / (8 * np.pi * MAT.mu * (1 - MAT.nu))
    U1 = kelvin_U(x, xi, MAT)
    U2 = kelvin_U(lam * x, lam * xi, MAT)
    assert np.allclose(U2, U1 + shift * np.eye(2), rtol=0, atol=1e-14)


def test_traction_kernel_inverse_distance_homogeneity():
    x, xi, n = np.array([0.3, 0.8]), np.array([-0.4, 0.1]), np.array([0.6, 0.8])
    T1 = kelvin_T(x, xi, n, MAT)
    T2 = kelvin_T(xi + 2 * (x - xi), xi, n, MAT)
    assert np.allclose(T2, 0.5 * T1, rtol=1e-14, atol=0)


def test_traction_kernel_tangent_case_is_antisymmetric():
    # normal orthogonal to the connecting line: dr/dn = 0, only the
    # antisymmetric part survives
    T = kelvin_T((1.0, 0.0), (0.0, 0.0), (0.0, 1.0), MAT)
    assert T[0, 0] == 0.0 and T[1, 1] == 0.0
    assert T[0, 1] == pytest.approx(-T[1, 0], rel=1e-14)
    expect = -(1 - 2 * MAT.nu) / (4 * np.pi * (1 - MAT.nu))
    assert T[1, 0] == pytest.approx(expect * 1.0, rel=1e-13)


def _contour_integral(xi, center, radius, n_pts=2000):
    th = np.linspace(0, 2 * np.pi, n_pts, endpoint=False)
    acc = np.zeros((2, 2))
    w = radius * 2 * np.pi / n_pts
    for a in th:
        x = center + radius * np.array([np.cos(a), np.sin(a)])
        n = np.array([np.cos(a), np.sin(a)])
        acc += kelvin_T(x, xi, n, MAT) * w
    return acc


def test_free_term_contour_identity():
    center = np.array([0.5, -0.1])
    inside = _contour_integral(center + np.array([0.2, 0.3]), center, 1.3)
    assert np.abs(inside + np.eye(2)).max() < 1e-8
    outside = _contour_integral(np.array([4.0, 4.0]), center, 1.3)
    assert np.abs(outside).max() < 1e-8


def test_rotation_field_annihilated_on_contour():
    # rigid rotation has zero traction: contour integral of T against it
    # vanishes, which pins the orientation of the antisymmetric term
    center = np.array([0.0, 0.0])
    xi = np.array([0.3, 0.2])
    n_pts, radius = 4000, 1.1
    th = np.linspace(0, 2 * np.pi, n_pts, endpoint=False)
    acc = np.zeros(2)
    w = radius * 2 * np.pi / n_pts
    for a in th:
        x = center + radius * np.array([np.cos(a), np.sin(a)])
        n = np.array([np.cos(a), np.sin(a)])
        rot = np.array([-x[1], x[0]])
        acc += kelvin_T(x, xi, n, MAT) @ rot * w
    # free term: + I . rot(xi)
    assert np.abs(acc + np.array([-xi[1], xi[0]])).max() < 1e-8


def test_block_matrix_of_displacement_kernels_is_symmetric():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(6, 2))
    B = np.zeros((12, 12))
    for i in range(6):
        for j in range(6):
            if i != j:
                B[2 * i:2 * i + 2, 2 * j:2 * j + 2] = kelvin_U(pts[j], pts[i], MAT)
    assert np.abs(B - B.T).max() < 1e-14


def test_singular_evaluation_raises():
    with pytest.raises(SingularPointError):
        kelvin_U((1.0, 1.0), (1.0, 1.0), MAT)
    with pytest.raises(SingularPointError):
        kelvin_T((0.0, 0.0), (0.0, 0.0), (1.0, 0.0), MAT)
    with pytest.raises(ValueError):
        kelvin_T((1.0, 0.0), (0.0, 0.0), (2.0, 0.0), MAT)  # non-unit normal


def test_stress_kernels_match_differentiated_point_force():
    # sigma at y from a point force F at z, computed by finite differences
    # of the displacement kernel, equals the D kernel contracted with F
    # (Maxwell-Betti pairing of the two-point fields)
    rng = np.random.default_rng(2)
    mat = vb.Material(E=200.0, nu=0.3)
    h = 1e-6
    checked = 0
    while checked < 20:
        z = rng.normal(size=2) * 2.0
        y = rng.normal(size=2) * 2.0
        if np.hypot(*(y - z)) < 0.5:
            continue
        checked += 1
        F = rng.normal(size=2)
        grad = np.zeros((2, 2))
        for d in range(2):
            dp = np.zeros(2)
            dp[d] = h
            up = kelvin_U(y + dp, z, mat).T @ F
            um = kelvin_U(y - dp, z, mat).T @ F
            grad[:, d] = (up - um) / (2 * h)
        eps = 0.5 * (grad + grad.T)
        sig = mat.lam * np.trace(eps) * np.eye(2) + 2 * mat.mu * eps
        D, _ = kelvin_DS(z, y, (1.0, 0.0), mat)  # D does not use the normal
        got = D @ F
        want = np.array([sig[0, 0], sig[1, 1], sig[0, 1]])
        assert np.abs(got - want).max() < 1e-6 * max(1.0, np.abs(want).max())
