import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contact_sublaplacian.errors import DomainError, SingularityError, UnsupportedError
from contact_sublaplacian.exterior import fd_jacobian
from contact_sublaplacian.hypersurface import (ModelHypersurface, SphericalChart, h_k,
                                               heisenberg2_frame, horizontal_frame,
                                               induced_volume_density, is_characteristic, mu_direct,
                                               quasi_contact_check, riemannian_normal_eps, rotate,
                                               sr_normal)
from contact_sublaplacian.model_spaces import ModelSpace, ambient_metric_eps, contact_form
from contact_sublaplacian.sublaplacian import chart_grid

from conftest import SPACES

spaces = st.sampled_from(SPACES)
fractions = st.floats(0.05, 0.95)
unit_dirs = st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(
    lambda v: np.linalg.norm(v) > 0.1)


def surface(model):
    return ModelHypersurface(ModelSpace(*model))


def chart_point(hs, frac, direction):
    d = np.asarray(direction[:2 * hs.n], dtype=float)
    if np.linalg.norm(d) < 1e-3:
        d = np.eye(2 * hs.n)[0]
    r = 0.2 + frac * (min(hs.radius_max - 0.2, 3.0) - 0.2)
    return r * d / np.linalg.norm(d)


# -- chart -------------------------------------------------------------------------

@given(spaces, fractions, unit_dirs)
def test_chart_roundtrip_and_on_surface(model, frac, direction):
    hs = surface(model)
    z = chart_point(hs, frac, direction)
    x = hs.from_chart(z)
    hs.check_on_surface(x)
    assert np.allclose(hs.to_chart(x), z, atol=1e-10)
    assert hs.radius(x) == pytest.approx(np.linalg.norm(z), rel=1e-12)


@given(spaces, fractions, unit_dirs)
def test_chart_jacobian_matches_fd(model, frac, direction):
    hs = surface(model)
    z = chart_point(hs, frac, direction)
    J = hs.chart_jacobian(z)
    assert np.allclose(J, fd_jacobian(hs.from_chart, z), atol=1e-8)


def test_chart_smooth_through_origin():
    for model in SPACES:
        hs = surface(model)
        z = np.zeros(2 * hs.n)
        assert np.all(np.isfinite(hs.from_chart(z)))
        assert np.all(np.isfinite(hs.chart_jacobian(z)))
        assert np.allclose(hs.to_chart(hs.from_chart(z)), 0.0)


@given(spaces, fractions, unit_dirs)
def test_closed_cometric_and_density_match_generic(model, frac, direction):
    hs = surface(model)
    z = chart_point(hs, frac, direction)
    assert np.allclose(hs.cometric_closed(z), hs.cometric(z), atol=1e-10)
    assert hs.chart_density_closed(z) == pytest.approx(float(hs.chart_density(z)), rel=1e-10)


@given(spaces, fractions, unit_dirs)
def test_radial_field_is_unit_horizontal_tangent(model, frac, direction):
    hs = surface(model)
    x = hs.from_chart(chart_point(hs, frac, direction))
    R = hs.radial_field(x)
    ms = hs.space
    assert R @ ms.metric_matrix @ R == pytest.approx(1.0, abs=1e-10)
    assert abs(ms.omega_coeffs(x) @ R) < 1e-10
    assert abs(R[hs.u_index]) < 1e-14


def test_rotate():
    assert np.array_equal(rotate(np.array([1.0, 2.0, 3.0, 4.0])), [2.0, -1.0, 4.0, -3.0])


# -- h_k ---------------------------------------------------------------------------

def test_h_k_values():
    assert h_k(ModelSpace("sphere", 1, 2.0), math.pi / 4) == pytest.approx(0.5)
    assert h_k(ModelSpace("heisenberg", 1), 3.0) == 3.0
    for k in (1e-2, 1e-3):
        assert h_k(ModelSpace("ads", 1, k), 1.5) == pytest.approx(1.5, abs=10 * k**2)


def test_h_k_domain():
    with pytest.raises(DomainError):
        h_k(ModelSpace("sphere", 1, 1.0), 4.0)
    with pytest.raises(DomainError):
        h_k(ModelSpace("heisenberg", 1), -1.0)


# -- characteristic points -----------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3])
def test_heisenberg_origin_is_characteristic(n):
    hs = surface(("heisenberg", n, None))
    assert is_characteristic(hs, np.zeros(2 * n + 1))[0]


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_sphere_poles_are_characteristic(sign):
    hs = surface(("sphere", 2, 1.0))
    p = np.zeros(6)
    p[4] = sign
    assert is_characteristic(hs, p)[0]


def test_h2_regular_point_witness():
    hs = surface(("heisenberg", 2, None))
    char, witness = is_characteristic(hs, np.array([1.0, 0, 0, 0, 0]))
    # X_2 u = x_1 / 2, every other X_i u vanishes
    assert not char
    assert witness == pytest.approx(0.25)


def test_off_surface_rejected():
    hs = surface(("heisenberg", 1, None))
    with pytest.raises(DomainError):
        is_characteristic(hs, np.array([1.0, 0.0, 0.5]))
    ads = surface(("ads", 1, 1.0))
    with pytest.raises(DomainError):
        ads.check_on_surface(np.array([0.0, 0.0, -1.0, 0.0]))


# -- normals ----------------------------------------------------------------------

def test_h2_normal_value():
    hs = surface(("heisenberg", 2, None))
    p = np.array([1.0, 0, 0, 0, 0])
    expected = np.array([0, -1.0, 0, 0, -0.5])
    assert np.allclose(sr_normal(hs, p), expected, atol=1e-14)
    assert np.allclose(sr_normal(hs, p, "generic"), expected, atol=1e-12)


@given(spaces, fractions, unit_dirs)
def test_normal_defining_conditions(model, frac, direction):
    hs = surface(model)
    x = hs.from_chart(chart_point(hs, frac, direction))
    N = sr_normal(hs, x)
    ms = hs.space
    Q = ms.metric_matrix
    assert abs(ms.omega_coeffs(x) @ N) < 1e-9
    assert N @ Q @ N == pytest.approx(1.0, abs=1e-9)
    Y = horizontal_frame(hs, x).vectors
    assert np.max(np.abs(Y @ Q @ N)) < 1e-9
    assert np.allclose(N, sr_normal(hs, x, "generic"), atol=1e-9)


def test_normal_at_characteristic_point_raises():
    hs = surface(("heisenberg", 1, None))
    with pytest.raises(SingularityError):
        sr_normal(hs, np.zeros(3))
    with pytest.raises(ValueError):
        sr_normal(hs, np.array([1.0, 0, 0]), method="magic")


def test_eps_normal_at_origin_is_reeb_direction():
    hs = surface(("heisenberg", 2, None))
    Ne = riemannian_normal_eps(hs, np.zeros(5), 0.1)
    # g_eps(eps X0, eps X0) = 1
    assert np.allclose(np.abs(Ne), 0.1 * np.eye(5)[4], atol=1e-14)


def test_eps_normal_matches_gram_schmidt_oracle():
    hs = surface(("heisenberg", 1, None))
    for x in hs.from_chart(chart_grid(hs, 20, seed=3)):
        G = ambient_metric_eps(hs.space, x, 1.0)
        grad_u = np.eye(3)[2]
        nu = np.linalg.solve(G, grad_u)
        nu /= math.sqrt(nu @ G @ nu)
        Ne = riemannian_normal_eps(hs, x, 1.0)
        assert np.allclose(Ne, np.sign(Ne @ G @ nu) * nu, atol=1e-12)


@pytest.mark.parametrize("model", SPACES[:4])
def test_eps_normal_converges_quadratically(model):
    hs = surface(model)
    x = hs.from_chart(chart_point(hs, 0.5, [1.0, 0.3, -0.2, 0.5]))
    N = sr_normal(hs, x)
    eps = np.array([0.2, 0.1, 0.05, 0.025])
    err = [np.linalg.norm(riemannian_normal_eps(hs, x, e) - N) for e in eps]
    order = np.polyfit(np.log(eps), np.log(err), 1)[0]
    assert order >= 1.8


def test_eps_must_be_positive():
    hs = surface(("heisenberg", 1, None))
    with pytest.raises(ValueError):
        riemannian_normal_eps(hs, np.array([1.0, 0, 0]), 0.0)


# -- volume --------------------------------------------------------------------------

def test_h1_density_is_half_r_squared():
    hs = surface(("heisenberg", 1, None))
    for r in (0.5, 1.0, 2.0, 3.7):
        assert induced_volume_density(hs, r, [0.3]) == 0.5 * r * r
        assert mu_direct(hs, r, [1.1]) == pytest.approx(0.5 * r * r, rel=1e-9)  # FD chart frame


def test_sphere2_density_closed_form():
    hs = surface(("sphere", 2, 1.0))
    r, phi = 1.1, [0.7, 1.9, 2.5]
    expected = math.sin(r) ** 4 * math.sin(0.7) ** 2 * math.sin(1.9)
    assert induced_volume_density(hs, r, phi) == pytest.approx(expected, rel=1e-14)


def test_h2_cartesian_density():
    hs = surface(("heisenberg", 2, None))
    assert float(hs.chart_density(np.array([2.0, 0, 0, 0]))) == pytest.approx(2.0)
    assert float(hs.chart_density(np.array([1.0, 1.0, 1.0, 1.0]))) == pytest.approx(2.0)


@given(spaces, fractions, st.lists(st.floats(0.2, math.pi - 0.2), min_size=3, max_size=3))
def test_mu_direct_matches_density(model, frac, angles):
    hs = surface(model)
    r = 0.2 + frac * (min(hs.radius_max - 0.2, 3.0) - 0.2)
    phi = angles[:2 * hs.n - 1]
    a = mu_direct(hs, r, phi)
    b = induced_volume_density(hs, r, phi)
    assert a == pytest.approx(b, rel=1e-8)


def test_spherical_chart_roundtrip():
    hs = surface(("ads", 2, 0.5))
    chart = SphericalChart(hs)
    x = chart.to_ambient(1.3, [0.4, 2.0, 5.5])
    r, phi = chart.from_ambient(x)
    assert r == pytest.approx(1.3)
    assert np.allclose(phi, [0.4, 2.0, 5.5])


def test_density_needs_right_angle_count():
    hs = surface(("heisenberg", 2, None))
    with pytest.raises(DomainError):
        induced_volume_density(hs, 1.0, [0.3])


# -- horizontal frame and quasi-contact structure -----------------------------------

@given(spaces, fractions, unit_dirs)
def test_horizontal_frame_orthonormal_in_kernel(model, frac, direction):
    hs = surface(model)
    x = hs.from_chart(chart_point(hs, frac, direction))
    Y = horizontal_frame(hs, x).vectors
    ms = hs.space
    assert np.allclose(Y @ ms.metric_matrix @ Y.T, np.eye(2 * hs.n - 1), atol=1e-10)
    zeta = contact_form(ms)
    assert max(abs(zeta(x, y)) for y in Y) < 1e-10
    assert np.max(np.abs(Y[:, hs.u_index])) < 1e-12


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 0.2))
def test_h2_frame_spans_u1_u2_u3(y):
    hs = surface(("heisenberg", 2, None))
    x = np.array([*y, 0.0])
    Y = horizontal_frame(hs, x).vectors
    U = np.array([F(x) for F in heisenberg2_frame()[:3]])
    # project each U onto span Y (Y is g-orthonormal with g Euclidean here)
    resid = U - (U @ Y.T) @ Y
    assert np.max(np.abs(resid)) <= 1e-9


@pytest.mark.parametrize("n", [2, 3])
def test_heisenberg_kernel_is_radial(n):
    hs = surface(("heisenberg", n, None))
    for x in hs.from_chart(chart_grid(hs, 10, seed=n)):
        qc = quasi_contact_check(hs, x)
        assert qc.rank == 2 * n - 2
        radial = np.concatenate([x[:2 * n], [0.0]]) / np.linalg.norm(x[:2 * n])
        assert abs(abs(qc.kernel @ radial) - 1) < 1e-10


def test_sphere2_rank_two():
    hs = surface(("sphere", 2, 1.0))
    rng = np.random.default_rng(0)
    for _ in range(100):
        z = rng.normal(size=4)
        z *= rng.uniform(0.1, math.pi - 0.1) / np.linalg.norm(z)
        qc = quasi_contact_check(hs, hs.from_chart(z))
        assert qc.rank == 2
        assert qc.radial_angle < 1e-8


def test_quasi_contact_needs_n_at_least_two():
    hs = surface(("sphere", 1, 1.0))
    with pytest.raises(UnsupportedError):
        quasi_contact_check(hs, hs.from_chart(np.array([1.0, 0.0])))


@given(spaces, fractions, unit_dirs)
def test_point_at_places_radius(model, frac, direction):
    hs = surface(model)
    z = chart_point(hs, frac, direction)
    r = float(np.linalg.norm(z))
    x = hs.point_at(r, z / r)
    assert hs.radius(x) == pytest.approx(r, rel=1e-12)
