import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contact_sublaplacian.errors import SingularityError, UnsupportedError
from contact_sublaplacian.exterior import ScalarField, VectorField
from contact_sublaplacian.hypersurface import (ModelHypersurface, heisenberg2_frame,
                                               horizontal_frame)
from contact_sublaplacian.model_spaces import ModelSpace, ambient_metric_eps
from contact_sublaplacian.sublaplacian import (DEFAULT_EPS, Method, chart_divergence, chart_grid,
                                               convergence_study, divergence_mu, eps_structure,
                                               fit_order, horizontal_gradient,
                                               laplace_beltrami_eps_apply, sublaplacian_apply,
                                               sublaplacian_chart)
from contact_sublaplacian.testfunctions import (bump_family, bump_profile, constant_function,
                                                coordinate_function, default_support,
                                                power_of_radius, radial_function)

from conftest import SPACES


def surface(model):
    return ModelHypersurface(ModelSpace(*model))


def radial_drift(hs, r):
    """div_mu R, the first-order coefficient of Delta on radial functions."""
    n, k = hs.n, hs.k
    if hs.family.value == "heisenberg":
        return 2 * n / r
    if hs.family.value == "sphere":
        return 2 * n * k / math.tan(k * r)
    return 2 * n * k / math.tanh(k * r)


# -- divergence ---------------------------------------------------------------------

def test_chart_divergence_of_linear_flux():
    A = np.array([[1.0, 2.0], [3.0, -4.0]])
    z = np.array([[0.3, 0.1], [-1.0, 2.0]])
    assert np.allclose(chart_divergence(lambda W: W @ A.T, z), np.trace(A), atol=1e-10)


def test_chart_divergence_step_must_be_positive():
    with pytest.raises(ValueError):
        chart_divergence(lambda W: W, np.zeros((1, 2)), h=0.0)


def test_divergence_of_radial_field_h2():
    hs = surface(("heisenberg", 2, None))
    R = VectorField(hs.radial_field)
    p = np.array([2.0, 0, 0, 0, 0])
    assert divergence_mu(hs, R, p) == pytest.approx(2.0, abs=1e-8)


def test_divergence_of_u1_h2():
    hs = surface(("heisenberg", 2, None))
    U1 = heisenberg2_frame()[0]
    p = np.array([1.0, 1.0, -1.0, 1.0, 0.0])
    assert divergence_mu(hs, U1, p) == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize("n,k", [(1, 1.0), (2, 0.5), (2, 2.0)])
def test_divergence_of_radial_field_sphere(n, k):
    hs = surface(("sphere", n, k))
    x = hs.point_at(math.pi / (4 * k), np.eye(2 * n)[0])
    assert divergence_mu(hs, VectorField(hs.radial_field), x) == pytest.approx(2 * n * k, abs=1e-7)


@given(st.sampled_from(SPACES), st.floats(0.25, 2.8))
def test_radial_divergence_closed_forms(model, r):
    hs = surface(model)
    r = min(r, hs.radius_max - 0.25)
    x = hs.point_at(r, np.eye(2 * hs.n)[-1])
    val = divergence_mu(hs, VectorField(hs.radial_field), x)
    assert val == pytest.approx(radial_drift(hs, r), abs=1e-6)


# -- horizontal gradient ----------------------------------------------------------

def test_gradient_of_constant_vanishes(hs):
    x = hs.from_chart(chart_grid(hs, 3, seed=1))[1]
    assert np.allclose(horizontal_gradient(hs, constant_function(2.0), x), 0.0)


@pytest.mark.parametrize("n", [1, 2])
def test_gradient_of_radius_is_radial_field(n):
    hs = surface(("heisenberg", n, None))
    f = radial_function(hs, lambda r: r, lambda r: np.ones_like(r))
    for x in hs.from_chart(chart_grid(hs, 10, seed=2)):
        assert np.allclose(horizontal_gradient(hs, f, x), hs.radial_field(x), atol=1e-12)


def test_gradient_matches_linear_system_oracle(hs):
    f = coordinate_function(min(3, hs.space.dim - 2))
    Q = hs.space.metric_matrix
    for x in hs.from_chart(chart_grid(hs, 8, seed=4)):
        Y = horizontal_frame(hs, x).vectors
        c = np.linalg.solve(Y @ Q @ Y.T, Y @ f.grad(x))
        assert np.allclose(horizontal_gradient(hs, f, x), c @ Y, atol=1e-10)


# -- the operator -------------------------------------------------------------------

def test_constant_maps_to_zero(hs):
    z = chart_grid(hs, 5, seed=0)
    assert np.allclose(sublaplacian_chart(hs, constant_function(), z), 0.0, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_harmonic_power_on_heisenberg(n):
    hs = surface(("heisenberg", n, None))
    f = power_of_radius(hs, -(2 * n - 1))
    z = chart_grid(hs, 30, seed=n)
    assert np.max(np.abs(sublaplacian_chart(hs, f, z))) <= 1e-6


@given(st.sampled_from(SPACES), st.floats(0.4, 2.6))
def test_radial_functions_follow_radial_generator(model, r):
    hs = surface(model)
    r = min(r, hs.radius_max - 0.4)
    a, b = default_support(hs)
    psi = lambda s: bump_profile(s, a, b)[0]
    dpsi = lambda s: bump_profile(s, a, b)[1]
    f = radial_function(hs, psi, dpsi)
    z = r * np.eye(2 * hs.n)[0]
    h = 1e-4
    d2 = (psi(r + h) - 2 * psi(r) + psi(r - h)) / h**2
    expected = d2 + radial_drift(hs, r) * dpsi(r)
    got = sublaplacian_apply(hs, f, z, chart=True).value
    assert got == pytest.approx(float(expected), abs=1e-5)


@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(0, 50))
def test_linearity(a, b, idx):
    hs = surface(("sphere", 2, 1.0))
    f, g = bump_family(hs)[1:]
    z = chart_grid(hs, 51, seed=7)[idx: idx + 1]
    comb = ScalarField(lambda x: a * f(x) + b * g(x), lambda x: a * f.grad(x) + b * g.grad(x))
    lhs = sublaplacian_chart(hs, comb, z)
    rhs = a * sublaplacian_chart(hs, f, z) + b * sublaplacian_chart(hs, g, z)
    assert np.allclose(lhs, rhs, atol=1e-7)


def test_divgrad_matches_frame_formula(hs):
    z = chart_grid(hs, 15, seed=11)
    for f in bump_family(hs):
        a = sublaplacian_chart(hs, f, z)
        b = [sublaplacian_apply(hs, f, w, Method.FRAME, chart=True).value for w in z]
        assert np.max(np.abs(a - b)) <= 1e-6


def test_closed_form_on_h2():
    hs = surface(("heisenberg", 2, None))
    z = chart_grid(hs, 15, seed=12)
    for f in bump_family(hs):
        a = sublaplacian_chart(hs, f, z)
        c = [sublaplacian_apply(hs, f, w, Method.CLOSED, chart=True).value for w in z]
        assert np.max(np.abs(a - c)) <= 1e-6


def test_closed_form_only_on_h2():
    hs = surface(("heisenberg", 1, None))
    with pytest.raises(UnsupportedError):
        sublaplacian_apply(hs, constant_function(), np.array([1.0, 0.0]), Method.CLOSED, chart=True)


def test_characteristic_point_rejected():
    hs = surface(("heisenberg", 1, None))
    with pytest.raises(SingularityError):
        sublaplacian_apply(hs, constant_function(), np.zeros(3))
    with pytest.raises(SingularityError):
        sublaplacian_apply(hs, constant_function(), np.zeros(2), chart=True)


def test_ambient_and_chart_entry_points_agree():
    hs = surface(("ads", 1, 1.0))
    f = bump_family(hs)[2]
    z = np.array([0.8, -0.9])
    a = sublaplacian_apply(hs, f, z, chart=True).value
    b = sublaplacian_apply(hs, f, hs.from_chart(z)).value
    assert a == pytest.approx(b, abs=1e-9)


# -- eps approximation -----------------------------------------------------------------

@pytest.mark.parametrize("model", [("heisenberg", 1, None), ("sphere", 2, 1.0), ("ads", 1, 0.5)])
@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_eps_structure_matches_induced_metric(model, eps):
    # inverse and volume of the metric that g_eps induces on S
    hs = surface(model)
    z = chart_grid(hs, 6, seed=5)
    A, rho = eps_structure(hs, z, eps)
    X = hs.from_chart(z)
    J = hs.chart_jacobian(z)
    for i in range(len(z)):
        G = ambient_metric_eps(hs.space, X[i], eps)
        H = J[i].T @ G @ J[i]
        assert np.allclose(np.linalg.inv(H), A[i], rtol=1e-8, atol=1e-10)
        assert math.sqrt(np.linalg.det(H)) == pytest.approx(rho[i], rel=1e-9)


def test_eps_density_recovers_mu():
    hs = surface(("sphere", 1, 1.0))
    z = chart_grid(hs, 10, seed=6)
    rho = hs.chart_density(z)
    errs = [np.max(np.abs(e * math.factorial(hs.n) * eps_structure(hs, z, e)[1] - rho))
            for e in (0.1, 0.01, 0.001)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


def test_vertical_weight_at_equator():
    # at the sphere's equator X0 u = 0, so Z = X0 and g_eps(Z, Z) = 1/eps^2
    hs = surface(("sphere", 1, 1.0))
    x = hs.point_at(math.pi / 2, [1.0, 0.0])
    X0 = hs.space.reeb_vectors(x)
    assert abs(X0[hs.u_index]) < 1e-15
    eps = 0.3
    G = ambient_metric_eps(hs.space, x, eps)
    assert X0 @ G @ X0 == pytest.approx(1 / eps**2, rel=1e-12)


def test_eps_operator_approaches_delta_pointwise():
    hs = surface(("heisenberg", 1, None))
    f = bump_family(hs)[0]
    for z in chart_grid(hs, 12, seed=8):
        delta = sublaplacian_apply(hs, f, z, chart=True).value
        e1 = abs(laplace_beltrami_eps_apply(hs, f, z, 0.1, chart=True) - delta)
        e2 = abs(laplace_beltrami_eps_apply(hs, f, z, 0.05, chart=True) - delta)
        assert e2 < e1 or e1 < 1e-12


# -- convergence study -----------------------------------------------------------------

def test_convergence_on_h1_bump():
    hs = surface(("heisenberg", 1, None))
    grid = chart_grid(hs, 60, seed=0)
    rep = convergence_study(hs, bump_family(hs)[0], grid, DEFAULT_EPS)
    assert rep.strictly_decreasing
    assert rep.fitted_order >= 1.5
    assert rep.summary()["grid_points"] == 60


def test_convergence_of_constant_is_exact():
    hs = surface(("heisenberg", 1, None))
    rep = convergence_study(hs, constant_function(), chart_grid(hs, 10), DEFAULT_EPS)
    assert max(rep.sup_errors) < 1e-9


def test_convergence_input_validation():
    hs = surface(("heisenberg", 1, None))
    f = constant_function()
    with pytest.raises(ValueError):
        convergence_study(hs, f, chart_grid(hs, 5), (0.1, 0.2))
    with pytest.raises(ValueError):
        convergence_study(hs, f, np.array([[0.05, 0.0]]), DEFAULT_EPS)


@given(st.floats(0.5, 3.0), st.floats(-2, 2))
def test_fit_order_recovers_power(p, logc):
    eps = np.array(DEFAULT_EPS)
    assert fit_order(eps, math.exp(logc) * eps**p) == pytest.approx(p, rel=1e-10)


def test_fit_order_with_zero_error_is_nan():
    assert math.isnan(fit_order(DEFAULT_EPS, [0.0] * 5))


def test_report_csv_layout(tmp_path):
    hs = surface(("heisenberg", 1, None))
    rep = convergence_study(hs, bump_family(hs)[1], chart_grid(hs, 4), (0.2, 0.1))
    path = tmp_path / "rep.csv"
    rep.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "z1,z2,delta,delta_eps_0.2,delta_eps_0.1,abs_err_0.2,abs_err_0.1"
    assert len(lines) == 5
