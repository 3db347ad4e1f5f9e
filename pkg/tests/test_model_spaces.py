import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from contact_sublaplacian.errors import DomainError
from contact_sublaplacian.model_spaces import (Family, ModelSpace, ambient_volume,
                                               ambient_volume_closed, contact_form, contact_frame,
                                               d_omega_form, fibre_metric, heisenberg_frame_fields,
                                               reeb_field, reeb_residuals, sample_point,
                                               verify_normalization)

SWEEP = [("heisenberg", n, None) for n in (1, 2, 3)] + [
    (fam, n, k) for fam in ("sphere", "ads") for n in (1, 2) for k in (0.5, 1.0, 2.0)]

ks = st.sampled_from([0.5, 1.0, 2.0])
seeds = st.integers(0, 2**32 - 1)


def test_family_parse():
    assert Family.parse("AdS") is Family.ADS
    assert Family.parse(Family.SPHERE) is Family.SPHERE
    with pytest.raises(ValueError):
        Family.parse("torus")


@pytest.mark.parametrize("kw", [dict(family="sphere", n=0), dict(family="ads", n=1, k=-1.0),
                                dict(family="heisenberg", n=1.5)])
def test_invalid_space(kw):
    with pytest.raises(ValueError):
        ModelSpace(**kw)


def test_heisenberg_omega_values():
    ms = ModelSpace("heisenberg", 2)
    omega = contact_form(ms)
    e = np.eye(5)
    p = np.array([0.0, 2.0, 0.0, 0.0, 0.0])
    assert omega(p, e[0]) == pytest.approx(-1.0)
    assert omega(p, -e[4]) == 1.0


@given(ks, seeds)
def test_sphere_omega_on_rescaled_reeb(k, seed):
    ms = ModelSpace("sphere", 1, k)
    p = sample_point(ms, np.random.default_rng(seed))
    X0hat = ms.reeb_vectors(p) / (2 * k)
    assert contact_form(ms)(p, X0hat) == pytest.approx(1 / (2 * k), rel=1e-12)
    assert fibre_metric(ms, p, X0hat, X0hat) == pytest.approx(1.0, rel=1e-12)


@given(ks, seeds)
def test_ads_reeb_lorentz_norm(k, seed):
    ms = ModelSpace("ads", 2, k)
    p = sample_point(ms, np.random.default_rng(seed))
    X0 = ms.reeb_vectors(p)
    assert float(ms.lorentz(X0, X0)) == pytest.approx(-4 * k**4, rel=1e-9)


def test_ads_reeb_matches_display():
    k = 0.8
    ms = ModelSpace("ads", 1, k)
    p = sample_point(ms, np.random.default_rng(3))
    x1, x2, x3, x4 = p
    expected = 2 * k**2 * np.array([x2, -x1, -x4, x3])
    assert np.allclose(ms.reeb_vectors(p), expected, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_heisenberg_frame_orthonormal_and_reeb(n):
    ms = ModelSpace("heisenberg", n)
    p = np.linspace(-1, 1, 2 * n + 1)
    X = np.array([F(p) for F in heisenberg_frame_fields(n)])
    G = np.array([[fibre_metric(ms, p, a, b) for b in X] for a in X])
    assert np.allclose(G, np.eye(2 * n), atol=1e-14)
    assert np.allclose(reeb_field(ms)(p), -np.eye(2 * n + 1)[-1])


def test_h1_volume_on_coordinate_basis():
    ms = ModelSpace("heisenberg", 1)
    e = np.eye(3)
    assert ambient_volume(ms)(np.zeros(3), *e) == pytest.approx(-1.0)
    assert ambient_volume_closed(ms)(np.zeros(3), *e) == pytest.approx(-1.0)


@pytest.mark.parametrize("n", [1, 2])
def test_heisenberg_volume_on_frame_and_scaled_reeb(n):
    ms = ModelSpace("heisenberg", n)
    p = np.linspace(0.2, 1.2, 2 * n + 1)
    eps = 0.3
    X = [F(p) for F in heisenberg_frame_fields(n)]
    val = ambient_volume(ms)(p, *X, eps * reeb_field(ms)(p))
    assert val == pytest.approx(eps * math.factorial(n), rel=1e-12)


@pytest.mark.parametrize("family,n,k", [("sphere", 1, 1.0), ("sphere", 2, 0.5), ("ads", 2, 1.5)])
def test_volume_on_frame_and_unit_reeb(family, n, k):
    ms = ModelSpace(family, n, k)
    p = sample_point(ms, np.random.default_rng(5))
    F = contact_frame(ms, p)
    X0hat = ms.reeb_vectors(p) / (2 * k**2) if family == "ads" else ms.reeb_vectors(p) / (2 * k)
    closed = ambient_volume_closed(ms)(p, *F, X0hat)
    # shuffle expansion of omega ^ (d omega)^n, restricted to the tangent space
    direct = ambient_volume(ms)(p, *F, X0hat)
    assert abs(closed) == pytest.approx(abs(direct), rel=1e-10)
    if family == "sphere":
        # omega(X0hat) = 1/(2k), so the unit Reeb multiple gives n!/(2k) and X0 itself gives n!
        assert abs(direct) == pytest.approx(math.factorial(n) / (2 * k), rel=1e-10)
        assert abs(ambient_volume(ms)(p, *F, ms.reeb_vectors(p))) == pytest.approx(math.factorial(n), rel=1e-10)


@given(ks, seeds)
def test_closed_volume_matches_wedge(k, seed):
    ms = ModelSpace("sphere", 1, k)
    rng = np.random.default_rng(seed)
    p = sample_point(ms, rng)
    T = ms.tangent_basis(p).T
    assert ambient_volume_closed(ms)(p, *T) == pytest.approx(ambient_volume(ms)(p, *T), rel=1e-9, abs=1e-12)


def test_h2_normalization_value():
    ms = ModelSpace("heisenberg", 2)
    p = np.array([0.5, 0.1, -0.3, 0.8, 2.0])
    X = [F(p) for F in heisenberg_frame_fields(2)]
    dw = d_omega_form(ms)
    # (d omega)^2 through the shuffle expansion equals 2!
    from contact_sublaplacian.exterior import wedge
    assert wedge(dw, dw)(p, *X) == pytest.approx(2.0)


@pytest.mark.parametrize("family,n,k", SWEEP)
def test_normalization_and_reeb_sweep(family, n, k):
    ms = ModelSpace(family, n, k)
    assert verify_normalization(ms, 200, 0) <= 1e-7
    r_om, r_dom = reeb_residuals(ms, 200, 0)
    assert r_om <= 1e-9 and r_dom <= 1e-7


@given(st.sampled_from(SWEEP), seeds)
def test_contact_frame_is_orthonormal_in_kernel(model, seed):
    ms = ModelSpace(*model)
    p = sample_point(ms, np.random.default_rng(seed))
    F = contact_frame(ms, p)
    assert F.shape == (2 * ms.n, ms.dim)
    assert np.allclose(F @ ms.metric_matrix @ F.T, np.eye(2 * ms.n), atol=1e-10)
    assert np.allclose(F @ ms.omega_coeffs(p), 0.0, atol=1e-10)


@given(seeds)
def test_samples_lie_on_quadrics(seed):
    s = sample_point(ModelSpace("sphere", 1, 1.0), np.random.default_rng(seed))
    a = sample_point(ModelSpace("ads", 1, 1.0), np.random.default_rng(seed))
    assert abs(s @ s - 1) <= 1e-12
    assert abs(float(ModelSpace("ads", 1, 1.0).lorentz(a, a)) + 1) <= 1e-12


def test_sample_point_deterministic():
    ms = ModelSpace("ads", 2, 0.5)
    a = sample_point(ms, np.random.default_rng(9))
    b = sample_point(ms, np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_check_point_rejects_off_manifold():
    ms = ModelSpace("sphere", 1, 1.0)
    with pytest.raises(DomainError):
        ms.check_point(np.array([1.0, 1.0, 0.0, 0.0]))
    with pytest.raises(DomainError):
        ms.check_point(np.array([1.0, 0.0]))
