"""Smooth test functions on the model hypersurfaces.

All functions are vectorized over leading axes of the ambient point array and
carry analytic ambient gradients. Only the tangential part of a gradient is
ever used, so any smooth ambient extension is acceptable.
"""

from __future__ import annotations

import math

import numpy as np

from .exterior import ScalarField
from .hypersurface import ModelHypersurface
from .model_spaces import Family


def radius_gradient(hs: ModelHypersurface, x: np.ndarray) -> np.ndarray:
    """Ambient gradient of the radial coordinate (an extension off S)."""
    x = np.asarray(x, dtype=float)
    nn = 2 * hs.n
    y = x[..., :nn]
    s = np.linalg.norm(y, axis=-1)[..., None]
    out = np.zeros_like(x)
    k = hs.k
    if hs.family is Family.HEISENBERG:
        out[..., :nn] = y / s
    elif hs.family is Family.SPHERE:
        t = x[..., nn:nn + 1]
        rho2 = s**2 + t**2
        out[..., :nn] = t * y / (s * rho2 * k)
        out[..., nn] = -s[..., 0] / (rho2[..., 0] * k)
    else:
        out[..., :nn] = y / (s * np.sqrt(1 + s**2) * k)
    return out


def bump_profile(r, a: float, b: float):
    """psi(r) = exp(1 - 1/(1 - s^2)) on (a, b), s the affine map onto (-1, 1); returns (psi, psi')."""
    r = np.asarray(r, dtype=float)
    s = (2 * r - a - b) / (b - a)
    inside = np.abs(s) < 1
    q = np.where(inside, 1 - s**2, 1.0)
    psi = np.where(inside, np.exp(1 - 1 / q), 0.0)
    dpsi = np.where(inside, psi * (-2 * s / q**2) * (2 / (b - a)), 0.0)
    return psi, dpsi


def default_support(hs: ModelHypersurface) -> tuple[float, float]:
    if hs.family is Family.SPHERE:
        return 0.3, math.pi / hs.k - 0.3
    return 0.3, 3.0


def radial_function(hs: ModelHypersurface, profile, dprofile, name="radial") -> ScalarField:
    """f = profile(r) with gradient profile'(r) grad r."""

    def ev(x):
        return profile(hs.radius(x))

    def grad(x):
        return dprofile(hs.radius(x))[..., None] * radius_gradient(hs, x)

    return ScalarField(ev, grad, name=name)


def _weighted_bump(hs, support, weight, dweight, name):
    a, b = support

    def ev(x):
        x = np.asarray(x, dtype=float)
        psi, _ = bump_profile(hs.radius(x), a, b)
        return psi * weight(x)

    def grad(x):
        x = np.asarray(x, dtype=float)
        psi, dpsi = bump_profile(hs.radius(x), a, b)
        return ((dpsi * weight(x))[..., None] * radius_gradient(hs, x)
                + psi[..., None] * dweight(x))

    return ScalarField(ev, grad, support=(a, b), name=name)


def bump_family(hs: ModelHypersurface, support=None) -> list[ScalarField]:
    """Three compactly supported test functions: radial, affine-weighted, quadratic-weighted."""
    support = default_support(hs) if support is None else support

    def one(x):
        return np.ones(np.shape(x)[:-1])

    def zero_grad(x):
        return np.zeros(np.shape(x))

    def affine(x):
        return 1 + x[..., 0] + 0.5 * x[..., 1]

    def daffine(x):
        g = np.zeros(np.shape(x))
        g[..., 0], g[..., 1] = 1.0, 0.5
        return g

    def quad(x):
        return x[..., 0] ** 2 - x[..., 1] ** 2 + x[..., 0] * x[..., 1]

    def dquad(x):
        g = np.zeros(np.shape(x))
        g[..., 0] = 2 * x[..., 0] + x[..., 1]
        g[..., 1] = -2 * x[..., 1] + x[..., 0]
        return g

    return [
        _weighted_bump(hs, support, one, zero_grad, "bump_radial"),
        _weighted_bump(hs, support, affine, daffine, "bump_affine"),
        _weighted_bump(hs, support, quad, dquad, "bump_quadratic"),
    ]


def coordinate_function(index: int) -> ScalarField:
    def ev(x):
        return np.asarray(x, dtype=float)[..., index]

    def grad(x):
        g = np.zeros(np.shape(x))
        g[..., index] = 1.0
        return g

    return ScalarField(ev, grad, name=f"x{index + 1}")


def constant_function(value: float = 1.0) -> ScalarField:
    return ScalarField(lambda x: np.full(np.shape(x)[:-1], float(value)),
                       lambda x: np.zeros(np.shape(x)), name="const")


def power_of_radius(hs: ModelHypersurface, power: float) -> ScalarField:
    """r^power; with power = -(2n-1) this is harmonic on the Heisenberg hypersurface."""
    return radial_function(hs, lambda r: r**power, lambda r: power * r ** (power - 1),
                           name=f"r^{power:g}")
