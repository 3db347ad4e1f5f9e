"""Horizontal gradient, mu-divergence and the intrinsic sub-Laplacian.

Everything here works in the normal chart z of ``ModelHypersurface``. With
chart Jacobian J, the horizontal gradient of f is ``J A J^T grad f`` where
``A`` is the cometric of W, and

    Delta f = (1/rho) d_j (rho A^{jl} d_l f),

rho being the chart density of mu = iota_N Omega. This is the primary
(``DIVGRAD``) path; it needs no frame. ``FRAME`` evaluates
sum_i Y_i^2 f + (div_mu Y_i) Y_i f with a Gram-Schmidt frame whose pivot
order is frozen at the evaluation point, and ``CLOSED`` uses the explicit
U-field formula on the H^2 hypersurface.

The eps-approximation replaces A by A + w w^T / g_eps(Z, Z), with w the chart
components of Z = X0 - (X0 u / N u) N, and mu by iota_{N_eps} Omega_eps.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, SingularityError, UnsupportedError
from .exterior import FD_STEP, ScalarField, VectorField, directional_derivative, richardson_diff
from .hypersurface import ModelHypersurface, _require_regular, heisenberg2_frame
from .model_spaces import Family


class Method(str, Enum):
    DIVGRAD = "DivGrad"
    FRAME = "FrameFormula"
    CLOSED = "ClosedForm"


@dataclass(frozen=True)
class OperatorResult:
    value: float
    method: Method
    point: np.ndarray
    step: float


# -- finite-difference divergence ---------------------------------------------

def chart_divergence(flux: Callable[..., np.ndarray], z: np.ndarray, h=FD_STEP,
                     richardson: bool = True, rowwise: bool = False) -> np.ndarray:
    """sum_j d_j F^j at chart points z of shape (M, 2n).

    ``flux`` maps (K, 2n) to (K, 2n) or (K, 2n, q). With ``rowwise`` it is
    called as ``flux(points, rows)`` and returns only row ``rows[i]`` at each
    point, shape (K,) or (K, q). ``h`` may be a scalar or one step per point.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    M, m = z.shape
    h = np.broadcast_to(np.asarray(h, dtype=float), (M,))
    if np.any(h <= 0):
        raise ValueError("finite-difference step must be positive")
    shifts = np.array([1.0, -1.0, 0.5, -0.5]) if richardson else np.array([1.0, -1.0])
    S = shifts.size
    eye = np.eye(m)
    pts = z[:, None, None, :] + (shifts[None, :, None, None] * h[:, None, None, None]) * eye[None, None, :, :]
    if rowwise:
        rows = np.broadcast_to(np.arange(m), (M, S, m)).reshape(-1)
        F = flux(pts.reshape(-1, m), rows)
        Fd = F.reshape((M, S, m) + F.shape[1:])
    else:
        F = flux(pts.reshape(-1, m))
        F = F.reshape((M, S, m) + F.shape[1:])
        idx = np.arange(m)
        Fd = F[:, :, idx, idx]  # row j from the shift along e_j
    hh = h.reshape((M,) + (1,) * (Fd.ndim - 2))
    d1 = (Fd[:, 0] - Fd[:, 1]) / (2 * hh)
    if richardson:
        d2 = (Fd[:, 2] - Fd[:, 3]) / hh
        d1 = (4 * d2 - d1) / 3
    return d1.sum(axis=1)


def _regular_chart_point(hs: ModelHypersurface, p, chart: bool) -> np.ndarray:
    if chart:
        z = np.asarray(p, dtype=float)
        if z.shape != (2 * hs.n,):
            raise DomainError(f"chart points have {2 * hs.n} coordinates")
        if np.linalg.norm(z) <= 0 or np.linalg.norm(z) >= hs.radius_max:
            raise SingularityError(f"chart point {z.tolist()} is characteristic")
        return z
    return hs.to_chart(_require_regular(hs, p))


def chart_gradient(hs: ModelHypersurface, f: ScalarField, z: np.ndarray) -> np.ndarray:
    x = hs.from_chart(z)
    return np.einsum("...ia,...i->...a", hs.chart_jacobian(z), f.grad(x))


# -- horizontal gradient and divergence ----------------------------------------

def horizontal_gradient(hs: ModelHypersurface, f: ScalarField, p) -> np.ndarray:
    """nabla_S f at p in ambient components."""
    z = hs.to_chart(_require_regular(hs, p))
    J = hs.chart_jacobian(z)
    return J @ hs.cometric(z) @ (J.T @ f.grad(hs.from_chart(z)))


def _chart_field(hs: ModelHypersurface, V) -> Callable[[np.ndarray], np.ndarray]:
    """Chart components of an ambient vector field, evaluated row by row."""
    if isinstance(V, VectorField):
        def comp(Z):
            X = hs.from_chart(Z)
            amb = np.array([V(x) for x in X.reshape(-1, X.shape[-1])]).reshape(X.shape)
            return hs.chart_components(Z, amb)
        return comp
    return V


def divergence_mu(hs: ModelHypersurface, V, p, chart: bool = False, h: float = FD_STEP) -> float:
    """(1/rho) sum_j d_j (rho V^j).

    ``V`` is an ambient ``VectorField`` tangent to S, or a vectorized callable
    returning chart components. ``p`` is ambient unless ``chart`` is set.
    """
    z = _regular_chart_point(hs, p, chart)
    comp = _chart_field(hs, V)

    def flux(Z):
        return hs.chart_density(Z)[:, None] * comp(Z)

    return float(chart_divergence(flux, z[None], h)[0] / hs.chart_density(z))


# -- the operator ---------------------------------------------------------------

def sublaplacian_chart(hs: ModelHypersurface, f: ScalarField, Z: np.ndarray,
                       h: float = FD_STEP) -> np.ndarray:
    """Delta f at many chart points (DivGrad path)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))

    def flux(W):
        g = chart_gradient(hs, f, W)
        return hs.chart_density(W)[:, None] * np.einsum("kab,kb->ka", hs.cometric(W), g)

    return chart_divergence(flux, Z, h) / hs.chart_density(Z)


def _frame_formula(hs: ModelHypersurface, f: ScalarField, z: np.ndarray, h: float) -> float:
    order = hs.chart_frame_order(z)
    m = 2 * hs.n

    def flux(W):
        frames = np.array([hs.chart_frame(w, order) for w in W])  # (K, m-1, m)
        return hs.chart_density(W)[:, None, None] * np.swapaxes(frames, 1, 2)

    Y = hs.chart_frame(z, order)
    div_y = chart_divergence(flux, z[None], h)[0] / hs.chart_density(z)
    grad = chart_gradient(hs, f, z[None])[0]
    # Y_i (Y_i f) = Y_i . d(Y_i f), differenced along each chart axis
    dyf = np.empty((m, m - 1))
    for j in range(m):
        e = np.zeros(m)
        e[j] = 1.0
        dyf[j] = richardson_diff(lambda t: _yf(hs, f, z + t * e, order), h)
    second = np.einsum("ij,ji->i", Y, dyf)
    return float(np.sum(second + div_y * (Y @ grad)))


def _yf(hs, f, w, order):
    return hs.chart_frame(w, order) @ chart_gradient(hs, f, w[None])[0]


def _closed_form_h2(hs: ModelHypersurface, f: ScalarField, p: np.ndarray, h: float) -> float:
    U1, U2, U3, _ = heisenberg2_frame()
    s = math.sqrt(float(np.sum(p[:4] ** 2)))
    total = sum(directional_derivative(f, U, p, order=2, h=h) for U in (U1, U2, U3))
    return total + 4 / s * directional_derivative(f, U1, p, order=1, h=h)


def sublaplacian_apply(hs: ModelHypersurface, f: ScalarField, p, method=Method.DIVGRAD,
                       h: Optional[float] = None, chart: bool = False) -> OperatorResult:
    """Delta f at p by the requested method."""
    method = Method(method)
    z = _regular_chart_point(hs, p, chart)
    if method is Method.DIVGRAD:
        step = FD_STEP if h is None else h
        value = float(sublaplacian_chart(hs, f, z[None], step)[0])
    elif method is Method.FRAME:
        step = FD_STEP if h is None else h
        value = _frame_formula(hs, f, z, step)
    else:
        if not (hs.family is Family.HEISENBERG and hs.n == 2):
            raise UnsupportedError("the closed form is available on the H^2 hypersurface only")
        step = 1e-3 if h is None else h
        value = _closed_form_h2(hs, f, hs.from_chart(z), step)
    return OperatorResult(value, method, z, step)


# -- eps-approximation ------------------------------------------------------------

def eps_structure(hs: ModelHypersurface, Z: np.ndarray, eps: float):
    """(cometric A_eps, chart density of mu_eps) at chart points Z."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    Z = np.asarray(Z, dtype=float)
    X = hs.from_chart(Z)
    N = hs.normal_closed(X)
    X0 = hs.space.reeb_vectors(X)
    iu = hs.u_index
    Nu, X0u = N[..., iu], X0[..., iu]
    Zf = X0 - (X0u / Nu)[..., None] * N
    w = hs.chart_components(Z, Zf)
    zz = 1 / eps**2 + (X0u / Nu) ** 2
    A = hs.cometric(Z) + w[..., :, None] * w[..., None, :] / zz[..., None, None]
    Ne = (np.abs(Nu)[..., None] * N + (eps**2 * np.sign(Nu) * X0u)[..., None] * X0) \
        / np.sqrt(Nu**2 + eps**2 * X0u**2)[..., None]
    rho = hs.chart_density(Z, normal=Ne) / (eps * math.factorial(hs.n))
    return A, rho


def laplace_beltrami_eps_chart(hs: ModelHypersurface, f: ScalarField, Z: np.ndarray, eps: float,
                               h: float = FD_STEP) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=float))

    def flux(W):
        A, rho = eps_structure(hs, W, eps)
        return rho[:, None] * np.einsum("kab,kb->ka", A, chart_gradient(hs, f, W))

    return chart_divergence(flux, Z, h) / eps_structure(hs, Z, eps)[1]


def laplace_beltrami_eps_apply(hs: ModelHypersurface, f: ScalarField, p, eps: float,
                               h: float = FD_STEP, chart: bool = False) -> float:
    z = _regular_chart_point(hs, p, chart)
    return float(laplace_beltrami_eps_chart(hs, f, z[None], eps, h)[0])


# -- convergence study -------------------------------------------------------------

DEFAULT_EPS = (0.4, 0.2, 0.1, 0.05, 0.025)
CHAR_MARGIN = 0.2


def grid_radius_max(hs: ModelHypersurface) -> float:
    """Outer radius of default test grids; on AdS capped at kr = 3.2 (coordinates grow like e^{kr})."""
    if hs.family is Family.SPHERE:
        return hs.radius_max - CHAR_MARGIN
    if hs.family is Family.ADS:
        return min(3.2, 3.2 / hs.k)
    return 3.2


def chart_grid(hs: ModelHypersurface, count: int, r_range: Optional[tuple[float, float]] = None,
               seed: int = 0) -> np.ndarray:
    """Deterministic chart points with radii spread evenly over ``r_range``."""
    if r_range is None:
        r_range = (CHAR_MARGIN, grid_radius_max(hs))
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(count, 2 * hs.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = np.linspace(r_range[0], r_range[1], count)
    return radii[:, None] * dirs


@dataclass
class ConvergenceReport:
    eps_schedule: list
    sup_errors: list
    fitted_order: float
    test_function: str
    space: str
    grid: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    delta_eps: np.ndarray = field(repr=False)  # (len(eps), points)

    @property
    def strictly_decreasing(self) -> bool:
        e = self.sup_errors
        return all(b < a for a, b in zip(e, e[1:]))

    def summary(self) -> dict:
        return {"space": self.space, "test_function": self.test_function,
                "eps_schedule": list(self.eps_schedule), "sup_errors": list(self.sup_errors),
                "fitted_order": self.fitted_order, "strictly_decreasing": self.strictly_decreasing,
                "grid_points": int(self.grid.shape[0]),
                "grid_radius_range": [float(np.linalg.norm(self.grid, axis=1).min()),
                                      float(np.linalg.norm(self.grid, axis=1).max())]}

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")

    def write_csv(self, path) -> None:
        m = self.grid.shape[1]
        header = [f"z{j + 1}" for j in range(m)] + ["delta"]
        header += [f"delta_eps_{e:g}" for e in self.eps_schedule]
        header += [f"abs_err_{e:g}" for e in self.eps_schedule]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(header)
            for i in range(self.grid.shape[0]):
                row = list(self.grid[i]) + [self.delta[i]] + list(self.delta_eps[:, i])
                row += list(np.abs(self.delta_eps[:, i] - self.delta[i]))
                wr.writerow([f"{v:.16e}" for v in row])


def fit_order(eps: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(eps)."""
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0):
        return math.nan
    return float(np.polyfit(np.log(eps), np.log(e), 1)[0])


def convergence_study(hs: ModelHypersurface, f: ScalarField, grid: np.ndarray,
                      eps_schedule: Sequence[float] = DEFAULT_EPS,
                      margin: float = CHAR_MARGIN, h: float = FD_STEP) -> ConvergenceReport:
    """sup over the grid of |Delta_eps f - Delta f| for each eps."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    eps_schedule = [float(e) for e in eps_schedule]
    if any(b >= a for a, b in zip(eps_schedule, eps_schedule[1:])) or min(eps_schedule) <= 0:
        raise ValueError("eps schedule must be positive and strictly decreasing")
    r = np.linalg.norm(grid, axis=1)
    if np.any(r < margin) or np.any(r > hs.radius_max - margin):
        raise ValueError(f"grid must stay at distance >= {margin} from the characteristic set")
    delta = sublaplacian_chart(hs, f, grid, h)
    delta_eps = np.array([laplace_beltrami_eps_chart(hs, f, grid, e, h) for e in eps_schedule])
    sup = [float(v) for v in np.max(np.abs(delta_eps - delta), axis=1)]
    if all(s == 0 for s in sup):
        order = math.inf
    else:
        order = fit_order(eps_schedule, sup)
    return ConvergenceReport(eps_schedule, sup, order, f.name, hs.space.label, grid, delta, delta_eps)
