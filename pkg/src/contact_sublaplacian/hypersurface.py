"""Canonical hypersurfaces in the model spaces and their induced structures.

Each hypersurface S is the zero set of one ambient coordinate u (the last
one; for anti-de Sitter the upper sheet x_{2n+1} > 0 is kept). Away from the
characteristic set C(S), S carries the corank-one distribution W = D ∩ TS,
the sub-Riemannian normal N and the volume form mu = iota_N Omega.

Two charts are provided on S minus C(S):

* the *normal chart* z in R^{2n}: the point at radial coordinate r = |z| in
  direction z/|z|. It is smooth everywhere it is defined and is what the
  operator and simulation code differentiate in;
* ``SphericalChart``: the same radius with hyperspherical angles, used to
  check the volume density in its product form.

Chart kernels (``from_chart``, ``chart_jacobian``, ``cometric``, ...) broadcast
over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, SingularityError, UnsupportedError
from .exterior import FD_STEP, VectorField, lie_bracket, richardson_diff
from .linalg import RANK_TOL, constrained_orthonormal_basis, gram_schmidt, numerical_rank, pivot_order
from .model_spaces import (Family, ModelSpace, ambient_volume_closed, contact_form,
                           contact_frame)


@dataclass(frozen=True)
class ModelHypersurface:
    space: ModelSpace
    char_tolerance: float = 1e-10
    surface_tolerance: float = 1e-9

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def family(self) -> Family:
        return self.space.family

    @property
    def k(self) -> float:
        return 1.0 if self.space.k is None else self.space.k

    @property
    def u_index(self) -> int:
        return self.space.dim - 1

    @property
    def radius_max(self) -> float:
        return math.pi / self.k if self.family is Family.SPHERE else math.inf

    @property
    def zeta(self):
        """Quasi-contact form: the contact form evaluated on vectors tangent to S."""
        return contact_form(self.space)

    def u(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)[..., self.u_index]

    def check_on_surface(self, p) -> np.ndarray:
        p = self.space.check_point(p, self.surface_tolerance)
        if abs(p[self.u_index]) > self.surface_tolerance:
            raise DomainError(f"point {p.tolist()} is not on the hypersurface u = 0")
        if self.family is Family.ADS and p[2 * self.n] <= 0:
            raise DomainError("only the upper sheet x_{2n+1} > 0 belongs to the hypersurface")
        return p

    # -- radial structure ------------------------------------------------------

    def radius(self, x: np.ndarray) -> np.ndarray:
        """Radial coordinate; the characteristic points sit at r = 0 (and r = pi/k)."""
        x = np.asarray(x, dtype=float)
        s = np.linalg.norm(x[..., :2 * self.n], axis=-1)
        if self.family is Family.HEISENBERG:
            return s
        if self.family is Family.SPHERE:
            return np.arctan2(s, x[..., 2 * self.n]) / self.k
        return np.arcsinh(s) / self.k

    def radial_field(self, x: np.ndarray) -> np.ndarray:
        """The unit radial field R = d/dr in ambient components."""
        x = np.asarray(x, dtype=float)
        nn = 2 * self.n
        y = x[..., :nn]
        s = np.linalg.norm(y, axis=-1)[..., None]
        out = np.zeros_like(x)
        if self.family is Family.HEISENBERG:
            out[..., :nn] = y / s
            return out
        t = x[..., nn:nn + 1]
        out[..., :nn] = self.k * t * y / s
        sign = -1.0 if self.family is Family.SPHERE else 1.0
        out[..., nn] = sign * self.k * s[..., 0]
        return out

    def h_k(self, r):
        return h_k(self.space, r)

    # -- normal chart ----------------------------------------------------------

    def _profile(self, r):
        """(a, a'/r, b, b'/r) with x = (a(r) z, b(r), 0) in the normal chart.

        Small-radius branches use Taylor series so the chart is smooth through
        the characteristic point.
        """
        r = np.asarray(r, dtype=float)
        k = self.k
        if self.family is Family.HEISENBERG:
            return np.ones_like(r), np.zeros_like(r), np.zeros_like(r), np.zeros_like(r)
        sgn = -1.0 if self.family is Family.SPHERE else 1.0
        t = k * r
        small = t < 1e-2
        rs = np.where(small, 1.0, r)
        ts = k * rs
        if self.family is Family.SPHERE:
            sn, cs = np.sin(ts), np.cos(ts)
            b = np.cos(t)
        else:
            sn, cs = np.sinh(ts), np.cosh(ts)
            b = np.cosh(t)
        t2 = t * t
        a = np.where(small, k * (1 + sgn * t2 / 6 + t2 * t2 / 120), sn / rs)
        da_r = np.where(small, sgn * k**3 * (1 / 3 + sgn * t2 / 30 + t2 * t2 / 840),
                        (ts * cs - sn) / rs**3)
        db_r = np.where(small, sgn * k**2 * (1 + sgn * t2 / 6 + t2 * t2 / 120), sgn * k * sn / rs)
        return a, da_r, b, db_r

    def from_chart(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)
        a, _, b, _ = self._profile(r)
        x = np.zeros(z.shape[:-1] + (self.space.dim,))
        x[..., :2 * self.n] = a[..., None] * z
        if self.family is not Family.HEISENBERG:
            x[..., 2 * self.n] = b
        return x

    def to_chart(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = x[..., :2 * self.n]
        if self.family is Family.HEISENBERG:
            return y.copy()
        s = np.linalg.norm(y, axis=-1)
        scale = np.divide(self.radius(x), s, out=np.ones_like(s), where=s > 0)
        return y * scale[..., None]

    def chart_jacobian(self, z: np.ndarray) -> np.ndarray:
        """d x / d z, shape (..., dim, 2n)."""
        z = np.asarray(z, dtype=float)
        nn = 2 * self.n
        r = np.linalg.norm(z, axis=-1)
        a, da_r, _, db_r = self._profile(r)
        J = np.zeros(z.shape[:-1] + (self.space.dim, nn))
        J[..., :nn, :] = (a[..., None, None] * np.eye(nn)
                          + da_r[..., None, None] * z[..., :, None] * z[..., None, :])
        if self.family is not Family.HEISENBERG:
            J[..., nn, :] = db_r[..., None] * z
        return J

    def normal_closed(self, x: np.ndarray) -> np.ndarray:
        """Sub-Riemannian normal from the coordinate formula of each family."""
        x = np.asarray(x, dtype=float)
        nn = 2 * self.n
        y = x[..., :nn]
        s2 = np.sum(y**2, axis=-1)
        s = np.sqrt(s2)
        rot = rotate(y)
        out = np.zeros_like(x)
        if self.family is Family.HEISENBERG:
            out[..., :nn] = rot / s[..., None]
            out[..., nn] = -0.5 * s
            return out
        out[..., :nn] = self.k * x[..., nn:nn + 1] * rot / s[..., None]
        out[..., nn + 1] = self.k * s
        return out

    def volume_closed(self, x: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """Omega(vectors) batched: ``vectors`` has shape (..., dim, dim or dim-1) as columns."""
        nf = math.factorial(self.n)
        if self.family is Family.HEISENBERG:
            return -nf * np.linalg.det(vectors)
        c = nf / (2 * self.k ** (2 * self.n + 2))
        return c * np.linalg.det(np.concatenate([np.asarray(x)[..., :, None], vectors], axis=-1))

    def chart_density(self, z: np.ndarray, normal: Optional[np.ndarray] = None) -> np.ndarray:
        """Coefficient of iota_N Omega against dz_1 ^ ... ^ dz_2n."""
        x = self.from_chart(z)
        N = self.normal_closed(x) if normal is None else normal
        cols = np.concatenate([N[..., :, None], self.chart_jacobian(z)], axis=-1)
        return self.volume_closed(x, cols)

    def chart_covector(self, z: np.ndarray) -> np.ndarray:
        """zeta in chart components; W = ker of it."""
        x = self.from_chart(z)
        J = self.chart_jacobian(z)
        return np.einsum("...ij,...i->...j", J, self.space.omega_coeffs(x))

    def chart_metric(self, z: np.ndarray) -> np.ndarray:
        """J^T Q J: equals g on W and is positive definite on the whole tangent space."""
        J = self.chart_jacobian(z)
        return np.einsum("...ia,ij,...jb->...ab", J, self.space.metric_matrix, J)

    def cometric(self, z: np.ndarray) -> np.ndarray:
        """Sum_i y_i y_i^T over a g-orthonormal frame of W, in chart components."""
        G = self.chart_metric(z)
        c = self.chart_covector(z)
        Gc = np.linalg.solve(G, c[..., None])[..., 0]
        Ginv = np.linalg.inv(G)
        denom = np.sum(c * Gc, axis=-1)[..., None, None]
        return Ginv - Gc[..., :, None] * Gc[..., None, :] / denom

    def conformal_factor(self, z: np.ndarray) -> np.ndarray:
        """kappa = (r / h_k(r))^2, the cometric on directions orthogonal to z and Jz."""
        r = np.linalg.norm(np.asarray(z, dtype=float), axis=-1)
        a = self._profile(r)[0]
        return (self.k / a) ** 2

    def cometric_closed(self, z: np.ndarray) -> np.ndarray:
        """Closed form of ``cometric``: zhat zhat^T + kappa (I - zhat zhat^T - chat chat^T)."""
        z = np.asarray(z, dtype=float)
        r = np.linalg.norm(z, axis=-1)[..., None]
        zh = z / r
        ch = rotate(z) / r
        kappa = self.conformal_factor(z)[..., None, None]
        zz = zh[..., :, None] * zh[..., None, :]
        cc = ch[..., :, None] * ch[..., None, :]
        return zz + kappa * (np.eye(z.shape[-1]) - zz - cc)

    def chart_density_closed(self, z: np.ndarray) -> np.ndarray:
        """(n!/2) h_k(r)^{2n} / r^{2n-1}."""
        r = np.linalg.norm(np.asarray(z, dtype=float), axis=-1)
        a = self._profile(r)[0]
        return math.factorial(self.n) / 2 * r * (a / self.k) ** (2 * self.n)

    def chart_components(self, z: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Chart components of ambient tangent vectors v at from_chart(z)."""
        J = self.chart_jacobian(z)
        JtJ = np.einsum("...ia,...ib->...ab", J, J)
        Jtv = np.einsum("...ia,...i->...a", J, v)
        return np.linalg.solve(JtJ, Jtv[..., None])[..., 0]

    def chart_frame(self, z: np.ndarray, order: Optional[list[int]] = None) -> np.ndarray:
        """g-orthonormal frame of W in chart components (rows), single point."""
        z = np.asarray(z, dtype=float)
        c = self.chart_covector(z)
        G = self.chart_metric(z)
        P = np.eye(2 * self.n) - np.outer(c, c) / (c @ c)
        return gram_schmidt(P, G, 2 * self.n - 1, order=order, where=z)

    def chart_frame_order(self, z: np.ndarray) -> list[int]:
        c = self.chart_covector(z)
        P = np.eye(2 * self.n) - np.outer(c, c) / (c @ c)
        return pivot_order(P, self.chart_metric(z), 2 * self.n - 1)

    def point_at(self, r: float, direction) -> np.ndarray:
        d = np.asarray(direction, dtype=float)
        return self.from_chart(r * d / np.linalg.norm(d))


def rotate(y: np.ndarray) -> np.ndarray:
    """The complex structure (y_1, y_2, ...) -> (y_2, -y_1, ...) on R^{2n}."""
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    out[..., 0::2] = y[..., 1::2]
    out[..., 1::2] = -y[..., 0::2]
    return out


def h_k(ms: ModelSpace, r):
    """Radial profile: r, sin(kr)/k or sinh(kr)/k on the admissible interval."""
    r_arr = np.asarray(r, dtype=float)
    upper = math.pi / ms.k if ms.family is Family.SPHERE else math.inf
    if np.any(r_arr <= 0) or np.any(r_arr >= upper):
        raise DomainError(f"radius {r} outside (0, {upper})")
    if ms.family is Family.HEISENBERG:
        out = r_arr
    elif ms.family is Family.SPHERE:
        out = np.sin(ms.k * r_arr) / ms.k
    else:
        out = np.sinh(ms.k * r_arr) / ms.k
    return float(out) if np.ndim(out) == 0 else out


def _unit_direction(phi: np.ndarray) -> np.ndarray:
    """Hyperspherical direction in R^{len(phi)+1}."""
    phi = np.asarray(phi, dtype=float)
    d = phi.size + 1
    out = np.empty(d)
    sprod = 1.0
    for i in range(d - 1):
        out[i] = sprod * math.cos(phi[i])
        sprod *= math.sin(phi[i])
    out[d - 1] = sprod
    return out


def _angles(direction: np.ndarray) -> np.ndarray:
    d = np.asarray(direction, dtype=float)
    m = d.size
    phi = np.empty(m - 1)
    for i in range(m - 2):
        tail = np.linalg.norm(d[i + 1:])
        phi[i] = math.atan2(tail, d[i])
    phi[m - 2] = math.atan2(d[m - 1], d[m - 2]) % (2 * math.pi)
    return phi


@dataclass(frozen=True)
class SphericalChart:
    """Coordinates (r, phi_1..phi_{2n-1}) on S minus C(S)."""

    hs: ModelHypersurface

    def to_ambient(self, r: float, phi) -> np.ndarray:
        return self.hs.from_chart(r * _unit_direction(phi))

    def from_ambient(self, x) -> tuple[float, np.ndarray]:
        z = self.hs.to_chart(np.asarray(x, dtype=float))
        r = float(np.linalg.norm(z))
        return r, _angles(z / r)

    def _sine_product(self, phi) -> float:
        n = self.hs.n
        phi = np.asarray(phi, dtype=float)
        return float(np.prod([math.sin(phi[i - 1]) ** (2 * n - i - 1) for i in range(1, 2 * n - 1)]))

    def jac_det(self, r: float, phi) -> float:
        """Coefficient of the model surface's standard volume against dr ^ dphi."""
        hs, n = self.hs, self.hs.n
        if hs.family is Family.HEISENBERG:
            radial = r ** (2 * n - 1)
        else:
            radial = hs.k * (hs.k * h_k(hs.space, r)) ** (2 * n - 1)
        return radial * self._sine_product(phi)

    def mu_density(self, r: float, phi) -> float:
        return induced_volume_density(self.hs, r, phi)

    def frame(self, r: float, phi, h: float = FD_STEP) -> np.ndarray:
        """Ambient coordinate vectors (d/dr, d/dphi_1, ...) as rows."""
        phi = np.asarray(phi, dtype=float)
        rows = [richardson_diff(lambda t: self.to_ambient(r + t, phi), h)]
        for i in range(phi.size):
            e = np.zeros_like(phi)
            e[i] = 1.0
            rows.append(richardson_diff(lambda t: self.to_ambient(r, phi + t * e), h))
        return np.array(rows)


def induced_volume_density(hs: ModelHypersurface, r: float, phi) -> float:
    """mu = (n!/2) h_k(r)^{2n} prod sin(phi_i)^{2n-i-1} dr ^ dphi_1 ^ ... ."""
    n = hs.n
    phi = np.asarray(phi, dtype=float)
    if phi.size != 2 * n - 1:
        raise DomainError(f"need {2 * n - 1} angles")
    if np.any(np.sin(phi[:2 * n - 2]) <= 0):
        raise DomainError("angles on a coordinate singularity")
    sines = SphericalChart(hs)._sine_product(phi)
    return math.factorial(n) / 2 * h_k(hs.space, r) ** (2 * n) * sines


def mu_direct(hs: ModelHypersurface, r: float, phi) -> float:
    """iota_N Omega evaluated on the spherical chart frame, from first principles."""
    chart = SphericalChart(hs)
    x = chart.to_ambient(r, phi)
    N = sr_normal(hs, x)
    return ambient_volume_closed(hs.space)(x, N, *chart.frame(r, phi))


def is_characteristic(hs: ModelHypersurface, p) -> tuple[bool, float]:
    """Characteristic-point test with witness sum_i (X_i u)^2 over an orthonormal D-frame."""
    p = hs.check_on_surface(p)
    frame = contact_frame(hs.space, p)
    witness = float(np.sum(frame[:, hs.u_index] ** 2))
    return witness <= hs.char_tolerance**2, witness


def _require_regular(hs: ModelHypersurface, p) -> np.ndarray:
    char, _ = is_characteristic(hs, p)
    if char:
        raise SingularityError(f"characteristic point {np.asarray(p).tolist()}")
    return np.asarray(p, dtype=float)


def _orientation_sign(hs: ModelHypersurface, p: np.ndarray, normal: np.ndarray) -> float:
    z = hs.to_chart(p)
    val = float(hs.chart_density(z, normal=normal))
    return 1.0 if val > 0 else -1.0


def sr_normal(hs: ModelHypersurface, p, method: str = "closed") -> np.ndarray:
    """Unit horizontal normal to W, oriented so that iota_N Omega > 0 on the chart."""
    p = _require_regular(hs, p)
    if method == "closed":
        return hs.normal_closed(p)
    if method != "generic":
        raise ValueError(f"unknown method {method!r}")
    X = contact_frame(hs.space, p)
    Xu = X[:, hs.u_index]
    N = Xu @ X / np.sqrt(np.sum(Xu**2))
    return _orientation_sign(hs, p, N) * N


def riemannian_normal_eps(hs: ModelHypersurface, p, eps: float) -> np.ndarray:
    """Unit normal of S for g + eps^-2 theta0^2; defined at characteristic points too."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    p = hs.check_on_surface(p)
    X = contact_frame(hs.space, p)
    Xu = X[:, hs.u_index]
    X0 = hs.space.reeb_vectors(p)
    X0u = X0[hs.u_index]
    Ne = (Xu @ X + eps**2 * X0u * X0) / np.sqrt(np.sum(Xu**2) + eps**2 * X0u**2)
    return _orientation_sign(hs, p, Ne) * Ne


@dataclass(frozen=True)
class HorizontalFrame:
    base: np.ndarray
    vectors: np.ndarray  # rows, ambient components


def horizontal_frame(hs: ModelHypersurface, p) -> HorizontalFrame:
    """Deterministic g-orthonormal frame of W = D ∩ TS at p."""
    p = _require_regular(hs, p)
    ms = hs.space
    rows = [ms.omega_coeffs(p), np.eye(ms.dim)[hs.u_index]]
    c = ms.constraint_covector(p)
    if c is not None:
        rows.append(c)
    Y = constrained_orthonormal_basis(np.vstack(rows), ms.metric_matrix, 2 * hs.n - 1, where=p)
    return HorizontalFrame(p, Y)


@dataclass(frozen=True)
class QuasiContactResult:
    rank: int
    kernel: np.ndarray  # ambient, g-unit
    singular_values: np.ndarray
    radial_angle: float


def quasi_contact_check(hs: ModelHypersurface, p) -> QuasiContactResult:
    """Rank of d zeta on W and its kernel line, compared with the radial field."""
    if hs.n < 2:
        raise UnsupportedError("for n = 1 the distribution W is a line field")
    frame = horizontal_frame(hs, p)
    Y = frame.vectors
    M = Y @ hs.space.d_omega_matrix @ Y.T
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > RANK_TOL))
    kernel = vt[-1] @ Y
    R = hs.radial_field(frame.base)
    along = float(kernel @ hs.space.metric_matrix @ R)
    resid = kernel - along * R
    angle = math.atan2(math.sqrt(max(float(resid @ hs.space.metric_matrix @ resid), 0.0)), abs(along))
    return QuasiContactResult(rank, kernel, s, angle)


def bracket_generating_rank(hs: ModelHypersurface, p, h: float = FD_STEP) -> int:
    """Rank of span{Y_i, [Y_i, Y_j]} in the normal chart (full rank is 2n)."""
    p = _require_regular(hs, p)
    z0 = hs.to_chart(p)
    order = hs.chart_frame_order(z0)
    fields = [VectorField(lambda z, i=i: hs.chart_frame(z, order)[i]) for i in range(2 * hs.n - 1)]
    vecs = [F(z0) for F in fields]
    for i in range(len(fields)):
        for j in range(i + 1, len(fields)):
            vecs.append(lie_bracket(fields[i], fields[j], z0, h))
    return numerical_rank(np.array(vecs))


def heisenberg2_frame() -> list[VectorField]:
    """The fields U_1..U_4 on z = 0 in H^2, coordinates (x1, y1, x2, y2, z)."""
    patterns = [
        lambda x1, y1, x2, y2: (x1, y1, x2, y2),
        lambda x1, y1, x2, y2: (y2, x2, -y1, -x1),
        lambda x1, y1, x2, y2: (x2, -y2, -x1, y1),
        lambda x1, y1, x2, y2: (y1, -x1, y2, -x2),
    ]

    def make(pattern):
        def ev(x):
            s = math.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2 + x[3] ** 2)
            return np.array([*pattern(*x[:4]), 0.0]) / s
        return ev

    return [VectorField(make(pt), name=f"U{i + 1}") for i, pt in enumerate(patterns)]
