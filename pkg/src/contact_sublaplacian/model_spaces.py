"""The three contact sub-Riemannian model families.

Heisenberg group on R^{2n+1}, sphere S^{2n+1} in R^{2n+2} and anti-de Sitter
space H^{2n+1} in R^{2n,2}, each with its normalised contact form, fibre
metric on the contact distribution, Reeb field and ambient volume form.

The coordinate kernels (``omega_coeffs``, ``reeb_vectors``, ...) broadcast
over leading axes so that the Monte Carlo code can call them on batches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .exterior import Form, OneForm, VectorField, one_form, two_form, wedge
from .linalg import constrained_orthonormal_basis, null_space


class Family(str, Enum):
    HEISENBERG = "heisenberg"
    SPHERE = "sphere"
    ADS = "ads"

    @classmethod
    def parse(cls, name: str) -> "Family":
        aliases = {"heis": cls.HEISENBERG, "h": cls.HEISENBERG,
                   "anti-de-sitter": cls.ADS, "antidesitter": cls.ADS, "hyperbolic": cls.ADS}
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown model family {name!r}") from None


@dataclass(frozen=True)
class ModelSpace:
    family: Family
    n: int
    k: Optional[float] = None
    box: float = 2.0  # Heisenberg sampling half-width

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if self.family is Family.HEISENBERG:
            object.__setattr__(self, "k", None)
        else:
            k = 1.0 if self.k is None else float(self.k)
            if not k > 0:
                raise ValueError(f"k must be positive, got {self.k}")
            object.__setattr__(self, "k", k)

    @property
    def dim(self) -> int:
        """Ambient coordinate dimension."""
        return 2 * self.n + 1 if self.family is Family.HEISENBERG else 2 * self.n + 2

    @property
    def label(self) -> str:
        if self.family is Family.HEISENBERG:
            return f"heisenberg(n={self.n})"
        return f"{self.family.value}(n={self.n},k={self.k:g})"

    # -- contact form -------------------------------------------------------

    @property
    def _pairs(self) -> int:
        return self.n if self.family is Family.HEISENBERG else self.n + 1

    @property
    def _scale(self) -> float:
        return 0.5 if self.family is Family.HEISENBERG else 0.5 / self.k**2

    def omega_coeffs(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = np.zeros_like(x)
        c, m = self._scale, self._pairs
        a[..., 0:2 * m:2] = -c * x[..., 1:2 * m:2]
        a[..., 1:2 * m:2] = c * x[..., 0:2 * m:2]
        if self.family is Family.HEISENBERG:
            a[..., 2 * self.n] = -1.0
        return a

    @property
    def omega_jacobian(self) -> np.ndarray:
        """``D[j, i] = d a_j / d x_i`` (constant: the coefficients are linear)."""
        D = np.zeros((self.dim, self.dim))
        c = self._scale
        for i in range(self._pairs):
            D[2 * i, 2 * i + 1] = -c
            D[2 * i + 1, 2 * i] = c
        return D

    @property
    def d_omega_matrix(self) -> np.ndarray:
        D = self.omega_jacobian
        return D.T - D

    # -- metric, Reeb field, constraint ---------------------------------------

    @property
    def metric_matrix(self) -> np.ndarray:
        """Quadratic form whose restriction to the contact distribution is g."""
        m = self.dim
        if self.family is Family.HEISENBERG:
            Q = np.eye(m)
            Q[-1, -1] = 0.0
            return Q
        if self.family is Family.SPHERE:
            return np.eye(m) / self.k**2
        return np.diag([1.0] * (2 * self.n) + [-1.0, -1.0]) / self.k**2

    @property
    def reeb_matrix(self) -> np.ndarray:
        """Linear part K with X0(x) = K x (+ constant for Heisenberg)."""
        m = self.dim
        K = np.zeros((m, m))
        if self.family is Family.HEISENBERG:
            return K
        s = 2 * self.k**2
        for i in range(self.n + 1):
            sign = 1.0 if (self.family is Family.SPHERE or i == self.n) else -1.0
            K[2 * i + 1, 2 * i] = sign * s
            K[2 * i, 2 * i + 1] = -sign * s
        return K

    def reeb_vectors(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.family is Family.HEISENBERG:
            out = np.zeros_like(x)
            out[..., -1] = -1.0
            return out
        return x @ self.reeb_matrix.T

    def quadric(self, x: np.ndarray) -> np.ndarray:
        """Constraint value; zero on the model space (always zero for Heisenberg)."""
        x = np.asarray(x, dtype=float)
        if self.family is Family.HEISENBERG:
            return np.zeros(x.shape[:-1])
        if self.family is Family.SPHERE:
            return np.sum(x**2, axis=-1) - 1.0
        return self.lorentz(x, x) + 1.0

    def lorentz(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        v, w = np.asarray(v, dtype=float), np.asarray(w, dtype=float)
        s = 2 * self.n
        return (np.sum(v[..., :s] * w[..., :s], axis=-1)
                - v[..., s] * w[..., s] - v[..., s + 1] * w[..., s + 1])

    def constraint_covector(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Covector whose kernel is the tangent space of the model space at x."""
        if self.family is Family.HEISENBERG:
            return None
        x = np.asarray(x, dtype=float)
        if self.family is Family.SPHERE:
            return x.copy()
        c = x.copy()
        c[..., 2 * self.n:] *= -1.0
        return c

    def tangent_basis(self, p: np.ndarray) -> np.ndarray:
        """Euclidean-orthonormal basis (columns) of the tangent space at p."""
        c = self.constraint_covector(p)
        if c is None:
            return np.eye(self.dim)
        return null_space(c[None, :])

    def check_point(self, p: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            raise DomainError(f"expected a finite point of length {self.dim}")
        if abs(float(self.quadric(p))) > tol:
            raise DomainError(f"point {p.tolist()} is not on {self.label}")
        return p


@dataclass(frozen=True)
class ContactData:
    omega: OneForm
    d_omega: Form
    metric: Callable[[np.ndarray, np.ndarray, np.ndarray], float]
    reeb: VectorField
    theta0: OneForm
    Omega: Form
    space: ModelSpace = field(repr=False, default=None)


def contact_form(ms: ModelSpace) -> OneForm:
    D = ms.omega_jacobian
    return one_form(ms.omega_coeffs, lambda p: D, name="omega")


def d_omega_form(ms: ModelSpace) -> Form:
    """Closed-form d(omega); the constant skew matrix of the model."""
    B = ms.d_omega_matrix
    return two_form(lambda p: B, name="domega")


def fibre_metric(ms: ModelSpace, p, v, w) -> float:
    """g(v, w) for v, w in the contact distribution at p (evaluated raw otherwise)."""
    return float(np.asarray(v) @ ms.metric_matrix @ np.asarray(w))


def reeb_field(ms: ModelSpace) -> VectorField:
    K = ms.reeb_matrix
    return VectorField(ms.reeb_vectors, lambda p: K, name="X0")


def ambient_volume(ms: ModelSpace) -> Form:
    """omega ^ (d omega)^n by shuffle expansion."""
    dw = d_omega_form(ms)
    return wedge(contact_form(ms), *([dw] * ms.n))


def ambient_volume_closed(ms: ModelSpace) -> Form:
    """The same volume form through its coordinate expression (a determinant)."""
    nf = math.factorial(ms.n)
    if ms.family is Family.HEISENBERG:
        return Form(ms.dim, lambda p, *vs: -nf * np.linalg.det(np.array(vs).T), name="Omega")
    c = nf / (2 * ms.k ** (2 * ms.n + 2))
    return Form(ms.dim - 1, lambda p, *vs: c * np.linalg.det(np.column_stack([p, *vs])),
                name="Omega")


def contact_data(ms: ModelSpace) -> ContactData:
    omega = contact_form(ms)
    return ContactData(omega=omega, d_omega=d_omega_form(ms),
                       metric=lambda p, v, w: fibre_metric(ms, p, v, w),
                       reeb=reeb_field(ms), theta0=omega,
                       Omega=ambient_volume_closed(ms), space=ms)


def heisenberg_frame_fields(n: int) -> list[VectorField]:
    """The left-invariant orthonormal frame X_1..X_{2n} of the contact distribution."""
    m = 2 * n + 1
    fields = []
    for i in range(2 * n):
        partner = i + 1 if i % 2 == 0 else i - 1
        coef = -0.5 if i % 2 == 0 else 0.5

        def ev(x, i=i, partner=partner, coef=coef):
            v = np.zeros(m)
            v[i] = 1.0
            v[-1] = coef * x[partner]
            return v

        def jac(x, partner=partner, coef=coef):
            J = np.zeros((m, m))
            J[-1, partner] = coef
            return J

        fields.append(VectorField(ev, jac, name=f"X{i + 1}"))
    return fields


def contact_frame(ms: ModelSpace, p: np.ndarray) -> np.ndarray:
    """A g-orthonormal frame of the contact distribution at p (rows)."""
    p = np.asarray(p, dtype=float)
    if ms.family is Family.HEISENBERG:
        return np.array([X(p) for X in heisenberg_frame_fields(ms.n)])
    C = np.vstack([ms.omega_coeffs(p), ms.constraint_covector(p)])
    return constrained_orthonormal_basis(C, ms.metric_matrix, 2 * ms.n, where=p)


def ambient_metric_eps(ms: ModelSpace, p: np.ndarray, eps: float) -> np.ndarray:
    """Matrix of the Riemannian approximation g + eps^-2 theta0^2 on tangent vectors at p."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    p = np.asarray(p, dtype=float)
    a = ms.omega_coeffs(p)
    X0 = ms.reeb_vectors(p)
    P = np.eye(ms.dim) - np.outer(X0, a)  # v -> horizontal part of v
    return P.T @ ms.metric_matrix @ P + np.outer(a, a) / eps**2


def sample_point(ms: ModelSpace, rng: np.random.Generator) -> np.ndarray:
    if ms.family is Family.HEISENBERG:
        return rng.uniform(-ms.box, ms.box, size=ms.dim)
    x = rng.standard_normal(ms.dim)
    if ms.family is Family.SPHERE:
        return x / np.linalg.norm(x)
    s = 2 * ms.n
    t = x[s:] / np.linalg.norm(x[s:])
    x[s:] = t * np.sqrt(1.0 + np.sum(x[:s] ** 2))
    return x


def _oriented_contact_frame(ms: ModelSpace, p: np.ndarray, Omega: Form) -> np.ndarray:
    frame = contact_frame(ms, p)
    if Omega(p, *frame, ms.reeb_vectors(p)) < 0:
        frame[0] = -frame[0]
    return frame


def verify_normalization(ms: ModelSpace, samples: int = 1000, seed: int = 0) -> float:
    """Max over sampled points of |(d omega)^n(oriented orthonormal frame) - n!|."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    dwn = wedge(*([d_omega_form(ms)] * ms.n))
    Omega = ambient_volume_closed(ms)
    target = math.factorial(ms.n)
    worst = 0.0
    for _ in range(samples):
        p = sample_point(ms, rng)
        frame = _oriented_contact_frame(ms, p, Omega)
        worst = max(worst, abs(dwn(p, *frame) - target))
    return worst


def reeb_residuals(ms: ModelSpace, samples: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Max |omega(X0) - 1| and max over unit tangent v of |d omega(X0, v)|."""
    rng = np.random.default_rng(seed)
    omega, dw, X0 = contact_form(ms), d_omega_form(ms), reeb_field(ms)
    r1 = r2 = 0.0
    for _ in range(samples):
        p = sample_point(ms, rng)
        x0 = X0(p)
        r1 = max(r1, abs(omega(p, x0) - 1.0))
        T = ms.tangent_basis(p)
        covector = np.array([dw(p, x0, T[:, j]) for j in range(T.shape[1])])
        r2 = max(r2, float(np.linalg.norm(covector)))
    return r1, r2
