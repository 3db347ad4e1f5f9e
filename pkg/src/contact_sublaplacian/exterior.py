"""Point-wise exterior calculus on low-dimensional ambient spaces.

Forms, vector fields and scalar fields are stored extensionally, as
evaluators at points. Points and tangent vectors are plain 1-d numpy
arrays; a tangent vector is always understood to be based at the point it
is passed alongside.

Derivatives fall back on central differences with one level of Richardson
extrapolation whenever an analytic derivative is not supplied.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError

FD_STEP = 1e-4


def richardson_diff(fun: Callable[[float], np.ndarray], h: float = FD_STEP) -> np.ndarray:
    """Derivative at 0 of ``t -> fun(t)`` by central differences, O(h^4).

    ``fun`` may return scalars or arrays; combination is elementwise.
    """
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    d1 = (np.asarray(fun(h)) - np.asarray(fun(-h))) / (2 * h)
    d2 = (np.asarray(fun(h / 2)) - np.asarray(fun(-h / 2))) / h
    return (4 * d2 - d1) / 3


def fd_jacobian(fun: Callable[[np.ndarray], np.ndarray], p: np.ndarray,
                h: float = FD_STEP) -> np.ndarray:
    """Jacobian ``d fun_i / d x_j`` at ``p`` (columns are partials)."""
    p = np.asarray(p, dtype=float)
    cols = []
    for j in range(p.size):
        e = np.zeros_like(p)
        e[j] = 1.0
        cols.append(richardson_diff(lambda t: fun(p + t * e), h))
    return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class ScalarField:
    """A real function on ambient points, with an optional analytic gradient."""

    eval: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: Optional[tuple[float, float]] = None
    name: str = "f"

    def __call__(self, p: np.ndarray) -> float:
        return self.eval(np.asarray(p, dtype=float))

    def grad(self, p: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(p), dtype=float)
        return fd_jacobian(lambda x: np.asarray(self.eval(x)), p, h)


@dataclass(frozen=True)
class VectorField:
    """An ambient vector field; ``jacobian[i, j] = d V_i / d x_j`` if given."""

    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "V"

    def __call__(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(p, dtype=float)), dtype=float)

    def jac(self, p: np.ndarray, h: float = FD_STEP) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(p), dtype=float)
        return fd_jacobian(self.eval, p, h)


@dataclass(frozen=True)
class Form:
    """An alternating p-form given by its evaluator ``(p, v_1, ..., v_deg) -> float``."""

    degree: int
    evaluator: Callable[..., float]
    name: str = "form"

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("forms of degree < 1 are represented as ScalarField")

    def __call__(self, p, *vectors) -> float:
        if len(vectors) != self.degree:
            raise ValueError(
                f"{self.name} has degree {self.degree}, got {len(vectors)} vectors")
        return float(self.evaluator(np.asarray(p, dtype=float),
                                    *(np.asarray(v, dtype=float) for v in vectors)))


@dataclass(frozen=True)
class OneForm(Form):
    """A 1-form with coefficient covector ``coeffs(p)`` and optional ``d coeffs / dx``."""

    coeffs: Callable[[np.ndarray], np.ndarray] = None
    coeff_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None


def one_form(coeffs, coeff_jacobian=None, name="form") -> OneForm:
    return OneForm(1, lambda p, v: float(np.dot(coeffs(p), v)), name=name,
                   coeffs=coeffs, coeff_jacobian=coeff_jacobian)


def two_form(matrix: Callable[[np.ndarray], np.ndarray], name="form") -> Form:
    """2-form ``(v, w) -> v^T B(p) w`` for a skew matrix field ``B``."""
    return Form(2, lambda p, v, w: float(v @ matrix(p) @ w), name=name)


def _parity(perm: Sequence[int]) -> int:
    inversions = sum(1 for i, j in itertools.combinations(range(len(perm)), 2)
                     if perm[i] > perm[j])
    return -1 if inversions % 2 else 1


def _shuffles(total: int, first: int):
    for chosen in itertools.combinations(range(total), first):
        rest = tuple(i for i in range(total) if i not in chosen)
        yield chosen, rest, _parity(chosen + rest)


def _wedge2(a: Form, b: Form) -> Form:
    p, q = a.degree, b.degree
    shuffles = list(_shuffles(p + q, p))

    def evaluator(x, *vs):
        return sum(sign * a.evaluator(x, *(vs[i] for i in s1)) * b.evaluator(x, *(vs[i] for i in s2))
                   for s1, s2, sign in shuffles)

    return Form(p + q, evaluator, name=f"({a.name}^{b.name})")


def wedge(*forms: Form) -> Form:
    """Wedge product via shuffle sums, so that dx^dy(e_x, e_y) = 1."""
    if not forms:
        raise ValueError("wedge of no forms")
    result = forms[-1]
    for f in reversed(forms[:-1]):
        result = _wedge2(f, result)
    return result


def wedge_eval(forms: Sequence[Form], p, vectors: Sequence) -> float:
    """Evaluate ``forms[0] ^ ... ^ forms[-1]`` at ``p`` on ``vectors``.

    Products of 1-forms go through the determinant of the pairing matrix;
    anything else through the shuffle expansion.
    """
    if sum(f.degree for f in forms) != len(vectors):
        raise ValueError("sum of degrees must equal the number of vectors")
    p = np.asarray(p, dtype=float)
    if all(f.degree == 1 for f in forms):
        pairing = np.array([[f(p, v) for v in vectors] for f in forms])
        return float(np.linalg.det(pairing))
    return wedge(*forms)(p, *vectors)


def interior_product(omega: Form, V: VectorField, p, vectors: Sequence = ()) -> float:
    """``(iota_V omega)(p)(vectors)``: omega with V(p) prepended."""
    if omega.degree < 1:
        raise ValueError("interior product of a 0-form")
    if len(vectors) != omega.degree - 1:
        raise ValueError(f"need {omega.degree - 1} vectors, got {len(vectors)}")
    return omega(p, V(p), *vectors)


def exterior_derivative_1form(omega: OneForm, h: float = FD_STEP) -> Form:
    """``d omega`` for a 1-form with (analytic or differenced) coefficient partials.

    With ``D[j, i] = d a_j / d x_i``: ``d omega(v, w) = w^T D v - v^T D w``.
    """

    def jac(p):
        if omega.coeff_jacobian is not None:
            return np.asarray(omega.coeff_jacobian(p), dtype=float)
        return fd_jacobian(omega.coeffs, p, h)

    def evaluator(p, v, w):
        D = jac(p)
        return float(w @ D @ v - v @ D @ w)

    return Form(2, evaluator, name=f"d{omega.name}")


def lie_bracket(X: VectorField, Y: VectorField, p, h: float = FD_STEP) -> np.ndarray:
    """Components of ``[X, Y](p) = J_Y X - J_X Y``."""
    p = np.asarray(p, dtype=float)
    try:
        xv, yv = X(p), Y(p)
        out = Y.jac(p, h) @ xv - X.jac(p, h) @ yv
    except (ZeroDivisionError, FloatingPointError) as exc:
        raise DomainError(f"bracket undefined at {p}") from exc
    if not np.all(np.isfinite(out)):
        raise DomainError(f"bracket undefined at {p}")
    return out


def directional_derivative(f: ScalarField, V: VectorField, p, order: int = 1,
                           h: float = FD_STEP) -> float:
    """``(V f)(p)`` or ``(V (V f))(p)``, differencing along ``t -> p + t V(p)``.

    The second-order value nests the first-order operator, so ``V`` must be
    defined on an ambient neighbourhood of ``p``.
    """
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    p = np.asarray(p, dtype=float)

    def first(q):
        v = V(q)
        return float(richardson_diff(lambda t: f(q + t * v), h))

    if order == 1:
        return first(p)
    v = V(p)
    return float(richardson_diff(lambda t: first(p + t * v), h))
