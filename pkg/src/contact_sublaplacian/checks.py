"""Numerical identity checks, grouped into suites that return ``Record`` lists.

Each record carries a short anchor string naming the identity it measures.
The CLI serializes these records and the acceptance tests compare them with
their thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .diffusion import (PathStats, RadialProcess, SimConfig, compare_distributions,
                        simulate_full, simulate_radial_reference)
from .exterior import exterior_derivative_1form, lie_bracket
from .hypersurface import (ModelHypersurface, bracket_generating_rank,
                           heisenberg2_frame, horizontal_frame, induced_volume_density, mu_direct,
                           quasi_contact_check, riemannian_normal_eps, sr_normal)
from .model_spaces import (Family, ModelSpace, ambient_metric_eps, contact_form,
                           reeb_residuals, verify_normalization)
from .sublaplacian import (DEFAULT_EPS, Method, chart_grid, convergence_study, divergence_mu,
                           fit_order, grid_radius_max, sublaplacian_apply, sublaplacian_chart)
from .testfunctions import bump_family, power_of_radius


@dataclass(frozen=True)
class Record:
    name: str
    anchor: str
    value: float
    threshold: float
    relation: str = "<="  # one of "<=", ">=", "=="

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if not math.isfinite(v) and self.relation != ">=":
            return False
        if self.relation == "<=":
            return v <= t
        if self.relation == ">=":
            return v >= t
        return v == t

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "value": self.value,
                "threshold": self.threshold, "relation": self.relation, "pass": bool(self.passed)}


DEFAULT_TOLERANCES = {
    "normalization": 1e-7,
    "reeb_omega": 1e-9,
    "reeb_domega": 1e-7,
    "normal": 1e-9,
    "normal_eps_order": 1.8,
    "volume_relative": 1e-8,
    "radial_divergence": 1e-6,
    "frame_divergence": 1e-8,
    "structure_dzeta": 1e-10,
    "structure_bracket": 1e-8,
    "kernel_angle": 1e-6,
    "two_path": 1e-6,
    "closed_form": 1e-6,
    "harmonic": 1e-6,
    "convergence_order": 1.5,
    "ks": 0.05,
    "hit_fraction": 0.005,
    "moment_floor": 0.05,
    "retraction": 1e-12,
}


def _tol(tolerances: Optional[dict], key: str) -> float:
    return (tolerances or {}).get(key, DEFAULT_TOLERANCES[key])


# -- model spaces ----------------------------------------------------------------

def model_space_suite(ms: ModelSpace, samples: int = 1000, seed: int = 0,
                      tolerances: Optional[dict] = None) -> list[Record]:
    norm = verify_normalization(ms, samples, seed)
    r_om, r_dom = reeb_residuals(ms, samples, seed)
    return [
        Record(f"{ms.label}: normalization residual", "(d omega)^n|_D = n! vol_g",
               norm, _tol(tolerances, "normalization")),
        Record(f"{ms.label}: |omega(X0) - 1|", "omega(X0) = 1", r_om, _tol(tolerances, "reeb_omega")),
        Record(f"{ms.label}: |d omega(X0, v)|", "d omega(X0, .) = 0", r_dom,
               _tol(tolerances, "reeb_domega")),
    ]


# -- grids -------------------------------------------------------------------------

def interior_grid(hs: ModelHypersurface, count: int, seed: int = 0) -> np.ndarray:
    """Ambient points with radii from 0.2 to ``grid_radius_max``."""
    return hs.from_chart(chart_grid(hs, count, seed=seed))


def normal_eps_grid(hs: ModelHypersurface, count: int, seed: int = 0) -> np.ndarray:
    """Compact grid on which eps |X0 u / N u| stays moderate over the eps schedule."""
    rng = (1.0, 3.0) if hs.family is Family.HEISENBERG else (1.0 / hs.k, 2.0 / hs.k)
    return hs.from_chart(chart_grid(hs, count, rng, seed=seed))


def spherical_grid(hs: ModelHypersurface, count: int, seed: int = 0, margin: float = 0.05):
    """(r, phi) samples at distance >= margin from the chart's singular tubes."""
    rng = np.random.default_rng(seed)
    n = hs.n
    hi = hs.radius_max - margin if hs.family is Family.SPHERE else grid_radius_max(hs)
    out = []
    for _ in range(count):
        r = rng.uniform(max(margin, 0.2), hi)
        phi = np.concatenate([rng.uniform(margin, math.pi - margin, 2 * n - 2),
                              rng.uniform(0.0, 2 * math.pi, 1)])
        out.append((r, phi))
    return out


# -- hypersurface --------------------------------------------------------------------

def normal_suite(hs: ModelHypersurface, count: int = 200, seed: int = 0,
                 eps_schedule=(0.2, 0.1, 0.05, 0.025), tolerances: Optional[dict] = None) -> list[Record]:
    ms = hs.space
    Q = ms.metric_matrix
    omega = contact_form(ms)
    res_om = res_nn = res_ny = res_gen = 0.0
    for x in interior_grid(hs, count, seed):
        N = sr_normal(hs, x)
        Ng = sr_normal(hs, x, method="generic")
        Y = horizontal_frame(hs, x).vectors
        res_om = max(res_om, abs(omega(x, N)))
        res_nn = max(res_nn, abs(N @ Q @ N - 1))
        res_ny = max(res_ny, float(np.max(np.abs(Y @ Q @ N))))
        res_gen = max(res_gen, float(np.max(np.abs(N - Ng))))
    errs = []
    X = normal_eps_grid(hs, count, seed)
    for e in eps_schedule:
        worst = 0.0
        for x in X:
            d = riemannian_normal_eps(hs, x, e) - sr_normal(hs, x)
            worst = max(worst, math.sqrt(d @ ambient_metric_eps(ms, x, 1.0) @ d))
        errs.append(worst)
    tol = _tol(tolerances, "normal")
    lab = ms.label
    return [
        Record(f"{lab}: |omega(N)|", "omega(N) = 0", res_om, tol),
        Record(f"{lab}: |g(N,N) - 1|", "g(N,N) = 1", res_nn, tol),
        Record(f"{lab}: |g(N,Y_i)|", "N orthogonal to W", res_ny, tol),
        Record(f"{lab}: closed vs generic N", "N = sum (X_i u) X_i / |.|", res_gen, tol),
        Record(f"{lab}: N_eps -> N fitted order", "N_eps -> N uniformly on compacts",
               fit_order(eps_schedule, errs), _tol(tolerances, "normal_eps_order"), ">="),
    ]


def volume_suite(hs: ModelHypersurface, count: int = 200, seed: int = 0,
                 tolerances: Optional[dict] = None) -> list[Record]:
    worst = 0.0
    for r, phi in spherical_grid(hs, count, seed):
        rho = induced_volume_density(hs, r, phi)
        worst = max(worst, abs(mu_direct(hs, r, phi) / rho - 1))
    recs = [Record(f"{hs.space.label}: chart density vs iota_N Omega", "mu = (n!/2) h_k^{2n} prod sin",
                   worst, _tol(tolerances, "volume_relative"))]
    if hs.family is Family.HEISENBERG and hs.n == 1:
        exact = max(abs(induced_volume_density(hs, r, phi) - 0.5 * r * r) / (0.5 * r * r)
                    for r, phi in spherical_grid(hs, count, seed))
        recs.append(Record("H^1: rho(r) - r^2/2 (relative)", "mu = r^2/2 dr dphi", exact, 4e-16))
    return recs


def radial_divergence_closed(hs: ModelHypersurface, r):
    n, k = hs.n, hs.k
    if hs.family is Family.HEISENBERG:
        return 2 * n / r
    if hs.family is Family.SPHERE:
        return 2 * n * k / math.tan(k * r)
    return 2 * n * k / math.tanh(k * r)


def divergence_suite(hs: ModelHypersurface, count: int = 50, seed: int = 0,
                     tolerances: Optional[dict] = None) -> list[Record]:
    """div_mu R against its closed form; on H^2 also the U-field divergences."""
    hi = grid_radius_max(hs)
    radii = np.linspace(0.2, hi, count)
    rng = np.random.default_rng(seed)

    def R_chart(Z):
        return hs.chart_components(Z, hs.radial_field(hs.from_chart(Z)))

    worst = 0.0
    for r in radii:
        d = rng.normal(size=2 * hs.n)
        z = r * d / np.linalg.norm(d)
        worst = max(worst, abs(divergence_mu(hs, R_chart, z, chart=True) - radial_divergence_closed(hs, r)))
    anchor = {Family.HEISENBERG: "div_mu(R)=2n/r", Family.SPHERE: "div_mu(R)=2nk cot(kr)",
              Family.ADS: "div_mu(R)=2nk coth(kr)"}[hs.family]
    recs = [Record(f"{hs.space.label}: div_mu R", anchor, worst, _tol(tolerances, "radial_divergence"))]
    if hs.family is Family.HEISENBERG and hs.n == 2:
        U1, U2, U3, _ = heisenberg2_frame()
        w1 = w23 = 0.0
        for x in interior_grid(hs, count, seed):
            s = math.sqrt(float(np.sum(x[:4] ** 2)))
            w1 = max(w1, abs(divergence_mu(hs, U1, x) - 4 / s))
            w23 = max(w23, abs(divergence_mu(hs, U2, x)), abs(divergence_mu(hs, U3, x)))
        tol = _tol(tolerances, "frame_divergence")
        recs += [Record("H^2: div_mu U1 - 4/|y|", "div_mu U1 = 4/|y|", w1, tol),
                 Record("H^2: div_mu U2, div_mu U3", "div_mu U2 = div_mu U3 = 0", w23, tol)]
    return recs


def h2_structure_suite(count: int = 1000, seed: int = 0, bracket_points: int = 200,
                       tolerances: Optional[dict] = None) -> list[Record]:
    hs = ModelHypersurface(ModelSpace("heisenberg", 2))
    U1, U2, U3, U4 = heisenberg2_frame()
    dzeta = exterior_derivative_1form(contact_form(hs.space))
    X = interior_grid(hs, count, seed)
    w_dz = w_br = w_ang = 0.0
    ranks_ok = True
    for x in X:
        s = math.sqrt(float(np.sum(x[:4] ** 2)))
        w_dz = max(w_dz, abs(dzeta(x, U2(x), U3(x)) + 1))
        w_br = max(w_br, float(np.max(np.abs(lie_bracket(U2, U3, x) + 2 * U4(x) / s))))
        qc = quasi_contact_check(hs, x)
        ranks_ok &= qc.rank == 2
        u1 = U1(x)
        cosang = abs(float(qc.kernel @ u1))
        w_ang = max(w_ang, math.atan2(float(np.linalg.norm(qc.kernel - (qc.kernel @ u1) * u1)), cosang))
    brank = min(bracket_generating_rank(hs, x) for x in X[:bracket_points])
    return [
        Record("H^2: |d zeta(U2,U3) + 1|", "d zeta(U2,U3) = -1", w_dz, _tol(tolerances, "structure_dzeta")),
        Record("H^2: |[U2,U3] + 2 U4/|y||", "[U2,U3] = -2 U4/|y|", w_br, _tol(tolerances, "structure_bracket")),
        Record("H^2: rank d zeta|_W == 2 everywhere", "quasi-contact: rank 2n-2",
               2.0 if ranks_ok else 0.0, 2.0, "=="),
        Record("H^2: angle(ker d zeta|_W, U1)", "ker d zeta|_W = span U1", w_ang, _tol(tolerances, "kernel_angle")),
        Record("H^2: min rank span{Y_i,[Y_i,Y_j]}", "W bracket generating", float(brank), 4.0, "=="),
    ]


def quasi_contact_suite(hs: ModelHypersurface, count: int = 200, seed: int = 0,
                        tolerances: Optional[dict] = None) -> list[Record]:
    if hs.n < 2:
        return []
    worst_angle, ranks_ok = 0.0, True
    X = interior_grid(hs, count, seed)
    for x in X:
        qc = quasi_contact_check(hs, x)
        ranks_ok &= qc.rank == 2 * hs.n - 2
        worst_angle = max(worst_angle, qc.radial_angle)
    brank = min(bracket_generating_rank(hs, x) for x in X[: min(count, 50)])
    lab = hs.space.label
    return [
        Record(f"{lab}: rank d zeta|_W == 2n-2", "quasi-contact structure",
               float(2 * hs.n - 2) if ranks_ok else -1.0, float(2 * hs.n - 2), "=="),
        Record(f"{lab}: angle(ker d zeta|_W, R)", "characteristic foliation radial", worst_angle,
               _tol(tolerances, "kernel_angle")),
        Record(f"{lab}: min rank span{{Y_i,[Y_i,Y_j]}}", "W bracket generating", float(brank),
               float(2 * hs.n), "=="),
    ]


# -- sub-Laplacian -------------------------------------------------------------------

def sublaplacian_suite(hs: ModelHypersurface, count: int = 200, seed: int = 0,
                       tolerances: Optional[dict] = None) -> list[Record]:
    grid = chart_grid(hs, count, seed=seed)
    lab = hs.space.label
    worst = 0.0
    for f in bump_family(hs):
        a = sublaplacian_chart(hs, f, grid)
        b = np.array([sublaplacian_apply(hs, f, z, Method.FRAME, chart=True).value for z in grid])
        worst = max(worst, float(np.max(np.abs(a - b))))
    recs = [Record(f"{lab}: |DivGrad - FrameFormula|", "Delta = sum Y_i^2 + (div_mu Y_i) Y_i",
                   worst, _tol(tolerances, "two_path"))]
    if hs.family is Family.HEISENBERG:
        f = power_of_radius(hs, -(2 * hs.n - 1))
        recs.append(Record(f"{lab}: |Delta r^(1-2n)|", "Delta f = f'' + (2n/r) f'",
                           float(np.max(np.abs(sublaplacian_chart(hs, f, grid)))),
                           _tol(tolerances, "harmonic")))
        if hs.n == 2:
            worst_c = 0.0
            for f in bump_family(hs):
                a = sublaplacian_chart(hs, f, grid)
                c = np.array([sublaplacian_apply(hs, f, z, Method.CLOSED, chart=True).value for z in grid])
                worst_c = max(worst_c, float(np.max(np.abs(a - c))))
            recs.append(Record("H^2: |DivGrad - closed form|", "Delta = U1^2+U2^2+U3^2+4U1/|y|",
                               worst_c, _tol(tolerances, "closed_form")))
    return recs


def convergence_suite(hs: ModelHypersurface, eps_schedule=DEFAULT_EPS, count: int = 200,
                      seed: int = 0, tolerances: Optional[dict] = None):
    """Returns (records, reports) for the three bump functions."""
    grid = chart_grid(hs, count, seed=seed)
    recs, reports = [], []
    for f in bump_family(hs):
        rep = convergence_study(hs, f, grid, eps_schedule)
        reports.append(rep)
        lab = f"{hs.space.label} {f.name}"
        recs.append(Record(f"{lab}: sup error strictly decreasing", "Delta_eps f -> Delta f uniformly",
                           1.0 if rep.strictly_decreasing else 0.0, 1.0, "=="))
        recs.append(Record(f"{lab}: fitted order", "Delta_eps f -> Delta f uniformly",
                           rep.fitted_order, _tol(tolerances, "convergence_order"), ">="))
    return recs, reports


# -- diffusion -----------------------------------------------------------------------

@dataclass
class SimulationOutcome:
    config: SimConfig
    full: PathStats
    reference: PathStats

    @property
    def comparison(self):
        return compare_distributions(self.full.terminal, self.reference.terminal)


def run_simulation(cfg: SimConfig) -> SimulationOutcome:
    hs = ModelHypersurface(cfg.space)
    full = simulate_full(hs, cfg)
    ref = simulate_radial_reference(RadialProcess.for_space(cfg.space), cfg)
    return SimulationOutcome(cfg, full, ref)


def simulation_suite(outcome: SimulationOutcome, tolerances: Optional[dict] = None) -> list[Record]:
    cfg, full = outcome.config, outcome.full
    ms = cfg.space
    lab = ms.label
    recs = [
        Record(f"{lab}: hit fraction (delta={cfg.hit_threshold:g})", "a.s. avoids characteristic points",
               full.hit_fraction, _tol(tolerances, "hit_fraction")),
        Record(f"{lab}: guard exits", "no explosion", float(full.explosions), 0.0),
        Record(f"{lab}: max retraction residual", "retraction onto S", full.max_retraction_residual,
               _tol(tolerances, "retraction")),
    ]
    if ms.family is Family.HEISENBERG:
        gap = abs(full.mean_r2 - cfg.r0**2 - (2 * ms.n + 1) * cfg.horizon)
        recs.append(Record(f"{lab}: |E r_T^2 - r0^2 - (2n+1)T|", "E r_t^2 = r0^2 + d t (Bessel)",
                           gap, max(3 * full.se_r2, _tol(tolerances, "moment_floor"))))
    return recs


def radial_law_suite(outcome: SimulationOutcome, tolerances: Optional[dict] = None) -> list[Record]:
    ms = outcome.config.space
    kind = RadialProcess.for_space(ms).kind.value
    return [Record(f"{ms.label}: KS(full radial, {kind} reference)",
                   f"radial part is a {kind} process of order 2n+1",
                   outcome.comparison.ks, _tol(tolerances, "ks"))]


def all_pass(records: Iterable[Record]) -> bool:
    return all(r.passed for r in records)
