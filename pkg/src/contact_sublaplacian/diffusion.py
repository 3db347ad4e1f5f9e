"""Monte Carlo simulation of the diffusion generated by Delta / 2.

The full process is stepped in ambient coordinates with Euler-Maruyama,

    x <- retract(x + b h + sigma sqrt(h) xi),

where sigma sigma^T = J A J^T is the projection onto W and b_a = Delta(x_a)/2 is
computed by the frame-free divergence in the normal chart. Its radial part is
compared with one-dimensional reference simulations of the Bessel, Legendre
and hyperbolic Bessel processes.

Every path owns a Philox stream seeded by ``SeedSequence(seed, spawn_key=(kind,
path))``; normals are drawn per path in fixed-size chunks of steps. Paths are
processed in fixed blocks, so results do not depend on the number of workers.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError, NumericalError
from .exterior import FD_STEP
from .hypersurface import ModelHypersurface, _require_regular, rotate
from .model_spaces import Family, ModelSpace
from .sublaplacian import chart_divergence

FULL_STREAM = 0
REFERENCE_STREAM = 1
NOISE_CHUNK = 64


@dataclass(frozen=True)
class SimConfig:
    family: str = "heisenberg"
    n: int = 1
    k: Optional[float] = None
    r0: float = 1.0
    step: float = 1e-3
    horizon: float = 1.0
    paths: int = 10_000
    seed: int = 0
    hit_threshold: float = 1e-3
    guard_radius: float = 1e3
    snapshot_times: tuple = ()
    random_direction: bool = False
    block_size: int = 1024
    workers: int = 1
    fd_step: float = FD_STEP

    def __post_init__(self):
        for name in ("r0", "step", "horizon", "hit_threshold", "guard_radius", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.step > self.horizon:
            raise ValueError("step must not exceed the horizon")
        if self.hit_threshold >= self.r0:
            raise ValueError("hit threshold must be below the start radius")
        if int(self.paths) < 1 or int(self.block_size) < 1 or int(self.workers) < 1:
            raise ValueError("paths, block_size and workers must be positive integers")
        times = tuple(float(t) for t in self.snapshot_times)
        if any(t <= 0 or t > self.horizon for t in times):
            raise ValueError("snapshot times must lie in (0, horizon]")
        object.__setattr__(self, "snapshot_times", times)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def space(self) -> ModelSpace:
        return ModelSpace(self.family, self.n, self.k)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.step))

    def snapshot_steps(self) -> list[int]:
        times = self.snapshot_times or (self.horizon,)
        return sorted({int(round(t / self.step)) for t in times} | {self.n_steps})

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["family"] = self.space.family.value
        d["k"] = self.space.k
        d["snapshot_times"] = list(self.snapshot_times)
        return d


class RadialKind(str, Enum):
    BESSEL = "bessel"
    LEGENDRE = "legendre"
    HYPBESSEL = "hypbessel"

    @classmethod
    def for_space(cls, ms: ModelSpace) -> "RadialKind":
        return {Family.HEISENBERG: cls.BESSEL, Family.SPHERE: cls.LEGENDRE,
                Family.ADS: cls.HYPBESSEL}[ms.family]


@dataclass(frozen=True)
class RadialProcess:
    """One-dimensional diffusion of order d = 2n + 1 with unit diffusion coefficient."""

    kind: RadialKind
    order: int
    k: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RadialKind(self.kind))
        if self.order < 2:
            raise ValueError("order must be at least 2")
        if not self.k > 0:
            raise ValueError("k must be positive")

    @property
    def n(self) -> float:
        return (self.order - 1) / 2

    @property
    def upper(self) -> float:
        return math.pi / self.k if self.kind is RadialKind.LEGENDRE else math.inf

    def drift(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind is RadialKind.BESSEL:
            return (self.order - 1) / (2 * r)
        if self.kind is RadialKind.LEGENDRE:
            return self.n * self.k / np.tan(self.k * r)
        return self.n * self.k / np.tanh(self.k * r)

    @classmethod
    def for_space(cls, ms: ModelSpace) -> "RadialProcess":
        return cls(RadialKind.for_space(ms), 2 * ms.n + 1, 1.0 if ms.k is None else ms.k)


@dataclass
class PathStats:
    terminal: np.ndarray
    paths: int
    completed: int
    hits: int
    explosions: int
    hit_fraction: float
    mean_r: float
    var_r: float
    se_r: float
    mean_r2: float
    var_r2: float
    se_r2: float
    seed: int
    stream: int
    snapshots: dict = field(default_factory=dict, repr=False)
    max_retraction_residual: float = 0.0
    clamped: int = 0

    def ecdf(self, x):
        s = np.sort(self.terminal)
        return np.searchsorted(s, np.asarray(x, dtype=float), side="right") / max(s.size, 1)

    def summary(self) -> dict:
        return {"paths": self.paths, "completed": self.completed, "hits": self.hits,
                "hit_fraction": self.hit_fraction, "explosions": self.explosions,
                "mean_r": self.mean_r, "var_r": self.var_r, "se_r": self.se_r,
                "mean_r2": self.mean_r2, "var_r2": self.var_r2, "se_r2": self.se_r2,
                "max_retraction_residual": self.max_retraction_residual,
                "clamped": self.clamped,
                "rng": {"seed": self.seed, "stream": self.stream,
                        "derivation": "SeedSequence(seed, spawn_key=(stream, path)) -> Philox"}}

    def write_snapshot_csv(self, directory, prefix: str) -> list[Path]:
        out = []
        for t, (r, hit) in sorted(self.snapshots.items()):
            path = Path(directory) / f"{prefix}_t{t:.6g}.csv"
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh, lineterminator="\n")
                wr.writerow(["path", "r", "hit"])
                for i in range(r.size):
                    wr.writerow([i, f"{r[i]:.16e}", int(hit[i])])
            out.append(path)
        return out


def _moments(sample: np.ndarray):
    m = sample.size
    if m == 0:
        return (math.nan,) * 6
    r2 = sample**2
    var_r = float(np.var(sample, ddof=1)) if m > 1 else 0.0
    var_r2 = float(np.var(r2, ddof=1)) if m > 1 else 0.0
    return (float(sample.mean()), var_r, math.sqrt(var_r / m),
            float(r2.mean()), var_r2, math.sqrt(var_r2 / m))


# -- random streams -----------------------------------------------------------

class _PathNoise:
    """Per-path Philox streams, read in chunks of NOISE_CHUNK steps."""

    def __init__(self, seed: int, stream: int, first: int, count: int, dim: int):
        self.gens = [np.random.Generator(np.random.Philox(
            np.random.SeedSequence(seed, spawn_key=(stream, first + i)))) for i in range(count)]
        self.dim = dim
        self.buf = None
        self.pos = NOISE_CHUNK

    def next(self) -> np.ndarray:
        if self.pos == NOISE_CHUNK:
            self.buf = np.stack([g.standard_normal((NOISE_CHUNK, self.dim)) for g in self.gens], axis=1)
            self.pos = 0
        out = self.buf[self.pos]
        self.pos += 1
        return out


# -- full process -------------------------------------------------------------

def diffusion_factor_chart(hs: ModelHypersurface, Z: np.ndarray) -> np.ndarray:
    """Chart factor [zhat | sqrt(kappa) Pi] with sigma sigma^T equal to the cometric.

    Pi is the Euclidean projector orthogonal to z and Jz; it is idempotent, so
    the factor needs no eigendecomposition. Shape (K, 2n, 2n + 1).
    """
    Z = np.asarray(Z, dtype=float)
    r = np.linalg.norm(Z, axis=-1)[..., None]
    zh = Z / r
    ch = rotate(Z) / r
    Pi = np.eye(Z.shape[-1]) - zh[..., :, None] * zh[..., None, :] - ch[..., :, None] * ch[..., None, :]
    root = np.sqrt(hs.conformal_factor(Z))[..., None, None]
    return np.concatenate([zh[..., :, None], root * Pi], axis=-1)


def coordinate_flux(hs: ModelHypersurface, W: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Row ``rows[i]`` of rho A J^T at chart point W[i]; column a is the densitized gradient of x_a.

    Uses A z = z and the profile form J = [a I + (a'/r) z z^T; (b'/r) z^T; 0].
    """
    W = np.asarray(W, dtype=float)
    K, m = W.shape
    r = np.linalg.norm(W, axis=-1)
    a, da_r, _, db_r = hs._profile(r)
    rho = math.factorial(hs.n) / 2 * r * (a / hs.k) ** (2 * hs.n)
    kappa = (hs.k / a) ** 2
    zh = W / r[:, None]
    ch = rotate(W) / r[:, None]
    sel = np.arange(K)
    zj, cj = zh[sel, rows], ch[sel, rows]
    A_row = (1 - kappa)[:, None] * zj[:, None] * zh - (kappa * cj)[:, None] * ch
    A_row[sel, rows] += kappa
    F = np.zeros((K, hs.space.dim))
    F[:, :m] = (rho * a)[:, None] * A_row + (rho * da_r * r**2 * zj)[:, None] * zh
    if hs.family is not Family.HEISENBERG:
        F[:, m] = rho * db_r * W[sel, rows]
    return F


def _drift_diffusion_chart(hs: ModelHypersurface, Z: np.ndarray, fd_step: float,
                           richardson: bool = False):
    """Ambient drift b = Delta(x)/2 and ambient diffusion factor at chart points Z."""
    r = np.linalg.norm(Z, axis=1)
    h = fd_step * np.minimum(1.0, r)
    div = chart_divergence(lambda W, rows: coordinate_flux(hs, W, rows), Z, h, richardson,
                           rowwise=True)
    b = 0.5 * div / hs.chart_density_closed(Z)[:, None]
    sigma = np.einsum("kia,kab->kib", hs.chart_jacobian(Z), diffusion_factor_chart(hs, Z))
    return b, sigma


def ito_coefficients(hs: ModelHypersurface, p, fd_step: float = FD_STEP):
    """(b, sigma) at an ambient point: b = Delta(x)/2, sigma sigma^T = projection onto W."""
    z = hs.to_chart(_require_regular(hs, p))
    b, sigma = _drift_diffusion_chart(hs, z[None], fd_step, richardson=True)
    return b[0], sigma[0]


def retract(hs: ModelHypersurface, x: np.ndarray) -> np.ndarray:
    """Return step proposals to S: clear u, then rescale onto the quadric."""
    x = np.array(x, dtype=float)
    x[..., hs.u_index] = 0.0
    fam = hs.family
    if fam is Family.SPHERE:
        x /= np.linalg.norm(x, axis=-1, keepdims=True)
    elif fam is Family.ADS:
        nn = 2 * hs.n
        q = np.sum(x[..., :nn] ** 2, axis=-1) - x[..., nn] ** 2
        if np.any(q >= 0) or np.any(x[..., nn] <= 0):
            raise NumericalError("step left the upper sheet of the hyperboloid")
        x /= np.sqrt(-q)[..., None]
    return x


def constraint_residual(hs: ModelHypersurface, x: np.ndarray) -> np.ndarray:
    """max(|u|, |quadric| / |x|^2): the quadric is scaled since its round-off grows with |x|^2."""
    res = np.abs(x[..., hs.u_index])
    if hs.family is not Family.HEISENBERG:
        res = np.maximum(res, np.abs(hs.space.quadric(x)) / np.sum(x**2, axis=-1))
    return res


def radial_extract(hs: ModelHypersurface, path: np.ndarray, tol: float = 1e-9):
    """Radial series of ambient points and the number of clamped values."""
    x = np.asarray(path, dtype=float)
    nn = 2 * hs.n
    if hs.family is Family.HEISENBERG:
        return np.linalg.norm(x[..., :nn], axis=-1), 0
    t = x[..., nn]
    if hs.family is Family.SPHERE:
        bad = np.abs(t) > 1
        if np.any(np.abs(t) > 1 + tol):
            raise DomainError("point is off the sphere beyond tolerance")
        return np.arccos(np.clip(t, -1, 1)) / hs.k, int(bad.sum())
    bad = t < 1
    if np.any(t < 1 - tol):
        raise DomainError("point is off the hyperboloid sheet beyond tolerance")
    return np.arccosh(np.maximum(t, 1)) / hs.k, int(bad.sum())


def start_points(hs: ModelHypersurface, cfg: SimConfig, first: int, count: int) -> np.ndarray:
    m = 2 * hs.n
    if cfg.random_direction:
        dirs = np.empty((count, m))
        for i in range(count):
            g = np.random.Generator(np.random.Philox(
                np.random.SeedSequence(cfg.seed, spawn_key=(2, first + i))))
            dirs[i] = g.standard_normal(m)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    else:
        dirs = np.zeros((count, m))
        dirs[:, 0] = 1.0
    return hs.from_chart(cfg.r0 * dirs)


@dataclass
class _BlockResult:
    terminal: np.ndarray
    alive: np.ndarray
    hit: np.ndarray
    exploded: np.ndarray
    snapshots: dict
    residual: float
    clamped: int


def _simulate_block(hs: ModelHypersurface, cfg: SimConfig, first: int, count: int) -> _BlockResult:
    m = 2 * hs.n
    x = start_points(hs, cfg, first, count)
    noise = _PathNoise(cfg.seed, FULL_STREAM, first, count, m + 1)
    delta = cfg.hit_threshold
    upper = hs.radius_max
    alive = np.ones(count, bool)
    hit = np.zeros(count, bool)
    exploded = np.zeros(count, bool)
    r = hs.radius(x)
    sqh = math.sqrt(cfg.step)
    snap_steps = set(cfg.snapshot_steps())
    snaps = {}
    residual = 0.0
    for step in range(1, cfg.n_steps + 1):
        xi = noise.next()
        idx = np.nonzero(alive)[0]
        if idx.size:
            z = hs.to_chart(x[idx])
            b, sigma = _drift_diffusion_chart(hs, z, cfg.fd_step)
            prop = x[idx] + b * cfg.step + sqh * np.einsum("kia,ka->ki", sigma, xi[idx])
            if hs.family is Family.ADS:
                nn = 2 * hs.n
                bad = (np.sum(prop[:, :nn] ** 2, axis=1) - prop[:, nn] ** 2 >= 0) | (prop[:, nn] <= 0)
                prop[bad] = x[idx][bad]
                exploded[idx[bad]] = True
            new = retract(hs, prop)
            residual = max(residual, float(constraint_residual(hs, new).max()))
            rn = hs.radius(new)
            x[idx] = new
            r[idx] = rn
            near = rn <= delta
            if math.isfinite(upper):
                near |= rn >= upper - delta
            hit[idx[near]] = True
            stop = (rn <= delta / 2)
            if math.isfinite(upper):
                stop |= rn >= upper - delta / 2
            else:
                big = rn > cfg.guard_radius
                exploded[idx[big]] = True
                stop |= big
            alive[idx[stop]] = False
            alive[exploded] = False
        if step in snap_steps:
            rr, _ = radial_extract(hs, x)
            snaps[step] = (rr, hit.copy())
    terminal, clamped = radial_extract(hs, x)
    return _BlockResult(terminal, alive, hit, exploded, snaps, residual, clamped)


def _blocks(cfg: SimConfig):
    return [(s, min(cfg.block_size, cfg.paths - s)) for s in range(0, cfg.paths, cfg.block_size)]


def _run_blocks(fn, cfg: SimConfig):
    blocks = _blocks(cfg)
    if cfg.workers == 1:
        return [fn(first, count) for first, count in blocks]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda bc: fn(*bc), blocks))


def _assemble(results: list[_BlockResult], cfg: SimConfig, stream: int) -> PathStats:
    terminal = np.concatenate([b.terminal for b in results])
    alive = np.concatenate([b.alive for b in results])
    hit = np.concatenate([b.hit for b in results])
    exploded = np.concatenate([b.exploded for b in results])
    sample = terminal[alive]
    moments = _moments(sample)
    snapshots = {}
    for step in results[0].snapshots:
        t = step * cfg.step
        snapshots[t] = (np.concatenate([b.snapshots[step][0] for b in results]),
                        np.concatenate([b.snapshots[step][1] for b in results]))
    return PathStats(sample, cfg.paths, int(alive.sum()), int(hit.sum()), int(exploded.sum()),
                     float(hit.sum() / cfg.paths), *moments, seed=cfg.seed, stream=stream,
                     snapshots=snapshots, max_retraction_residual=max(b.residual for b in results),
                     clamped=sum(b.clamped for b in results))


def simulate_full(hs: ModelHypersurface, cfg: SimConfig) -> PathStats:
    """Euler-Maruyama with retraction for the process generated by Delta / 2 on S."""
    if cfg.r0 >= hs.radius_max:
        raise ValueError("start radius outside the radial interval")
    results = _run_blocks(lambda first, count: _simulate_block(hs, cfg, first, count), cfg)
    return _assemble(results, cfg, FULL_STREAM)


def _reference_block(rp: RadialProcess, cfg: SimConfig, first: int, count: int) -> _BlockResult:
    noise = _PathNoise(cfg.seed, REFERENCE_STREAM, first, count, 1)
    delta, upper = cfg.hit_threshold, rp.upper
    r = np.full(count, float(cfg.r0))
    alive = np.ones(count, bool)
    hit = np.zeros(count, bool)
    exploded = np.zeros(count, bool)
    sqh = math.sqrt(cfg.step)
    snap_steps = set(cfg.snapshot_steps())
    snaps = {}
    for step in range(1, cfg.n_steps + 1):
        xi = noise.next()[:, 0]
        idx = np.nonzero(alive)[0]
        if idx.size:
            rn = r[idx] + rp.drift(r[idx]) * cfg.step + sqh * xi[idx]
            r[idx] = rn
            near = rn <= delta
            stop = rn <= delta / 2
            if math.isfinite(upper):
                near |= rn >= upper - delta
                stop |= rn >= upper - delta / 2
            else:
                big = rn > cfg.guard_radius
                exploded[idx[big]] = True
                stop |= big
            hit[idx[near]] = True
            alive[idx[stop]] = False
        if step in snap_steps:
            snaps[step] = (r.copy(), hit.copy())
    return _BlockResult(r.copy(), alive, hit, exploded, snaps, 0.0, 0)


def simulate_radial_reference(rp: RadialProcess, cfg: SimConfig) -> PathStats:
    """Euler-Maruyama for dr = drift(r) dt + dW with the same bookkeeping as the full process."""
    if not 0 < cfg.r0 < rp.upper:
        raise ValueError("start radius outside the state space")
    results = _run_blocks(lambda first, count: _reference_block(rp, cfg, first, count), cfg)
    return _assemble(results, cfg, REFERENCE_STREAM)


# -- statistics ----------------------------------------------------------------

@dataclass(frozen=True)
class Comparison:
    ks: float
    mean_gap: float
    mean_se: float
    second_moment_gap: float
    second_moment_se: float

    def to_dict(self) -> dict:
        return {"ks": self.ks, "mean_gap": self.mean_gap, "mean_se": self.mean_se,
                "second_moment_gap": self.second_moment_gap,
                "second_moment_se": self.second_moment_se}


def ks_statistic(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("samples must be nonempty")
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def compare_distributions(a, b) -> Comparison:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ks = ks_statistic(a, b)

    def gap(u, v):
        se = math.sqrt((np.var(u, ddof=1) if u.size > 1 else 0.0) / u.size
                       + (np.var(v, ddof=1) if v.size > 1 else 0.0) / v.size)
        return float(u.mean() - v.mean()), se

    g1, s1 = gap(a, b)
    g2, s2 = gap(a**2, b**2)
    return Comparison(ks, g1, s1, g2, s2)


def histogram_table(a, b, bins: int = 40):
    """Common-binning densities of two samples: (edges, density_a, density_b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = float(min(a.min(), b.min()))
    hi = float(max(a.max(), b.max()))
    edges = np.linspace(lo, hi, bins + 1)
    ha, _ = np.histogram(a, edges, density=True)
    hb, _ = np.histogram(b, edges, density=True)
    return edges, ha, hb


def write_summary_json(path, cfg: SimConfig, full: PathStats, ref: Optional[PathStats] = None,
                       comparison: Optional[Comparison] = None) -> None:
    doc = {"config": cfg.to_dict(), "full": full.summary()}
    if ref is not None:
        doc["reference"] = ref.summary()
    if comparison is not None:
        doc["comparison"] = comparison.to_dict()
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
