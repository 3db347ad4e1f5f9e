"""Command-line entry point: identity suites, convergence study and simulations.

Usage::

    contact-sublaplacian verify-identities --family heisenberg --n 2
    contact-sublaplacian converge --family sphere --n 1 --k 1 --eps 0.4,0.2,0.1,0.05,0.025
    contact-sublaplacian simulate --family ads --n 2 --k 1 --paths 10000 --horizon 1 --step 1e-3 --seed 42
    contact-sublaplacian radial-compare --family sphere --n 2 --k 0.5

A YAML/JSON document passed with ``--config`` supplies any of the settings;
flags override it. The output directory is taken from ``--out``, then the
``CONTACT_SUBLAPLACIAN_OUT`` environment variable, then the document, and
defaults to ``./results``.

Exit codes: 0 all checks pass, 1 some check failed, 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import checks
from .checks import DEFAULT_TOLERANCES
from .diffusion import SimConfig, histogram_table
from .hypersurface import ModelHypersurface
from .model_spaces import Family, ModelSpace
from .sublaplacian import DEFAULT_EPS

SCHEMA_VERSION = "1.0"
ENV_OUTPUT = "CONTACT_SUBLAPLACIAN_OUT"
COMMANDS = ("verify-identities", "converge", "simulate", "radial-compare")
SIM_KEYS = ("r0", "step", "horizon", "paths", "hit_threshold", "guard_radius", "snapshot_times",
            "random_direction", "block_size", "workers")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    family: str = "heisenberg"
    n: int = 1
    k: Optional[float] = None
    seed: int = 0
    output_dir: str = "results"
    tolerances: dict = field(default_factory=dict)
    samples: int = 1000
    grid_points: int = 200
    eps: tuple = DEFAULT_EPS
    simulation: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        try:
            self.space  # validates family, n, k
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        for key, val in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {key!r}")
            if not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {key!r} must be positive")
        if int(self.samples) < 1 or int(self.grid_points) < 2:
            raise ConfigError("samples must be >= 1 and grid_points >= 2")
        e = self.eps
        if not e or min(e) <= 0 or any(b >= a for a, b in zip(e, e[1:])):
            raise ConfigError(f"eps schedule must be positive and strictly decreasing, got {list(e)}")
        unknown = set(self.simulation) - set(SIM_KEYS)
        if unknown:
            raise ConfigError(f"unknown simulation keys {sorted(unknown)}")
        try:
            self.sim_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid simulation settings: {exc}") from None

    @property
    def space(self) -> ModelSpace:
        return ModelSpace(self.family, self.n, self.k)

    @property
    def stem(self) -> str:
        ms = self.space
        tail = "" if ms.k is None else f"-k{ms.k:g}"
        return f"{self.command}-{ms.family.value}-n{ms.n}{tail}"

    def sim_config(self) -> SimConfig:
        ms = self.space
        return SimConfig(family=ms.family.value, n=ms.n, k=ms.k, seed=self.seed, **self.simulation)


# -- config document -------------------------------------------------------------

_TOP_KEYS = {"command", "model", "seed", "output_dir", "tolerances", "verify", "converge", "simulation"}
_MODEL_KEYS = {"family", "n", "k"}
_VERIFY_KEYS = {"samples", "grid_points"}
_CONVERGE_KEYS = {"eps", "grid_points"}


def _check_keys(section: str, doc, allowed: set) -> dict:
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return doc


def load_document(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return _check_keys("<root>", doc, _TOP_KEYS)


def _parse_eps(text: str) -> tuple:
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad eps list {text!r}") from None


def build_config(args: argparse.Namespace, env=None) -> RunConfig:
    env = os.environ if env is None else env
    doc = load_document(args.config) if args.config else {}
    model = _check_keys("model", doc.get("model"), _MODEL_KEYS)
    verify = _check_keys("verify", doc.get("verify"), _VERIFY_KEYS)
    conv = _check_keys("converge", doc.get("converge"), _CONVERGE_KEYS)
    sim = dict(_check_keys("simulation", doc.get("simulation"), set(SIM_KEYS)))
    tolerances = dict(_check_keys("tolerances", doc.get("tolerances"), set(DEFAULT_TOLERANCES)))
    if doc.get("command") not in (None, args.command):
        raise ConfigError(f"config is for {doc['command']!r}, not {args.command!r}")

    def pick(flag, section, key, default):
        if flag is not None:
            return flag
        return section.get(key, default)

    eps = conv.get("eps")
    if isinstance(eps, str):
        eps = _parse_eps(eps)
    if args.eps is not None:
        eps = _parse_eps(args.eps)
    grid_default = verify.get("grid_points", 200) if args.command == "verify-identities" \
        else conv.get("grid_points", 200)
    for key in ("paths", "horizon", "step", "workers", "r0", "hit_threshold"):
        val = getattr(args, key)
        if val is not None:
            sim[key] = val
    out = args.out or env.get(ENV_OUTPUT) or doc.get("output_dir") or "results"
    try:
        return RunConfig(
            command=args.command,
            family=pick(args.family, model, "family", "heisenberg"),
            n=int(pick(args.n, model, "n", 1)),
            k=pick(args.k, model, "k", None),
            seed=int(pick(args.seed, doc, "seed", 0)),
            output_dir=str(out),
            tolerances=tolerances,
            samples=int(pick(args.samples, verify, "samples", 1000)),
            grid_points=int(pick(args.grid_points, {}, "", grid_default)),
            eps=tuple(float(e) for e in (eps or DEFAULT_EPS)),
            simulation=sim,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


# -- reports ------------------------------------------------------------------------

@dataclass
class SuiteReport:
    command: str
    model: str
    records: list
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    runtime: float = 0.0  # kept out of the JSON so artifacts stay byte-identical

    @property
    def overall_pass(self) -> bool:
        return all(r.passed for r in self.records)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "command": self.command, "model": self.model,
                "overall_pass": self.overall_pass, "config": self.config,
                "records": [r.to_dict() for r in self.records], **self.extra}


_FLOAT_TOKEN = re.compile(r'"__float__([^"]*)"')


def _tokenize_floats(obj):
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return None if obj is None else bool(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return f"__float__{v:.16e}" if math.isfinite(v) else None
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _tokenize_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tokenize_floats(v) for v in obj]
    return obj


def dumps_fixed(doc) -> str:
    """JSON with every float written as a 17-significant-digit scientific literal."""
    text = json.dumps(_tokenize_floats(doc), indent=2, sort_keys=True)
    return _FLOAT_TOKEN.sub(lambda m: m.group(1), text) + "\n"


def _fmt(v: float) -> str:
    return f"{float(v):.16e}"


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow(row)
    return path


def emit_plotdata(report: SuiteReport, out_dir, stem: str, convergence=None, simulation=None) -> list[Path]:
    """Plot tables: eps vs sup error per test function, and radial histograms per snapshot."""
    out_dir = Path(out_dir)
    written = []
    for rep in convergence or []:
        rows = [[_fmt(e), _fmt(s)] for e, s in zip(rep.eps_schedule, rep.sup_errors)]
        written.append(_write_csv(out_dir / f"{stem}-{rep.test_function}-loglog.csv",
                                  ["eps", "sup_error"], rows))
    if simulation is not None:
        full, ref = simulation.full, simulation.reference
        for t in sorted(full.snapshots):
            a = full.snapshots[t][0]
            b = ref.snapshots[t][0]
            a = a[np.isfinite(a)]
            b = b[np.isfinite(b)]
            edges, ha, hb = histogram_table(a, b)
            rows = [[_fmt(0.5 * (edges[i] + edges[i + 1])), _fmt(ha[i]), _fmt(hb[i])]
                    for i in range(ha.size)]
            written.append(_write_csv(out_dir / f"{stem}-hist-t{t:.6g}.csv",
                                      ["r", "density_full", "density_reference"], rows))
    return written


# -- commands -----------------------------------------------------------------------

def _verify(cfg: RunConfig):
    ms = cfg.space
    hs = ModelHypersurface(ms)
    tol = cfg.tolerances
    recs = checks.model_space_suite(ms, cfg.samples, cfg.seed, tol)
    recs += checks.normal_suite(hs, cfg.grid_points, cfg.seed, tolerances=tol)
    recs += checks.volume_suite(hs, cfg.grid_points, cfg.seed, tol)
    recs += checks.divergence_suite(hs, 50, cfg.seed, tol)
    recs += checks.quasi_contact_suite(hs, cfg.grid_points, cfg.seed, tol)
    recs += checks.sublaplacian_suite(hs, cfg.grid_points, cfg.seed, tol)
    if ms.family is Family.HEISENBERG and ms.n == 2:
        recs += checks.h2_structure_suite(cfg.samples, cfg.seed, tolerances=tol)
    return recs, {}, {}


def _converge(cfg: RunConfig):
    hs = ModelHypersurface(cfg.space)
    recs, reports = checks.convergence_suite(hs, cfg.eps, cfg.grid_points, cfg.seed, cfg.tolerances)
    extra = {"convergence": [r.summary() for r in reports]}
    return recs, extra, {"convergence": reports}


def _simulate(cfg: RunConfig, compare: bool):
    outcome = checks.run_simulation(cfg.sim_config())
    recs = checks.simulation_suite(outcome, cfg.tolerances)
    extra = {"full": outcome.full.summary(), "reference": outcome.reference.summary()}
    if compare:
        recs += checks.radial_law_suite(outcome, cfg.tolerances)
        extra["comparison"] = outcome.comparison.to_dict()
    return recs, extra, {"simulation": outcome}


def run(cfg: RunConfig) -> tuple[int, SuiteReport]:
    """Execute the configured command and write its artifacts."""
    out_dir = Path(cfg.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}") from None
    t0 = time.perf_counter()
    if cfg.command == "verify-identities":
        recs, extra, data = _verify(cfg)
    elif cfg.command == "converge":
        recs, extra, data = _converge(cfg)
    else:
        recs, extra, data = _simulate(cfg, compare=cfg.command == "radial-compare")
    config_echo = {"family": cfg.space.family.value, "n": cfg.n, "k": cfg.space.k, "seed": cfg.seed,
                   "tolerances": {**DEFAULT_TOLERANCES, **cfg.tolerances}}
    if cfg.command == "verify-identities":
        config_echo.update(samples=cfg.samples, grid_points=cfg.grid_points)
    elif cfg.command == "converge":
        config_echo.update(eps=list(cfg.eps), grid_points=cfg.grid_points)
    else:
        sim = cfg.sim_config().to_dict()
        sim.pop("workers")  # scheduling only; results do not depend on it
        config_echo["simulation"] = sim
    report = SuiteReport(cfg.command, cfg.space.label, recs, config_echo, extra)
    try:
        (out_dir / f"{cfg.stem}.json").write_text(dumps_fixed(report.to_dict()))
        for rep in data.get("convergence", []):
            rep.write_csv(out_dir / f"{cfg.stem}-{rep.test_function}.csv")
        if "simulation" in data:
            outcome = data["simulation"]
            outcome.full.write_snapshot_csv(out_dir, f"{cfg.stem}-full")
            if cfg.command == "radial-compare":
                outcome.reference.write_snapshot_csv(out_dir, f"{cfg.stem}-reference")
        emit_plotdata(report, out_dir, cfg.stem, data.get("convergence"),
                      data.get("simulation") if cfg.command == "radial-compare" else None)
    except OSError as exc:
        raise ConfigError(f"cannot write artifacts: {exc}") from None
    report.runtime = time.perf_counter() - t0
    return (0 if report.overall_pass else 1), report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contact-sublaplacian",
                                description="Sub-Laplacians on model contact hypersurfaces.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="YAML or JSON settings document")
    p.add_argument("--family", help="heisenberg, sphere or ads")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--eps", help="comma-separated decreasing eps schedule")
    p.add_argument("--samples", type=int, help="sample points for the model-space suite")
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--r0", type=float)
    p.add_argument("--hit-threshold", dest="hit_threshold", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        code, report = run(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        for r in report.records:
            flag = "PASS" if r.passed else "FAIL"
            print(f"{flag}  {r.name}: {r.value:.3e} {r.relation} {r.threshold:.3e}  [{r.anchor}]")
        print(f"{'PASS' if report.overall_pass else 'FAIL'}  overall ({len(report.records)} checks)")
    print(f"runtime {report.runtime:.1f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
