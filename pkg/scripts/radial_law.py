"""Monte Carlo comparison of the full radial process with its 1D reference.

Runs ``radial-compare`` for every model in the sweep (r0 = 1, T = 1,
h = 1e-3, 10^4 paths by default) with snapshots at T/4, T/2 and T, and prints
the KS distance, hit fraction and guard exits. Expect about a minute per model.

    python3 scripts/radial_law.py --out results/radial --workers 4
"""

import argparse
import json
import sys
from pathlib import Path

import yaml

from contact_sublaplacian.cli import main

MODELS = [("heisenberg", 1, None), ("heisenberg", 2, None)] + [
    (fam, n, k) for fam in ("sphere", "ads") for n in (1, 2) for k in (0.5, 1.0)]


def run(out: str, paths: int, workers: int, seed: int) -> int:
    Path(out).mkdir(parents=True, exist_ok=True)
    doc_path = Path(out) / "radial_law.yaml"
    doc_path.write_text(yaml.safe_dump({"simulation": {"snapshot_times": [0.25, 0.5, 1.0]}}))
    worst = 0
    for fam, n, k in MODELS:
        args = ["radial-compare", "--config", str(doc_path), "--family", fam, "--n", str(n),
                "--paths", str(paths), "--horizon", "1", "--step", "1e-3", "--seed", str(seed),
                "--workers", str(workers), "--out", out, "--quiet"]
        if k is not None:
            args += ["--k", str(k)]
        worst = max(worst, main(args))
        stem = f"radial-compare-{fam}-n{n}" + ("" if k is None else f"-k{k:g}")
        rep = json.loads((Path(out) / f"{stem}.json").read_text())
        full = rep["full"]
        print(f"{rep['model']:<22} KS={rep['comparison']['ks']:.4f} "
              f"hits={full['hit_fraction']:.2e} guard={full['explosions']} "
              f"{'PASS' if rep['overall_pass'] else 'FAIL'}")
    return worst


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/radial")
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    a = p.parse_args()
    sys.exit(run(a.out, a.paths, a.workers, a.seed))
