"""Run the identity suites over the model sweep and write one report per model.

    python3 scripts/verify_all.py --out results/identities
"""

import argparse
import sys

from contact_sublaplacian.cli import main

MODELS = [("heisenberg", 1, None), ("heisenberg", 2, None), ("heisenberg", 3, None)] + [
    (fam, n, k) for fam in ("sphere", "ads") for n in (1, 2) for k in (0.5, 1.0)]


def run(out: str) -> int:
    worst = 0
    for fam, n, k in MODELS:
        args = ["verify-identities", "--family", fam, "--n", str(n), "--out", out, "--quiet"]
        if k is not None:
            args += ["--k", str(k)]
        code = main(args)
        print(f"{fam:<10} n={n} k={k}: {'PASS' if code == 0 else 'FAIL'}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/identities")
    sys.exit(run(p.parse_args().out))
