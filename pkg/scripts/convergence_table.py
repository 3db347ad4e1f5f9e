"""Sup-norm error of the eps-approximation against eps for each n = 1 model.

Writes the converge reports and log-log tables, then prints fitted orders.

    python3 scripts/convergence_table.py --out results/convergence
"""

import argparse
import json
import sys
from pathlib import Path

from contact_sublaplacian.cli import main

MODELS = [("heisenberg", None), ("sphere", 1.0), ("sphere", 0.5), ("ads", 1.0), ("ads", 0.5)]


def run(out: str, eps: str) -> int:
    worst = 0
    print(f"{'model':<22}{'function':<16}{'order':>8}   sup errors")
    for fam, k in MODELS:
        args = ["converge", "--family", fam, "--n", "1", "--eps", eps, "--out", out, "--quiet"]
        if k is not None:
            args += ["--k", str(k)]
        worst = max(worst, main(args))
        stem = f"converge-{fam}-n1" + ("" if k is None else f"-k{k:g}")
        doc = json.loads((Path(out) / f"{stem}.json").read_text())
        for entry in doc["convergence"]:
            errs = " ".join(f"{e:.2e}" for e in entry["sup_errors"])
            print(f"{entry['space']:<22}{entry['test_function']:<16}{entry['fitted_order']:>8.3f}   {errs}")
    return worst


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="results/convergence")
    p.add_argument("--eps", default="0.4,0.2,0.1,0.05,0.025")
    a = p.parse_args()
    sys.exit(run(a.out, a.eps))
