"""Car model sizes and probabilities for variants A/AB/ABC at 0 and 1 detours.

    python3 scripts/car_table.py [--variants A AB ABC] [--detours 0 1] [--json out.json]

Sample counts follow the usual schedule (1e5 for 0 detours, 2e6 for 1).
"""

import argparse
import json
import time

from rarprob.cli import AnalyzeOptions, run_analyze
from rarprob.fixtures.car import car_model_dict
from rarprob.model import model_from_dict

SAMPLES = {0: 100_000, 1: 2_000_000, 2: 10_000_000}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--variants", nargs="+", default=["A", "AB", "ABC"])
    ap.add_argument("--detours", nargs="+", type=int, default=[0, 1])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="write rows to this file")
    args = ap.parse_args()

    rows = []
    print(f"{'variant':8s} {'kind':12s} {'det':>3s} {'K':>12s} {'p_max':>8s} {'e_stat':>9s} {'time':>7s}")
    for variant in args.variants:
        for det in args.detours:
            for singular in (False, True):
                m = model_from_dict(car_model_dict(variant, det, singular))
                t0 = time.perf_counter()
                rep = run_analyze(None, AnalyzeOptions(samples=SAMPLES[det], seed=args.seed), model=m)
                dt = time.perf_counter() - t0
                kind = "singular" if singular else "rectangular"
                k = f"({rep.d_r},{rep.tree_size},{rep.n_traces})"
                print(f"{variant:8s} {kind:12s} {det:3d} {k:>12s} {rep.p_max:8.4f} {rep.e_stat:9.2e} {dt:6.1f}s")
                rows.append(dict(variant=variant, kind=kind, detours=det, report=rep.to_dict(), seconds=dt))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
