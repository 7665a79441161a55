"""Run every scenario in a directory and print a one-line verdict table.

    python3 scripts/run_scenarios.py scenarios --out results
"""

import argparse
import sys
import time
from pathlib import Path

from talenti_lab.errors import TalentiError
from talenti_lab.scenario import emit_report, execute_scenario, parse_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory", nargs="?", default="scenarios")
    ap.add_argument("--out", default="results")
    ap.add_argument("--resolution", type=int)
    args = ap.parse_args()
    worst = 0
    for path in sorted(Path(args.directory).glob("*.json")):
        t0 = time.perf_counter()
        try:
            s = parse_scenario(path)
            if args.resolution:
                s = s.with_resolution(args.resolution)
            res = execute_scenario(s)
        except TalentiError as e:
            print(f"{path.name:40s} ERROR  {e}")
            worst = max(worst, 1)
            continue
        emit_report(res.report, s.outputs, args.out, res.mu, res.profile)
        rep = res.report
        n_assert = sum(r.kind == "assert" for r in rep.records)
        tight = min((r.margin / abs(r.right) for r in rep.records
                     if r.kind == "assert" and r.relation == "le" and r.right), default=float("nan"))
        verdict = "PASS" if rep.passed else "FAIL"
        print(f"{path.name:40s} {verdict}  {n_assert:3d} asserted  tightest rel margin {tight:+.2e}"
              f"  {time.perf_counter() - t0:5.1f}s")
        worst = max(worst, 0 if rep.passed else 1)
    return worst


if __name__ == "__main__":
    sys.exit(main())
