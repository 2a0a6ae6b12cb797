"""Run the verification suites and print verdict counts and time per suite.

    python3 scripts/verify_summary.py              # every suite
    python3 scripts/verify_summary.py witness qbox   # some suites
"""
import argparse
import time
from collections import Counter

from stpart.verify import SUITES, run_suite


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("suites", nargs="*", default=list(SUITES), help=", ".join(SUITES))
    ap.add_argument("--show", action="store_true", help="list records that do not hold")
    args = ap.parse_args()
    unknown = [s for s in args.suites if s not in SUITES]
    if unknown:
        ap.error(f"unknown suites: {', '.join(unknown)}")

    bad = []
    print(f"{'suite':<12} {'records':>8} {'holds':>6} {'other':>6} {'seconds':>8}")
    for name in args.suites:
        t0 = time.perf_counter()
        recs = run_suite(name)
        counts = Counter(r["verdict"] for r in recs)
        other = len(recs) - counts["holds"]
        print(f"{name:<12} {len(recs):>8} {counts['holds']:>6} {other:>6} {time.perf_counter() - t0:>8.1f}")
        bad += [r for r in recs if r["verdict"] != "holds"]
    if args.show:
        for r in bad:
            print(f"  {r['verdict']}: [{r['suite']}] {r['case']}: {r['claim']}")
    return 1 if any(r["verdict"] == "violated" for r in bad) else 0


if __name__ == "__main__":
    raise SystemExit(main())
