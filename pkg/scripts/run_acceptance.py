"""Print one line per acceptance criterion; exit 0 when all pass."""

import argparse

from thurston_kit import acceptance


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workers", type=int, default=4, help="worker count for the parallel run")
    args = ap.parse_args()
    serial = acceptance.run_all(1)
    parallel = acceptance.run_all(args.workers)
    lines = serial + [acceptance.criterion_8(serial, parallel, args.workers)]
    for r in lines:
        print(r.line())
    return 0 if all(r.passed and r.within_budget for r in lines) else 1


if __name__ == "__main__":
    raise SystemExit(main())
