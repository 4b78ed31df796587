#!/usr/bin/env python3
"""Run every randomized invariant suite and print per-property margins.

Pass --fault-z-scale 1.01 to deliberately mis-scale the step-wise partition
and watch the corresponding suite fail.
"""

import argparse
import sys

from seqboost.checks import default_suites


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fault-z-scale", type=float, default=1.0)
    args = parser.parse_args()
    results = default_suites(stepwise_partition_scale=args.fault_z_scale)
    failed = 0
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.name:35s} min slack {r.min_slack:11.3g} over {r.instances} instances")
        failed += not r.passed
    if failed:
        print(f"{failed} suite(s) violated", file=sys.stderr)
        sys.exit(3)


if __name__ == "__main__":
    main()
