"""Empirical psi-UCB regret against the threshold bound over a range of gaps.

    python3 scripts/bound_check.py --gaps 0.25 0.5 1.0 --horizon 10000 --seeds 20
"""

import argparse

from mlucb.harness import verify_regret_bound


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--gaps", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--sigma2", type=float, default=1.0)
    args = ap.parse_args()

    for gap in args.gaps:
        rep = verify_regret_bound([1.0, 1.0 - gap], args.sigma2, 1.0, args.horizon, range(args.seeds))
        print(
            f"gap={gap:<5g} m={rep.thresholds[0]:9.1f} bound={rep.bound:8.1f} "
            f"regret={rep.mean_regret:7.1f} +- {rep.stderr:5.1f} {'ok' if rep.passed else 'VIOLATED'}"
        )


if __name__ == "__main__":
    main()
