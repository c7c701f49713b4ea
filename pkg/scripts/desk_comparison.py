"""Multi-seed desk-scale comparison of ML-UCB and LinUCB (the preset policy set).

    python3 scripts/desk_comparison.py --seeds 10 --alphas 1 3 10

Prints mean cumulative regret per policy and the percentage-lower-regret
row against LinUCB(alpha=1).
"""

import argparse

import numpy as np

from mlucb import config as cfgmod
from mlucb.harness import PolicyConfig, percentage_matrix, run_seeds


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--preset", default="paper-desk", choices=sorted(cfgmod.PRESETS))
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--alphas", type=float, nargs="+", default=[1.0, 3.0, 10.0], help="ML-UCB alpha grid")
    ap.add_argument("--horizon", type=int)
    args = ap.parse_args()

    d = cfgmod.preset(args.preset)
    if args.horizon:
        d["horizon"] = args.horizon
    policies = []
    for p in d["policies"]:
        if p["name"] == "ml-ucb":
            policies += [{**p, "alpha": a} for a in args.alphas]
        else:
            policies.append(p)
    policies += [{"name": "ucb"}, {"name": "random"}]

    labels, regrets = [], []
    for p in policies:
        traces = run_seeds(cfgmod.run_config(d, p), range(args.seeds))
        r = np.array([tr.final_regret for tr in traces])
        labels.append(PolicyConfig(**p).display)
        regrets.append(r.mean())
        print(f"{labels[-1]:32s} regret={r.mean():9.1f} +- {r.std(ddof=1) / np.sqrt(r.size):6.1f}  rate={r.mean() / d['horizon']:.4f}")

    base = labels.index("linucb(alpha=1)")
    pct = percentage_matrix(regrets)
    print("\nlower regret than linucb(alpha=1):")
    for label, row in zip(labels, pct):
        print(f"  {label:32s} {row[base]:+7.1f}%")


if __name__ == "__main__":
    main()
