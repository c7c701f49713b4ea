"""Fit full-trajectory and stable-regime decay rates to ML-UCB learning curves.

    python3 scripts/learning_curves.py --seeds 5 --out out/curves

Writes one ``curve_<seed>.csv`` per seed plus ``fits.json``.
"""

import argparse
from pathlib import Path

import numpy as np

from mlucb import _io
from mlucb import config as cfgmod
from mlucb.harness import run_seeds
from mlucb.learning_curve import fit_power_law, fit_stable_regime


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--preset", default="paper-desk", choices=sorted(cfgmod.PRESETS))
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--tail-fraction", type=float, default=0.2)
    ap.add_argument("--out", default="out/curves")
    args = ap.parse_args()

    d = cfgmod.preset(args.preset)
    traces = run_seeds(cfgmod.run_config(d), range(args.seeds))
    out = Path(args.out)
    fits = []
    for seed, tr in enumerate(traces):
        curve = tr.learning_curve()
        curve.to_csv(out / f"curve_{seed}.csv")
        full, tail = fit_power_law(curve), fit_stable_regime(curve, args.tail_fraction)
        fits.append({"seed": seed, "full": full.to_dict(), "stable": tail.to_dict()})
        print(f"seed {seed}: s_full={full.s:.3f} s_stable={tail.s:.3f} final mse={curve.mse[-1]:.3f}")
    s_full = np.mean([f["full"]["s"] for f in fits])
    s_tail = np.mean([f["stable"]["s"] for f in fits])
    print(f"mean: s_full={s_full:.3f} s_stable={s_tail:.3f}")
    _io.write_json(out / "fits.json", {"preset": args.preset, "tail_fraction": args.tail_fraction, "fits": fits})


if __name__ == "__main__":
    main()
