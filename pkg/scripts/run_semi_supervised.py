"""Synthetic labeled/unlabeled study: PMSE of semi-supervised vs single-source bases.

    python scripts/run_semi_supervised.py [--reps 50] [--mechanism linear]
"""

import argparse

import numpy as np

from steinlatent.experiments import SemiSupervisedStudy, run_semi_supervised_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--mechanism", default="linear")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    for score in ("shared-plugin", "separate-plugin"):
        for r in (2, 3, 4, 5):
            study = SemiSupervisedStudy(r=r, mechanism=args.mechanism, repetitions=args.reps,
                                        master_seed=args.seed, score=score)
            med = {k: np.median(v) for k, v in run_semi_supervised_study(study).items()}
            cells = "  ".join(f"{k}={v:.4g}" for k, v in med.items())
            print(f"score={score:<15} r={r}  {cells}")


if __name__ == "__main__":
    main()
