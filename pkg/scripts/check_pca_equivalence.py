"""Plug-in first-order estimator on Y = X versus PCA.

    python scripts/check_pca_equivalence.py [--seeds 20]

Reports the subspace distance for full-rank Gaussian designs and for
designs of exact rank r. For full-rank designs the plug-in moment matrix
is the identity projector, so the top-r subspace is not unique and the
fit is flagged degenerate.
"""

import argparse

import numpy as np

from steinlatent.experiments import check_pca_equivalence


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--p", type=int, default=10)
    ap.add_argument("--r", type=int, default=3)
    args = ap.parse_args()

    for label in ("full-rank", "rank-r"):
        dists, flags = [], 0
        for seed in range(args.seeds):
            rng = np.random.default_rng(seed)
            if label == "full-rank":
                X = rng.standard_normal((args.n, args.p))
            else:
                X = rng.standard_normal((args.n, args.r)) @ rng.standard_normal((args.r, args.p))
            res = check_pca_equivalence(X, args.r)
            dists.append(res.distance)
            flags += res.degenerate
        print(f"{label:>9}: max distance {max(dists):.3g}, median {np.median(dists):.3g}, "
              f"degenerate {flags}/{args.seeds}")


if __name__ == "__main__":
    main()
