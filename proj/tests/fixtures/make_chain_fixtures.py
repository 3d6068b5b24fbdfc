"""Regenerate the two-chain convergence fixtures.

shifted_mean_chains.csv: two chains of iid normal draws, the second shifted
    by a constant chosen so the classical R-hat equals 1.16.
trending_chains.csv: two chains sharing one marginal but drifting in opposite
    directions (linear trend plus noise); the trend amplitude is chosen so the
    split, rank-normalized R-hat equals 1.56 while the classical R-hat stays
    near 1.

Usage: python3 make_chain_fixtures.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.stats import norm, rankdata

N = 1000
SEED = 20240607


def rhat_basic(chains):
    n = chains.shape[0]
    w = chains.var(axis=0, ddof=1).mean()
    b = n * chains.mean(axis=0).var(ddof=1)
    return np.sqrt(((n - 1) / n * w + b / n) / w)


def split_rhat(chains):
    half = chains.shape[0] // 2
    offset = chains.shape[0] - half
    split = np.column_stack([c for col in chains.T for c in (col[:half], col[offset:offset + half])])
    ranks = rankdata(split.ravel(), method="average").reshape(split.shape)
    z = norm.ppf((ranks - 0.375) / (split.size + 0.25))
    return rhat_basic(z)


def write(path, chains):
    with open(path, "w") as f:
        f.write("chain1,chain2\n")
        for a, b in chains:
            f.write(f"{float(a)!r},{float(b)!r}\n")


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent
    rng = np.random.default_rng(SEED)

    iid = rng.standard_normal((N, 2))
    shifted = lambda d: iid + np.array([0.0, d])
    delta = brentq(lambda d: rhat_basic(shifted(d)) - 1.16, 0.0, 3.0, xtol=1e-12)
    write(out / "shifted_mean_chains.csv", shifted(delta))

    wiggle = rng.standard_normal((N, 2))
    ramp = np.linspace(-1.0, 1.0, N)
    trending = lambda a: wiggle + np.column_stack([a * ramp, -a * ramp])
    amp = brentq(lambda a: split_rhat(trending(a)) - 1.56, 0.0, 10.0, xtol=1e-12)
    chains = trending(amp)
    write(out / "trending_chains.csv", chains)

    print(f"shift {delta:.6f}: rhat {rhat_basic(shifted(delta)):.4f} split {split_rhat(shifted(delta)):.4f}")
    print(f"trend amplitude {amp:.6f}: rhat {rhat_basic(chains):.4f} split {split_rhat(chains):.4f}")


if __name__ == "__main__":
    main()
