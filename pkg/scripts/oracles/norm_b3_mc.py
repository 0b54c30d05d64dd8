"""Monte Carlo value of the ternary cutoff norm for d = 3, theta3 = 1, phi = 1.

Integrates |x1| over S^5 with plain pseudo-random points and compares with
2 pi^{5/2} / Gamma(7/2) = 16 pi^2 / 15. Uses no package code.
"""

import argparse

import numpy as np
from scipy.special import gamma

from _store import save


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=20_000_000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    area = 2 * np.pi ** 3 / gamma(3)
    total, sq, n = 0.0, 0.0, 0
    for _ in range(args.samples // 1_000_000):
        x = rng.standard_normal((1_000_000, 6))
        f = np.abs(x[:, 0]) / np.linalg.norm(x, axis=1)
        total += f.sum()
        sq += (f * f).sum()
        n += len(f)
    mean = total / n
    se = np.sqrt((sq / n - mean ** 2) / n)
    closed = 2 * np.pi ** 2.5 / gamma(3.5)
    save("norm_b3_d3_theta1", {"mc": area * mean, "mc_stderr": area * se,
                               "closed_form": closed, "samples": n})


if __name__ == "__main__":
    main()
