"""Regenerate crates/core/tests/data/bounds_eps0.1.csv with scipy as the oracle."""
import math
import sys

from scipy.special import gammainc


def lower(eps, delta, r):
    n = 1
    while gammainc(n * r / 2, n * r * (1 - eps) / 2) > delta:
        n += 1
    return n


def upper(eps, delta, r):
    n = math.floor(1 / eps) + 1
    while gammainc(n * r / 2, n * r * (1 + eps) / 2) < 1 - delta:
        n += 1
    return n


def main(path):
    eps = 0.1
    with open(path, "w") as f:
        f.write("delta,loose,sufficient_lower,sufficient_upper,necessary_lower_r4,necessary_upper_r4\n")
        for k in range(1, 31):
            delta = round(0.01 * k, 2)
            loose = math.floor(8 / eps**2 * math.log(1 / delta)) + 1
            row = [loose, lower(eps, delta, 1), upper(eps, delta, 1), lower(eps, delta, 4), upper(eps, delta, 4)]
            f.write(f"{delta}," + ",".join(map(str, row)) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data/bounds_eps0.1.csv")
