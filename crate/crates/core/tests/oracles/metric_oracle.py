"""High-precision direct evaluation of the vector metrics.

Vectors have dyadic entries k/1024 with k in [-1024, 1024], so they are
exactly representable in f32. Every metric value is evaluated with mpmath at
50 significant digits and written to fixtures/metrics_oracle.json.
"""
import json
import os
import random

import mpmath as mp

mp.mp.dps = 50
HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "fixtures", "metrics_oracle.json")

P_VALUES = ["1", "1.5", "2", "3", "7.5", "64"]


def minkowski(x, y, p):
    p = mp.mpf(p)
    s = mp.fsum(abs(a - b) ** p for a, b in zip(x, y))
    return s ** (1 / p)


def main():
    rng = random.Random(20240229)
    pairs = []
    for _ in range(1000):
        d = rng.randint(1, 32)
        while True:
            xs = [rng.randint(-1024, 1024) for _ in range(d)]
            ys = [rng.randint(-1024, 1024) for _ in range(d)]
            if any(xs) and any(ys):
                break
        x = [mp.mpf(k) / 1024 for k in xs]
        y = [mp.mpf(k) / 1024 for k in ys]
        dot = mp.fsum(a * b for a, b in zip(x, y))
        nx = mp.sqrt(mp.fsum(a * a for a in x))
        ny = mp.sqrt(mp.fsum(b * b for b in y))
        row = {
            "x": xs,
            "y": ys,
            "euclidean": mp.nstr(minkowski(x, y, 2), 30),
            "manhattan": mp.nstr(mp.fsum(abs(a - b) for a, b in zip(x, y)), 30),
            "chebyshev": mp.nstr(max(abs(a - b) for a, b in zip(x, y)), 30),
            "cosine": mp.nstr(dot / (nx * ny), 30),
            "inner_product": mp.nstr(dot, 30),
            "minkowski": {p: mp.nstr(minkowski(x, y, p), 30) for p in P_VALUES},
        }
        pairs.append(row)
    with open(OUT, "w") as f:
        json.dump({"scale": 1024, "pairs": pairs}, f, separators=(",", ":"))
    # the single worked value used by the unit tests
    print("minkowski p=2 ([1,2,3],[4,5,6]) =",
          mp.nstr(minkowski([1, 2, 3], [4, 5, 6], 2), 20))


if __name__ == "__main__":
    main()
