"""Independent port of the counter-based generator; writes the seed-42 golden dataset.

Spec: n=40, d=8, s=2, sigma=1, identity covariance, Gaussian noise,
random support with magnitude 1, then a response shift of scale 10 on o=4
uniformly chosen rows (attack seed 42).
"""
import math
import sys

M64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z &= M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return z ^ (z >> 31)


class Rng:
    def __init__(self, seed, stream):
        self.key = mix64(seed ^ mix64(stream + GOLDEN))
        self.counter = 0
        self.spare = None

    def u64(self):
        self.counter += 1
        return mix64(self.key + GOLDEN * self.counter)

    def uniform(self):
        return ((self.u64() >> 11) + 0.5) * 2.0 ** -53

    def below(self, bound):
        return (self.u64() * bound) >> 64

    def normal(self):
        if self.spare is not None:
            s, self.spare = self.spare, None
            return s
        u1, u2 = self.uniform(), self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        a = 2.0 * math.pi * u2
        self.spare = r * math.sin(a)
        return r * math.cos(a)

    def rademacher(self):
        return 1.0 if self.u64() >> 63 else -1.0


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for c in data:
        h = ((h ^ c) * 0x100000001B3) & M64
    return h


def fmt(v):
    r = repr(v)
    return r[:-2] if r.endswith(".0") else r


def main():
    n, d, s, seed, o, scale = 40, 8, 2, 42, 4, 10.0
    rng = Rng(seed, 3)
    idx = list(range(d))
    for k in range(s):
        p = k + rng.below(d - k)
        idx[k], idx[p] = idx[p], idx[k]
    support = sorted(idx[:s])
    beta = [0.0] * d
    for j in support:
        beta[j] = rng.rademacher()
    drng = Rng(seed, 1)
    X = [[drng.normal() for _ in range(d)] for _ in range(n)]
    nrng = Rng(seed, 2)
    y = []
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += X[i][j] * beta[j]
        y.append(acc + nrng.normal())
    arng = Rng(seed, 4)
    rows = list(range(n))
    for k in range(o):
        p = k + arng.below(n - k)
        rows[k], rows[p] = rows[p], rows[k]
    for i in sorted(rows[:o]):
        y[i] += math.sqrt(n) * scale
    out = "y," + ",".join(f"x{j + 1}" for j in range(d)) + "\n"
    for i in range(n):
        out += ",".join(fmt(v) for v in [y[i]] + X[i]) + "\n"
    with open(sys.argv[1], "w", newline="\n") as f:
        f.write(out)
    print(f"0x{fnv1a64(out.encode()):016x}")


if __name__ == "__main__":
    main()
