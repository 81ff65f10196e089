#!/usr/bin/env python3
"""Reference p -> p operator norms for small fixed matrices.

Grid search over the unit p-sphere (valid for entrywise nonnegative matrices,
whose maximizers have nonnegative coordinates), refined by golden-section
passes. Printed values are frozen into the operator tests.
"""

import numpy as np

A2 = np.array([[1.0, 2.0], [0.0, 1.0]])
B3 = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 2.0], [1.0, 0.0, 1.0]])


def pnorm(v, p, axis=None):
    return (np.abs(v) ** p).sum(axis=axis) ** (1.0 / p)


def norm_2x2(M, p):
    t = np.linspace(0.0, 1.0, 2_000_001)
    x = np.stack([t, (1.0 - t**p) ** (1.0 / p)])
    vals = pnorm(M @ x, p, axis=0)
    i = int(np.argmax(vals))
    lo, hi = t[max(i - 2, 0)], t[min(i + 2, len(t) - 1)]
    phi = (np.sqrt(5.0) - 1.0) / 2.0

    def f(tt):
        xx = np.array([tt, (1.0 - tt**p) ** (1.0 / p)])
        return pnorm(M @ xx, p)

    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    for _ in range(200):
        if f(c) > f(d):
            b, d = d, c
            c = b - phi * (b - a)
        else:
            a, c = c, d
            d = a + phi * (b - a)
    return f((a + b) / 2.0)


def norm_3x3(M, p, n=1200):
    best = 0.0
    arg = None
    t1 = np.linspace(0.0, 1.0, n)
    for a in t1:
        rem = 1.0 - a**p
        if rem < 0:
            continue
        b = np.linspace(0.0, rem ** (1.0 / p), n)
        c = (rem - b**p).clip(min=0.0) ** (1.0 / p)
        x = np.stack([np.full_like(b, a), b, c])
        vals = pnorm(M @ x, p, axis=0)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best = float(vals[i])
            arg = x[:, i].copy()

    # coordinate-wise golden refinement around the grid argmax
    phi = (np.sqrt(5.0) - 1.0) / 2.0

    def val(x):
        x = np.abs(x)
        return pnorm(M @ (x / pnorm(x, p)), p)

    x = arg
    for _ in range(60):
        for k in range(3):
            a, b = max(x[k] - 2e-3, 0.0), x[k] + 2e-3
            c, d = b - phi * (b - a), a + phi * (b - a)
            for _ in range(80):
                xc, xd = x.copy(), x.copy()
                xc[k], xd[k] = c, d
                if val(xc) > val(xd):
                    b, d = d, c
                    c = b - phi * (b - a)
                else:
                    a, c = c, d
                    d = a + phi * (b - a)
            x[k] = (a + b) / 2.0
    return val(x)


def main():
    print("== A2 = [[1,2],[0,1]] ==")
    print(f"p=2 exact (1+sqrt2) = {1.0 + np.sqrt(2.0):.15f}")
    print(f"p=2 svd             = {np.linalg.svd(A2)[1][0]:.15f}")
    for p in (1.5, 3.0, 4.0):
        print(f"p={p}  grid = {norm_2x2(A2, p):.12f}")
    print("== B3 ==")
    print(f"p=2 svd = {np.linalg.svd(B3)[1][0]:.15f}")
    print(f"p=1 exact colsum = {np.abs(B3).sum(axis=0).max():.15f}")
    print(f"p=inf exact rowsum = {np.abs(B3).sum(axis=1).max():.15f}")
    for p in (1.5, 4.0):
        print(f"p={p}  grid = {norm_3x3(B3, p):.10f}")


if __name__ == "__main__":
    main()
