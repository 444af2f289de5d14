"""Independent reference values frozen into the C++ tests.

Run with `python3 tests/oracles/derive.py`; every printed number appears
verbatim in a test.
"""
import itertools

import numpy as np


def bilinear():
    u = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    fx = np.array([1.0, 1.0, 0.0])
    fy = np.array([0.0, 1.0, 1.0])
    emb = float((u @ fx) @ (u @ fy))
    print("bilinear", emb)
    print("mixed lambda=0.5", emb + 0.5 * float(fx @ fy))


def segment():
    u = np.ones((1, 5))
    fc = np.zeros(5)
    fc[0] = fc[4] = 1.0
    print("segment", float(np.array([2.0]) @ (u @ fc)))


def time_triple():
    # |W| = 2 base layout: Y words 0-1, X_INPUT 2-3, X_SUPPORT 4-5, time 6-8.
    d = 9
    u = np.zeros((2, d))
    u[:, 8] = [0.5, 0.0]  # third time feature
    u[:, 1] = [1.0, 0.0]  # Y word 1
    u[:, 2] = [1.0, 0.0]  # X_INPUT word 0
    fx = np.zeros(d)
    fx[2] = 1.0
    t = np.zeros(d)
    t[8] = 1.0
    for fy, fy2 in [((0,), (0,)), ((0,), (1,)), ((1,), (0,))]:
        a = np.zeros(d)
        b = np.zeros(d)
        for i in fy:
            a[i] += 1
        for i in fy2:
            b[i] += 1
        print("triple", fy, fy2, float((u @ fx) @ (u @ (a - b + t))))


def kmeans_1d():
    pts = [0.0, 0.1, 10.0, 10.1]
    best = None
    for mask in itertools.product([0, 1], repeat=4):
        if len(set(mask)) < 2:
            continue
        groups = [[p for p, m in zip(pts, mask) if m == g] for g in (0, 1)]
        cents = [sum(g) / len(g) for g in groups]
        dist = sum((p - cents[m]) ** 2 for p, m in zip(pts, mask))
        if best is None or dist < best[0]:
            best = (dist, sorted(cents))
    print("kmeans", best)


def time_features():
    x, y, y2 = 5, 2, 8
    print("time", (int(x < y), int(x < y2), int(y < y2)))


def context_counts():
    s = "a b a b".split()
    right = {}
    for i in range(len(s) - 1):
        right.setdefault(s[i], []).append(s[i + 1])
    print("right[a]", right["a"])


bilinear()
segment()
time_triple()
kmeans_1d()
time_features()
context_counts()
