"""Independent reference implementations used only by the tests.

Each oracle solves the same problem as a package function by a different,
deliberately naive route: a dense transportation LP, permutation
enumeration, exhaustive pair scans, shapely polygons, graph search.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog
from shapely.geometry import Polygon


def emd_lp(X, Y) -> float:
    """Earth mover's distance with uniform masses as a transportation LP."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    m, n = len(X), len(Y)
    cost = np.sqrt(((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2)).ravel()
    A_eq, b_eq = [], []
    for i in range(m):
        row = np.zeros(m * n)
        row[i * n:(i + 1) * n] = 1.0
        A_eq.append(row)
        b_eq.append(1.0 / m)
    for j in range(n):
        row = np.zeros(m * n)
        row[j::n] = 1.0
        A_eq.append(row)
        b_eq.append(1.0 / n)
    res = linprog(cost, A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert res.success, res.message
    return float(res.fun)


def ospa_bruteforce(A, B, p=2.0, c=5.0) -> float:
    A = [tuple(map(float, a)) for a in A]
    B = [tuple(map(float, b)) for b in B]
    if len(A) > len(B):
        A, B = B, A
    m, n = len(A), len(B)
    if n == 0:
        return 0.0
    if m == 0:
        return c
    best = math.inf
    for perm in itertools.permutations(range(n), m):
        s = sum(min(math.dist(A[i], B[perm[i]]), c) ** p for i in range(m))
        best = min(best, s)
    return min(((best + c**p * (n - m)) / n) ** (1.0 / p), c)


def dpp_enumerate(X, Y) -> float:
    """Mean over x of min over y, by explicit double loop."""
    nearest = []
    for x in X:
        best = math.inf
        for y in Y:
            acc = 0.0
            for a, b in zip(x, y):
                acc += (a - b) * (a - b)
            best = min(best, math.sqrt(acc))
        nearest.append(best)
    return math.fsum(nearest) / len(X)


def box_polygon(box) -> Polygon:
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    hl, hw = box.length / 2, box.width / 2
    pts = [(box.cx + c * u - s * v, box.cy + s * u + c * v) for u, v in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))]
    return Polygon(pts)


def iou_shapely(a, b) -> float:
    pa, pb = box_polygon(a), box_polygon(b)
    return pa.intersection(pb).area / pa.union(pb).area


def eps_components(points, eps, min_pts):
    """Density clusters by brute force: core points are those with at least
    ``min_pts`` neighbours (self included) within ``eps``; clusters are the
    connected components of core points plus border points attached to them.
    Returns a set of frozensets of point indices."""
    P = np.asarray(points, dtype=float)
    n = len(P)
    d = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    nb = d <= eps
    core = nb.sum(1) >= min_pts
    label = [-1] * n
    k = 0
    for s in range(n):
        if not core[s] or label[s] >= 0:
            continue
        stack = [s]
        label[s] = k
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(nb[i]):
                if label[j] < 0:
                    label[j] = k
                    if core[j]:
                        stack.append(j)
        k += 1
    groups = {}
    for i, l in enumerate(label):
        if l >= 0:
            groups.setdefault(l, set()).add(i)
    return {frozenset(g) for g in groups.values()}
