"""numba-compiled twins of the kernels in ``_numpy``.

Same signatures and tie-breaking (first minimum wins) so both backends
return identical results up to floating point summation order.
"""

from math import cos, gcd, inf, sin, sqrt

import numpy as np
from numba import njit

_EPS = 1e-12


@njit(cache=True)
def _slab(o, u, half):
    if abs(u) < _EPS:
        if abs(o) <= half:
            return -inf, inf
        return inf, -inf
    t1 = (-half - o) / u
    t2 = (half - o) / u
    if t1 < t2:
        return t1, t2
    return t2, t1


@njit(cache=True)
def _to_local(px, py, dx, dy, rect):
    c = cos(rect[2])
    s = sin(rect[2])
    rx = px - rect[0]
    ry = py - rect[1]
    return c * rx + s * ry, -s * rx + c * ry, c * dx + s * dy, -s * dx + c * dy


@njit(cache=True)
def ray_cast(origin, angles, rects, max_range):
    k = angles.shape[0]
    dist = np.full(k, inf)
    index = np.full(k, -1, dtype=np.int64)
    cosinc = np.zeros(k)
    for a in range(k):
        ux0 = cos(angles[a])
        uy0 = sin(angles[a])
        for r in range(rects.shape[0]):
            ox, oy, ux, uy = _to_local(origin[0], origin[1], ux0, uy0, rects[r])
            lx, hx = _slab(ox, ux, rects[r, 3] / 2.0)
            ly, hy = _slab(oy, uy, rects[r, 4] / 2.0)
            t_in = max(lx, ly)
            t_out = min(hx, hy)
            if t_in <= t_out and t_in > 0.0 and t_in <= max_range and t_in < dist[a]:
                dist[a] = t_in
                index[a] = r
                cosinc[a] = abs(ux) if lx >= ly else abs(uy)
    return dist, index, cosinc


@njit(cache=True)
def segments_blocked(origin, points, rects):
    k = points.shape[0]
    out = np.zeros(k, dtype=np.bool_)
    for p in range(k):
        dx = points[p, 0] - origin[0]
        dy = points[p, 1] - origin[1]
        for r in range(rects.shape[0]):
            ox, oy, ux, uy = _to_local(origin[0], origin[1], dx, dy, rects[r])
            lx, hx = _slab(ox, ux, rects[r, 3] / 2.0)
            ly, hy = _slab(oy, uy, rects[r, 4] / 2.0)
            t_in = max(lx, ly)
            t_out = min(hx, hy)
            if t_in <= t_out and t_out >= 0.0 and t_in <= 1.0:
                out[p] = True
                break
    return out


@njit(cache=True)
def nearest_distances(X, Y):
    m = X.shape[0]
    out = np.empty(m)
    for i in range(m):
        best = inf
        for j in range(Y.shape[0]):
            acc = 0.0
            for d in range(X.shape[1]):
                t = X[i, d] - Y[j, d]
                acc += t * t
            if acc < best:
                best = acc
        out[i] = sqrt(best)
    return out


@njit(cache=True)
def _cost_matrix(X, Y):
    m, n = X.shape[0], Y.shape[0]
    cost = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for d in range(X.shape[1]):
                t = X[i, d] - Y[j, d]
                acc += t * t
            cost[i, j] = sqrt(acc)
    return cost


@njit(cache=True)
def _emd_core(cost, supply, demand, total):
    m, n = cost.shape
    flow = np.zeros((m, n), dtype=np.int64)
    dx = np.empty(m)
    dy = np.empty(n)
    px = np.empty(m, dtype=np.int64)
    py = np.empty(n, dtype=np.int64)
    path_i = np.empty(2 * (m + n) + 2, dtype=np.int64)
    path_j = np.empty(2 * (m + n) + 2, dtype=np.int64)
    shipped = 0
    while shipped < total:
        for i in range(m):
            dx[i] = 0.0 if supply[i] > 0 else inf
            px[i] = -1
        for j in range(n):
            dy[j] = inf
            py[j] = -1
        for _ in range(m + n + 2):
            changed = False
            # forward arcs x -> y, relaxed column by column like argmin(axis=0)
            new_dy = dy.copy()
            new_py = py.copy()
            for j in range(n):
                best = inf
                arg = 0
                for i in range(m):
                    v = dx[i] + cost[i, j]
                    if v < best:
                        best = v
                        arg = i
                if best < dy[j] - _EPS:
                    new_dy[j] = best
                    new_py[j] = arg
                    changed = True
            dy[:] = new_dy
            py[:] = new_py
            # residual arcs y -> x where flow exists
            for i in range(m):
                best = inf
                arg = 0
                for j in range(n):
                    if flow[i, j] > 0:
                        v = dy[j] - cost[i, j]
                        if v < best:
                            best = v
                            arg = j
                if best < dx[i] - _EPS:
                    dx[i] = best
                    px[i] = arg
                    changed = True
            if not changed:
                break
        jend = -1
        best = inf
        for j in range(n):
            if demand[j] > 0 and dy[j] < best:
                best = dy[j]
                jend = j
        if jend < 0:
            raise RuntimeError("transport solver found no augmenting path")
        delta = demand[jend]
        length = 0
        jj = jend
        src = -1
        for _ in range(2 * (m + n) + 2):
            i = py[jj]
            path_i[length] = i
            path_j[length] = jj
            length += 1
            pj = px[i]
            if pj < 0:
                if supply[i] < delta:
                    delta = supply[i]
                src = i
                break
            if flow[i, pj] < delta:
                delta = flow[i, pj]
            jj = pj
        if src < 0:
            raise RuntimeError("transport solver failed to trace a path")
        # forward arcs gain delta; the arcs walked backwards between them lose it
        for s in range(length):
            flow[path_i[s], path_j[s]] += delta
            if s + 1 < length:
                flow[path_i[s], path_j[s + 1]] -= delta
        supply[src] -= delta
        demand[jend] -= delta
        shipped += delta
    acc = 0.0
    for i in range(m):
        for j in range(n):
            if flow[i, j] > 0:
                acc += flow[i, j] * cost[i, j]
    return acc / total


def emd_uniform(X, Y):
    m, n = X.shape[0], Y.shape[0]
    cost = _cost_matrix(X, Y)
    if m == 1 or n == 1:
        return float(cost.mean())
    g = gcd(m, n)
    supply = np.full(m, n // g, dtype=np.int64)
    demand = np.full(n, m // g, dtype=np.int64)
    return float(_emd_core(cost, supply, demand, m * n // g))
