"""Pure-numpy implementations of the hot kernels.

Rectangles are rows ``(cx, cy, yaw, length, width)``.  Every function here
has a loop-based twin in ``_numba`` that must agree with it.
"""

from math import gcd

import numpy as np

_EPS = 1e-12


def _local_frame(origins, dirs, rects):
    """Express rays/segments in each rectangle's body frame.

    Returns arrays of shape (K, R) for the local origin and direction
    components.
    """
    c = np.cos(rects[:, 2])
    s = np.sin(rects[:, 2])
    dx = origins[:, 0:1] - rects[None, :, 0]
    dy = origins[:, 1:2] - rects[None, :, 1]
    ox = c * dx + s * dy
    oy = -s * dx + c * dy
    ux = c * dirs[:, 0:1] + s * dirs[:, 1:2]
    uy = -s * dirs[:, 0:1] + c * dirs[:, 1:2]
    return ox, oy, ux, uy


def _slab(o, u, half):
    """Entry/exit parameters of a line through one slab ``|q| <= half``."""
    # near-parallel rays overflow to inf; those lanes are replaced below
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t1 = (-half - o) / u
        t2 = (half - o) / u
    lo = np.minimum(t1, t2)
    hi = np.maximum(t1, t2)
    parallel = np.abs(u) < _EPS
    inside = np.abs(o) <= half
    lo = np.where(parallel, np.where(inside, -np.inf, np.inf), lo)
    hi = np.where(parallel, np.where(inside, np.inf, -np.inf), hi)
    return lo, hi


def ray_cast(origin, angles, rects, max_range):
    """Nearest hit of rays fanned out from ``origin`` at world ``angles``.

    Returns ``(distance, rect_index, cos_incidence)``; rays without a hit
    inside ``max_range`` get ``inf``, ``-1`` and ``0``.  Only entries strictly
    ahead of the origin count, so a rectangle that contains or touches the
    origin never blocks.
    """
    angles = np.asarray(angles, dtype=np.float64)
    k = angles.shape[0]
    dist = np.full(k, np.inf)
    index = np.full(k, -1, dtype=np.int64)
    cosinc = np.zeros(k)
    if rects.shape[0] == 0 or k == 0:
        return dist, index, cosinc
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    origins = np.broadcast_to(np.asarray(origin, dtype=np.float64), (k, 2))
    ox, oy, ux, uy = _local_frame(origins, dirs, rects)
    hl = rects[None, :, 3] / 2.0
    hw = rects[None, :, 4] / 2.0
    lx, hx = _slab(ox, ux, hl)
    ly, hy = _slab(oy, uy, hw)
    t_in = np.maximum(lx, ly)
    t_out = np.minimum(hx, hy)
    hit = (t_in <= t_out) & (t_in > 0.0) & (t_in <= max_range)
    t = np.where(hit, t_in, np.inf)
    best = np.argmin(t, axis=1)
    rows = np.arange(k)
    tbest = t[rows, best]
    found = np.isfinite(tbest)
    dist[found] = tbest[found]
    index[found] = best[found]
    # the entry face is the slab that bounds t_in; its normal is a body axis
    via_x = lx[rows, best] >= ly[rows, best]
    cosinc[found] = np.where(via_x, np.abs(ux[rows, best]), np.abs(uy[rows, best]))[found]
    return dist, index, cosinc


def segments_blocked(origin, points, rects):
    """True where the segment ``origin -> point`` touches any rectangle."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    k = points.shape[0]
    if rects.shape[0] == 0 or k == 0:
        return np.zeros(k, dtype=bool)
    origins = np.broadcast_to(np.asarray(origin, dtype=np.float64), (k, 2))
    dirs = points - origins
    ox, oy, ux, uy = _local_frame(origins, dirs, rects)
    lx, hx = _slab(ox, ux, rects[None, :, 3] / 2.0)
    ly, hy = _slab(oy, uy, rects[None, :, 4] / 2.0)
    t_in = np.maximum(lx, ly)
    t_out = np.minimum(hx, hy)
    hit = (t_in <= t_out) & (t_out >= 0.0) & (t_in <= 1.0)
    return hit.any(axis=1)


def nearest_distances(X, Y):
    """For each row of X, the Euclidean distance to its nearest row of Y."""
    diff = X[:, None, :] - Y[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2)).min(axis=1)


def emd_uniform(X, Y):
    """Exact earth mover's distance between uniform point masses on X and Y.

    Masses are scaled to integers (each x carries N/g units, each y M/g
    with g = gcd(M, N)) and the transportation problem is solved by
    successive shortest paths with Bellman-Ford relaxation, which tolerates
    the negative-cost residual arcs.
    """
    m, n = X.shape[0], Y.shape[0]
    diff = X[:, None, :] - Y[None, :, :]
    cost = np.sqrt((diff * diff).sum(axis=2))
    if m == 1 or n == 1:
        return float(cost.mean())
    g = gcd(m, n)
    supply = np.full(m, n // g, dtype=np.int64)
    demand = np.full(n, m // g, dtype=np.int64)
    total = m * n // g
    flow = np.zeros((m, n), dtype=np.int64)
    cols = np.arange(n)
    rows = np.arange(m)
    shipped = 0
    while shipped < total:
        dx = np.where(supply > 0, 0.0, np.inf)
        px = np.full(m, -1, dtype=np.int64)
        dy = np.full(n, np.inf)
        py = np.full(n, -1, dtype=np.int64)
        for _ in range(m + n + 2):
            cand = dx[:, None] + cost
            iy = np.argmin(cand, axis=0)
            vy = cand[iy, cols]
            uy = vy < dy - _EPS
            dy[uy] = vy[uy]
            py[uy] = iy[uy]
            back = np.where(flow > 0, dy[None, :] - cost, np.inf)
            jx = np.argmin(back, axis=1)
            vx = back[rows, jx]
            ux = vx < dx - _EPS
            dx[ux] = vx[ux]
            px[ux] = jx[ux]
            if not (uy.any() or ux.any()):
                break
        j = int(np.argmin(np.where(demand > 0, dy, np.inf)))
        # walk back to a source, collecting the bottleneck
        fwd = []
        rev = []
        delta = demand[j]
        jj = j
        for _ in range(2 * (m + n) + 2):
            i = int(py[jj])
            fwd.append((i, jj))
            pj = int(px[i])
            if pj < 0:
                delta = min(delta, supply[i])
                break
            rev.append((i, pj))
            delta = min(delta, flow[i, pj])
            jj = pj
        else:  # pragma: no cover - would mean a corrupted predecessor tree
            raise RuntimeError("transport solver failed to trace a path")
        for a, b in fwd:
            flow[a, b] += delta
        for a, b in rev:
            flow[a, b] -= delta
        supply[fwd[-1][0]] -= delta
        demand[j] -= delta
        shipped += delta
    return float((flow * cost).sum() / total)
