"""Small planar geometry helpers shared by the sensor models and metrics."""

import math

import numpy as np


def wrap_angle(a):
    """Map an angle (scalar or array) into (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w <= -np.pi, w + 2.0 * np.pi, w)
    if np.ndim(w) == 0:
        return float(w)
    return w


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rect_corners(cx: float, cy: float, yaw: float, length: float, width: float) -> np.ndarray:
    """Corners in counter-clockwise order, starting front-right."""
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]])
    return local @ rotation(yaw).T + np.array([cx, cy])


def perimeter_points(length: float, width: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` points evenly spaced by arc length along a rectangle outline.

    Body-frame coordinates, walking counter-clockwise from the front-right
    corner with a half-step offset so no point sits exactly on a corner.
    Returns ``(points, outward_normals)``.
    """
    hl, hw = length / 2.0, width / 2.0
    starts = np.array([[hl, -hw], [hl, hw], [-hl, hw], [-hl, -hw]])
    dirs = np.array([[0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]])
    normals = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    lengths = np.array([width, length, width, length])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    s = (np.arange(n) + 0.5) * cum[-1] / n
    edge = np.minimum(np.searchsorted(cum, s, side="right") - 1, 3)
    along = s - cum[edge]
    return starts[edge] + dirs[edge] * along[:, None], normals[edge]


def visible_edge_points(
    cx: float, cy: float, yaw: float, length: float, width: float,
    viewer: np.ndarray, n: int,
) -> np.ndarray:
    """``n`` points spread evenly over the edges that face ``viewer``.

    Returns world coordinates; empty when the viewer sits inside the box.
    """
    corners = rect_corners(cx, cy, yaw, length, width)
    segs = []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        mid = (a + b) / 2.0
        normal = np.array([b[1] - a[1], -(b[0] - a[0])])
        if float(np.dot(normal, np.asarray(viewer) - mid)) > 0.0:
            segs.append((a, b))
    if not segs:
        return np.empty((0, 2))
    lens = np.array([np.hypot(*(b - a)) for a, b in segs])
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    s = (np.arange(n) + 0.5) * cum[-1] / n
    idx = np.minimum(np.searchsorted(cum, s, side="right") - 1, len(segs) - 1)
    out = np.empty((n, 2))
    for k in range(n):
        a, b = segs[idx[k]]
        out[k] = a + (b - a) * ((s[k] - cum[idx[k]]) / lens[idx[k]])
    return out


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area of a simple polygon (absolute value)."""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clipping of ``subject`` by a convex CCW ``clipper``."""
    out = [tuple(p) for p in subject]
    n = len(clipper)
    for k in range(n):
        if not out:
            break
        ax, ay = clipper[k]
        bx, by = clipper[(k + 1) % n]
        ex, ey = bx - ax, by - ay

        def side(p):
            return ex * (p[1] - ay) - ey * (p[0] - ax)

        inp, out = out, []
        prev = inp[-1]
        sp = side(prev)
        for cur in inp:
            sc = side(cur)
            if sc >= 0.0:
                if sp < 0.0:
                    out.append(_cross_point(prev, cur, sp, sc))
                out.append(cur)
            elif sp >= 0.0:
                out.append(_cross_point(prev, cur, sp, sc))
            prev, sp = cur, sc
    return np.array(out, dtype=np.float64).reshape(-1, 2)


def _cross_point(p, q, sp, sq):
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))
