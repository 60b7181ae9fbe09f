"""Marching-squares iso-contours on a rectilinear grid."""
from __future__ import annotations

import numpy as np

# Corner order: 0=(i,j) 1=(i+1,j) 2=(i+1,j+1) 3=(i,j+1); bit k set when corner k >= level.
# Edges: 0 bottom (0-1), 1 right (1-2), 2 top (3-2), 3 left (0-3).
_SEGMENTS = {
    0: (), 15: (),
    1: ((3, 0),), 14: ((3, 0),),
    2: ((0, 1),), 13: ((0, 1),),
    3: ((3, 1),), 12: ((3, 1),),
    4: ((1, 2),), 11: ((1, 2),),
    6: ((0, 2),), 9: ((0, 2),),
    7: ((3, 2),), 8: ((3, 2),),
}
# Saddles keyed by (case, centre_above).
_SADDLES = {
    (5, True): ((3, 2), (0, 1)),
    (5, False): ((3, 0), (1, 2)),
    (10, True): ((3, 0), (1, 2)),
    (10, False): ((3, 2), (0, 1)),
}


def _edge_key(i, j, edge):
    # horizontal edges ('h', i, j) join (i,j)-(i+1,j); vertical ('v', i, j) join (i,j)-(i,j+1)
    if edge == 0:
        return ("h", i, j)
    if edge == 1:
        return ("v", i + 1, j)
    if edge == 2:
        return ("h", i, j + 1)
    return ("v", i, j)


def _crossing(key, xs, ys, values, level):
    kind, i, j = key
    if kind == "h":
        a, b = values[j, i], values[j, i + 1]
        s = (level - a) / (b - a)
        return (xs[i] + s * (xs[i + 1] - xs[i]), ys[j])
    a, b = values[j, i], values[j + 1, i]
    s = (level - a) / (b - a)
    return (xs[i], ys[j] + s * (ys[j + 1] - ys[j]))


def marching_squares(xs, ys, values, level: float) -> list[np.ndarray]:
    """Polylines where ``values`` crosses ``level``.

    ``values[j, i]`` is the field at ``(xs[i], ys[j])``. Crossings are
    linearly interpolated along cell edges and ambiguous saddle cells are
    resolved with the mean of their four corners. Each polyline is a
    ``(k, 2)`` array; closed loops repeat their first vertex at the end.
    Output order is deterministic: open chains first (from their lowest
    boundary edge), then loops, both in grid scan order.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    if len(xs) != nx or len(ys) != ny:
        raise ValueError("grid axes do not match the value array")
    above = values >= level
    segments = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            case = (int(above[j, i]) | int(above[j, i + 1]) << 1
                    | int(above[j + 1, i + 1]) << 2 | int(above[j + 1, i]) << 3)
            if case in (5, 10):
                centre = values[j:j + 2, i:i + 2].mean() >= level
                pairs = _SADDLES[(case, bool(centre))]
            else:
                pairs = _SEGMENTS[case]
            for e0, e1 in pairs:
                segments.append((_edge_key(i, j, e0), _edge_key(i, j, e1)))

    touching: dict = {}
    for s, (a, b) in enumerate(segments):
        touching.setdefault(a, []).append(s)
        touching.setdefault(b, []).append(s)
    used = [False] * len(segments)
    points: dict = {}

    def point(key):
        if key not in points:
            points[key] = _crossing(key, xs, ys, values, level)
        return points[key]

    def walk(start_key, first_seg):
        chain = [start_key]
        key, seg = start_key, first_seg
        while seg is not None:
            used[seg] = True
            a, b = segments[seg]
            key = b if a == key else a
            chain.append(key)
            seg = next((s for s in touching[key] if not used[s]), None)
        return np.array([point(k) for k in chain])

    lines = []
    for key in sorted(k for k, segs in touching.items() if len(segs) == 1):
        seg = touching[key][0]
        if not used[seg]:
            lines.append(walk(key, seg))
    for s in range(len(segments)):
        if not used[s]:
            lines.append(walk(segments[s][0], s))
    return lines
