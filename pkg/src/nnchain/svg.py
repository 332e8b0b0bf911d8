"""Static SVG drawings of instances and results."""

from __future__ import annotations

import numpy as np

SIZE = 480
PAD = 20


class _Canvas:
    def __init__(self, pts, flip=True):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            pts = np.zeros((1, 2))
        self.lo = pts.min(axis=0)
        span = float(np.max(pts.max(axis=0) - self.lo)) or 1.0
        self.scale = (SIZE - 2 * PAD) / span
        self.flip = flip
        self.items = []

    def xy(self, p):
        x = PAD + (p[0] - self.lo[0]) * self.scale
        y = PAD + (p[1] - self.lo[1]) * self.scale
        return x, (SIZE - y if self.flip else y)

    def line(self, a, b, color="#333", width=1.0):
        (x1, y1), (x2, y2) = self.xy(a), self.xy(b)
        self.items.append(f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                          f'stroke="{color}" stroke-width="{width}"/>')

    def dot(self, p, color="#c00", r=3.0):
        x, y = self.xy(p)
        self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{r}" fill="{color}"/>')

    def ring(self, p, radius, color="#06c"):
        x, y = self.xy(p)
        self.items.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius * self.scale:.2f}" '
                          f'fill="none" stroke="{color}"/>')

    def cross(self, p, color="#06c", r=4.0):
        x, y = self.xy(p)
        self.items.append(f'<path d="M{x - r:.2f},{y - r:.2f}L{x + r:.2f},{y + r:.2f}'
                          f'M{x - r:.2f},{y + r:.2f}L{x + r:.2f},{y - r:.2f}" stroke="{color}"/>')

    def render(self):
        body = "\n".join(self.items)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
                f'viewBox="0 0 {SIZE} {SIZE}">\n<rect width="100%" height="100%" fill="white"/>\n{body}\n</svg>\n')


def _tour(points, edges):
    pts = np.asarray(points, dtype=float)[:, :2]
    c = _Canvas(pts)
    for i, j in edges:
        c.line(pts[i], pts[j])
    for p in pts:
        c.dot(p)
    return c.render()


def _motorcycles(payload, result):
    starts = np.array([m["start"] for m in payload["motorcycles"]], dtype=float)
    ends = []
    statuses = result["statuses"] if result else [None] * len(starts)
    for m, s in zip(payload["motorcycles"], statuses):
        if s and s["status"] == "crashed":
            ends.append(s["point"])
        else:
            d = np.asarray(m["dir"], dtype=float)
            ends.append(np.asarray(m["start"]) + 3.0 * d / np.hypot(*d))
    ends = np.asarray(ends, dtype=float)
    c = _Canvas(np.vstack([starts, ends]))
    for a, b in zip(starts, ends):
        c.line(a, b)
        c.dot(a, r=2.5)
    return c.render()


def _matching(payload, result):
    left = np.asarray(payload["left"], dtype=float)[:, :2]
    right = np.asarray(payload["right"], dtype=float)[:, :2]
    c = _Canvas(np.vstack([left, right]))
    for l, r in (result or {}).get("pairs", []):
        c.line(left[l], right[r], color="#999")
    for p in left:
        c.dot(p, "#c00")
    for p in right:
        c.dot(p, "#06c")
    return c.render()


def _cover(payload, result):
    cl = np.asarray(payload["clients"], dtype=float)
    sv = np.asarray(payload["servers"], dtype=float)
    radii = (result or {}).get("radii", [0.0] * len(sv))
    xs = np.concatenate([cl, sv - radii, sv + radii]) if len(sv) else cl
    extent = np.column_stack([xs, np.zeros_like(xs)])
    c = _Canvas(extent)
    c.lo = c.lo - np.array([0.0, (SIZE - 2 * PAD) / (2 * c.scale)])
    for x in cl:
        c.dot((x, 0.0))
    for x, r in zip(sv, radii):
        c.cross((x, 0.0))
        if r > 0:
            c.ring((x, 0.0), r)
    return c.render()


def _graph(payload, result):
    if payload.get("coords") is None:
        raise ValueError("graph instance has no coords to draw")
    xy = np.asarray(payload["coords"], dtype=float)
    c = _Canvas(xy)
    for u, v, _ in payload["edges"]:
        c.line(xy[u], xy[v], color="#ccc")
    walk = (result or {}).get("walk", [])
    for u, v in zip(walk, walk[1:]):
        c.line(xy[u], xy[v], color="#c00", width=2.0)
    for s in payload["sites"]:
        c.dot(xy[s], "#06c")
    return c.render()


def render(kind, payload, result=None) -> str:
    """SVG text for an instance payload, drawing ``result`` when given."""
    if kind in ("points", "paths"):
        edges = (result or {}).get("edges")
        if edges is None:
            edges = [(p[i], p[i + 1]) for p in payload.get("paths", []) for i in range(len(p) - 1)]
        return _tour(payload["points"], edges)
    draw = {"motorcycles": _motorcycles, "matching": _matching, "cover": _cover, "graph": _graph}
    if kind not in draw:
        raise ValueError(f"cannot render kind {kind!r}")
    return draw[kind](payload, result)
