"""Planar drawings of the giant cluster before and after the harmonic deformation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .cluster import ClusterGraph
from .errors import NotPlanarDimension
from .lattice import unit_directions

MARGIN = 0.05


@dataclass(frozen=True)
class SvgStyle:
    stroke_width: float = 0.15   # lattice units
    scale: float = 6.0           # pixels per lattice unit
    stroke: str = "#1f3a93"
    star: str = "#d62728"
    gap: float = 20.0            # pixels between panels


def _fmt(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _star(cx, cy, r):
    pts = []
    for i in range(10):
        rad = r if i % 2 == 0 else r * 0.4
        a = math.pi / 2 + i * math.pi / 5
        pts.append(f"{_fmt(cx + rad * math.cos(a))},{_fmt(cy - rad * math.sin(a))}")
    return " ".join(pts)


def _panel(pid, pos, ends, u, origin_pos, style, x_off):
    """Nested <svg> whose viewBox is the bounding box of ``pos`` plus a 5% margin (y flipped).

    Edge ``i`` runs from ``pos[u[i]]`` to ``ends[i]``.
    """
    flip = np.array([1.0, -1.0])
    xy = pos * flip if len(pos) else np.zeros((1, 2))
    xe = ends * flip
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = np.maximum(hi - lo, 1.0)
    lo = lo - MARGIN * span
    size = span * (1 + 2 * MARGIN)
    w, h = size * style.scale
    out = [f'<g id="{pid}">',
           f'<svg x="{_fmt(x_off)}" y="0" width="{_fmt(w)}" height="{_fmt(h)}" '
           f'viewBox="{_fmt(lo[0])} {_fmt(lo[1])} {_fmt(size[0])} {_fmt(size[1])}">',
           f'<g class="edges" stroke="{style.stroke}" stroke-width="{_fmt(style.stroke_width)}" '
           f'stroke-linecap="round">']
    for a, (bx, by) in zip(u.tolist(), xe.tolist()):
        out.append(f'<line x1="{_fmt(xy[a, 0])}" y1="{_fmt(xy[a, 1])}" '
                   f'x2="{_fmt(bx)}" y2="{_fmt(by)}"/>')
    out.append("</g>")
    if origin_pos is not None:
        r = max(0.6, 0.02 * float(size.max()))
        out.append(f'<polygon class="origin" fill="{style.star}" '
                   f'points="{_star(origin_pos[0], -origin_pos[1], r)}"/>')
    out += ["</svg>", "</g>"]
    return out, w, h


def render_positions_svg(cluster: ClusterGraph, after: np.ndarray, style: SvgStyle | None = None,
                         run_spec: dict | None = None, title: str = "") -> str:
    """Before panel at lattice positions, after panel at ``after`` (one row per giant site).

    Every edge is drawn from its lower endpoint along the local increment
    ``e + shift(v) - shift(u)``, so bonds across a torus seam appear as short
    stubs rather than lines spanning the picture.
    """
    if cluster.d != 2:
        raise NotPlanarDimension(f"rendering needs d = 2, got d = {cluster.d}")
    style = style or SvgStyle()
    u, v, k = cluster.edges
    before = cluster.coords.astype(float)
    after = np.asarray(after, dtype=float)
    step = unit_directions(2)[k]
    shift = after - before
    ends_before = before[u] + step
    ends_after = after[u] + step + shift[v] - shift[u]
    o = cluster.geometry.origin
    o_loc = int(cluster.index_of[o]) if cluster.in_giant(o) else None
    p1, w1, h1 = _panel("before", before, ends_before, u, None if o_loc is None else before[o_loc], style, 0.0)
    p2, w2, h2 = _panel("after", after, ends_after, u, None if o_loc is None else after[o_loc], style, w1 + style.gap)
    W, H = w1 + style.gap + w2, max(h1, h2)
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(W)}" height="{_fmt(H)}" '
            f'viewBox="0 0 {_fmt(W)} {_fmt(H)}">']
    if title:
        head.append(f"<title>{escape(title)}</title>")
    meta = {"format_version": 1, "run_spec": run_spec, "edges": int(len(u))}
    head.append(f"<metadata>{escape(json.dumps(meta, sort_keys=True))}</metadata>")
    return "\n".join(head + p1 + p2 + ["</svg>"]) + "\n"


def render_embedding_svg(cluster: ClusterGraph, field=None, style: SvgStyle | None = None,
                         run_spec: dict | None = None) -> str:
    """Edges between x (left) and x + chi(x) (right); without a field both panels coincide."""
    chi = np.zeros((cluster.size, cluster.d)) if field is None else field.chi
    return render_positions_svg(cluster, cluster.coords + chi, style, run_spec, "harmonic embedding")


def render_slab_svg(potential, style: SvgStyle | None = None, run_spec: dict | None = None) -> str:
    """Slab variant: the vertical coordinate is replaced by N u(x), so the bars stay at -N and +N."""
    cl = potential.cluster
    N = cl.geometry.side // 2
    after = cl.coords.astype(float)
    after[:, -1] = N * potential.u
    return render_positions_svg(cl, after, style, run_spec, "slab potential")


def count_edges(svg: str) -> int:
    """Number of edges drawn in the ``after`` panel."""
    start = svg.index('<g id="after">')
    return svg.count("<line ", start)
