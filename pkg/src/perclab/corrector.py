"""The corrector: harmonic deformation of the giant cluster and its diagnostics.

Three constructions are provided.

* ``solve_dirichlet``: in a finite box, chi vanishes on a boundary set and
  x + chi(x) is harmonic for the lazy walk everywhere else.
* ``solve_resolvent``: on a torus, solves ((1+eps) - P) psi = V, the per-site
  version of the environment resolvent, and anchors chi = psi - psi(anchor).
* ``solve_periodic``: the eps -> 0 limit on the torus, (1 - P) chi = V.

Harmonicity is always measured with local increments, so a torus field is
judged by ``e + chi(x+e) - chi(x)`` across the seam as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import rng
from .cluster import ClusterGraph, label_clusters
from .errors import DataError, DisconnectedInterior, NonPeriodic, NoSpanningCluster
from .lattice import PERIODIC, SLAB, BondConfig, unit_directions
from .linalg import laplacian, pcg

DIRICHLET = "dirichlet"
RESOLVENT = "resolvent"
PERIODIC_LIMIT = "periodic"


@dataclass
class CorrectorField:
    """chi on the giant cluster (rows follow ``cluster.sites``)."""

    cluster: ClusterGraph = field(repr=False)
    chi: np.ndarray = field(repr=False)
    method: str
    anchor: int
    residual: float
    boundary: np.ndarray | None = field(default=None, repr=False)
    eps: float | None = None
    psi: np.ndarray | None = field(default=None, repr=False)
    solver_residual: float = 0.0
    iterations: int = 0

    @property
    def interior(self) -> np.ndarray:
        """Giant-local mask of the sites where harmonicity is required."""
        if self.boundary is None:
            return np.ones(self.cluster.size, dtype=bool)
        return ~self.boundary

    def embedding(self) -> np.ndarray:
        """Deformed positions x + chi(x)."""
        return self.cluster.coords + self.chi

    def at(self, site) -> np.ndarray:
        return self.chi[self.cluster.index_of[site]]

    def relative(self, site=None) -> np.ndarray:
        """chi(.) - chi(site); ``site`` defaults to the origin (or the anchor if it is off the giant)."""
        if site is None:
            site = self.cluster.geometry.origin
            if not self.cluster.in_giant(site):
                site = self.anchor
        return self.chi - self.at(site)

    def with_chi(self, chi) -> "CorrectorField":
        return CorrectorField(self.cluster, np.asarray(chi, dtype=float), self.method, self.anchor,
                              self.residual, self.boundary, self.eps, self.psi)


def drift_field(cluster: ClusterGraph) -> np.ndarray:
    """V(x) = (1/2d) sum over open bonds at x of the bond direction."""
    ln = cluster.local_neighbors
    units = unit_directions(cluster.d).astype(float)
    return (ln >= 0).astype(float) @ units / (2 * cluster.d)


def _boundary_mask(cluster: ClusterGraph, boundary) -> np.ndarray:
    if boundary is None:
        mask_global = cluster.geometry.frame
    else:
        b = np.asarray(boundary)
        if b.dtype == bool:
            mask_global = b
        else:
            mask_global = np.zeros(cluster.geometry.n_sites, dtype=bool)
            mask_global[b.astype(np.int64)] = True
    off = mask_global & (cluster.index_of < 0)
    if boundary is not None and off.any():
        raise DataError(f"{int(off.sum())} boundary sites are not in the giant cluster")
    return mask_global[cluster.sites]


def _check_reaches_boundary(L, bmask):
    n = L.shape[0]
    if bmask.all():
        return
    if not bmask.any():
        raise DisconnectedInterior("boundary set is empty")
    ncomp, comp = connected_components(L, directed=False)
    has_boundary = np.zeros(ncomp, dtype=bool)
    has_boundary[comp[bmask]] = True
    if not has_boundary[comp].all():
        raise DisconnectedInterior("interior sites without a path to the boundary")


def solve_dirichlet(cluster: ClusterGraph, boundary=None, tol: float = 1e-10, max_iter=None) -> CorrectorField:
    """Harmonic embedding with chi = 0 on ``boundary`` (default: giant sites on the box frame).

    Interior equation per coordinate: ``(L chi)(x) = 2d V(x)``, i.e. the mean
    increment of x + chi vanishes. ``tol`` bounds the harmonicity defect.
    """
    d = cluster.d
    bmask = _boundary_mask(cluster, boundary)
    L = laplacian(cluster)
    _check_reaches_boundary(L, bmask)
    interior = np.flatnonzero(~bmask)
    chi = np.zeros((cluster.size, d))
    res, it = 0.0, 0
    if interior.size:
        L_ii = L[interior][:, interior].tocsr()
        rhs = 2 * d * drift_field(cluster)[interior]
        sol, res, it = pcg(L_ii, rhs, tol, max_iter=max_iter, scale=1.0 / (2 * d))
        chi[interior] = sol
    anchor = int(cluster.sites[np.flatnonzero(bmask)[0]])
    f = CorrectorField(cluster, chi, DIRICHLET, anchor, 0.0, bmask, solver_residual=res, iterations=it)
    f.residual = harmonicity_residual(f)
    return f


def _torus_cluster(config: BondConfig, cluster):
    if config.geometry.boundary != PERIODIC:
        raise NonPeriodic("the resolvent corrector needs a periodic geometry")
    cl = cluster if cluster is not None else label_clusters(config)
    if not cl.origin_in_giant:
        raise DataError("origin is not in the giant cluster")
    return cl


def solve_resolvent(config: BondConfig, eps: float, tol: float = 1e-10, cluster=None,
                    max_iter=None) -> CorrectorField:
    """Solve ((1+eps) I - P_lazy) psi = V on the torus giant cluster; chi = psi - psi(origin)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    cl = _torus_cluster(config, cluster)
    d = cl.d
    L = laplacian(cl)
    A = (L + sp.identity(cl.size) * (2 * d * eps)).tocsr()
    rhs = 2 * d * drift_field(cl)
    psi, res, it = pcg(A, rhs, tol, max_iter=max_iter, scale=1.0 / (2 * d))
    o = int(cl.index_of[cl.geometry.origin])
    f = CorrectorField(cl, psi - psi[o], RESOLVENT, int(cl.geometry.origin), 0.0, None, eps, psi,
                       solver_residual=res, iterations=it)
    f.residual = harmonicity_residual(f)
    return f


def solve_periodic(config: BondConfig, tol: float = 1e-10, cluster=None, max_iter=None) -> CorrectorField:
    """The eps -> 0 limit of the resolvent corrector: (1 - P_lazy) chi = V with chi(origin) = 0.

    V sums to zero over the torus cluster, so the singular system is
    consistent and CG converges on it.
    """
    cl = _torus_cluster(config, cluster)
    d = cl.d
    L = laplacian(cl)
    rhs = 2 * d * drift_field(cl)
    chi, res, it = pcg(L, rhs, tol, max_iter=max_iter, scale=1.0 / (2 * d))
    o = int(cl.index_of[cl.geometry.origin])
    f = CorrectorField(cl, chi - chi[o], PERIODIC_LIMIT, int(cl.geometry.origin), 0.0, None, 0.0,
                       solver_residual=res, iterations=it)
    f.residual = harmonicity_residual(f)
    return f


def mean_increments(field: CorrectorField) -> np.ndarray:
    """Per site (1/2d) sum over open e of [e + chi(x+e) - chi(x)], accumulated edge by edge."""
    cl = field.cluster
    d = cl.d
    u, v, k = cl.edges
    inc = unit_directions(d)[k] + field.chi[v] - field.chi[u]
    out = np.zeros((cl.size, d))
    np.add.at(out, u, inc)
    np.add.at(out, v, -inc)
    return out / (2 * d)


def harmonicity_residual(field: CorrectorField) -> float:
    """Largest component of the mean increment of x + chi over interior sites."""
    m = mean_increments(field)[field.interior]
    return float(np.abs(m).max()) if m.size else 0.0


class SlabPotential(NamedTuple):
    cluster: ClusterGraph
    u: np.ndarray
    origin_value: float
    residual: float
    top: np.ndarray
    bottom: np.ndarray

    @property
    def top_probability(self) -> float:
        return (self.origin_value + 1.0) / 2.0


def solve_slab(config: BondConfig, tol: float = 1e-12, cluster=None, max_iter=None) -> SlabPotential:
    """Harmonic potential with u = +1 on top (x_d = N) and -1 on bottom (x_d = -N) cluster sites."""
    g = config.geometry
    if g.boundary != SLAB:
        raise DataError("solve_slab needs a slab geometry")
    cl = cluster if cluster is not None else label_clusters(config)
    N = g.side // 2
    xd = cl.coords[:, -1]
    top = xd == N
    bottom = xd == -N
    if not top.any() or not bottom.any():
        raise NoSpanningCluster("giant cluster does not touch both bars")
    bmask = top | bottom
    L = laplacian(cl)
    _check_reaches_boundary(L, bmask)
    interior = np.flatnonzero(~bmask)
    u = np.where(top, 1.0, np.where(bottom, -1.0, 0.0))
    res = 0.0
    if interior.size:
        ub = u.copy()
        ub[interior] = 0.0
        rhs = -(L @ ub)[interior]
        L_ii = L[interior][:, interior].tocsr()
        sol, res, _ = pcg(L_ii, rhs, tol, max_iter=max_iter, scale=1.0 / (2 * cl.d))
        u[interior] = sol
    o = g.origin
    origin_value = float(u[cl.index_of[o]]) if cl.in_giant(o) else float("nan")
    return SlabPotential(cl, u, origin_value, res, top, bottom)


def loop_sums(field: CorrectorField, n_loops: int, seed: int, max_len: int = 200) -> float:
    """Largest |sum of chi increments| around sampled closed loops.

    A loop is an agile walk from a random site, stopped at its first return or
    after ``max_len`` steps and then closed by retracing itself.
    """
    cl = field.cluster
    if cl.size == 0:
        return 0.0
    ln = cl.local_neighbors.tolist()
    deg = cl.local_degrees.tolist()
    worst = 0.0
    for i in range(n_loops):
        key = rng.derive_key(seed, 7, i)
        start = int(rng.integers(key, 0, cl.size)[0])
        path = [start]
        x = start
        if deg[x]:
            u = rng.uniforms(key, np.arange(1, max_len + 1, dtype=np.uint64)).tolist()
            for uk in u:
                opts = [y for y in ln[x] if y >= 0]
                x = opts[min(int(uk * len(opts)), len(opts) - 1)]
                path.append(x)
                if x == start:
                    break
            if x != start:
                path = path + path[-2::-1]
        p = np.asarray(path)
        s = np.sum(field.chi[p[1:]] - field.chi[p[:-1]], axis=0)
        worst = max(worst, float(np.abs(s).max()))
    return worst


def sublinearity_profile(field: CorrectorField, radii, axis=None) -> list:
    """``(n, max_{|x|_inf <= n} |chi(x) - chi(0)| / n)`` per radius.

    With ``axis`` (0-based) only sites ``k e_axis`` are considered.
    """
    cl = field.cluster
    c = cl.coords
    rel = np.linalg.norm(field.relative(), axis=1)
    cmax = np.abs(c).max(axis=1)
    if axis is not None:
        on_axis = np.all(np.delete(c, axis, axis=1) == 0, axis=1)
    out = []
    for n in radii:
        sel = cmax <= n
        if axis is not None:
            sel &= on_axis
        val = float(rel[sel].max()) / n if sel.any() else 0.0
        out.append((int(n), val))
    return out


class GoodSites(NamedTuple):
    sites: np.ndarray
    good: np.ndarray
    axis_points: np.ndarray
    delta: float


def good_sites(field: CorrectorField, K: float, eps: float, n: int, axis: int = 0,
               chunk: int = 4096) -> GoodSites:
    """K,eps-good sites among giant sites with |x|_inf <= n, and the largest gap
    between consecutive good sites on ``[-n, n] e_axis``.

    A site x is good when |chi(y) - chi(x)| < K + eps |x - y| for every giant
    site y on a coordinate axis of the box.
    """
    cl = field.cluster
    c = cl.coords
    d = cl.d
    on_some_axis = (c != 0).sum(axis=1) <= 1
    ys = np.flatnonzero(on_some_axis)
    cand = np.flatnonzero(np.abs(c).max(axis=1) <= n)
    chi = field.chi
    good = np.empty(len(cand), dtype=bool)
    cy = c[ys].astype(float)
    chy = chi[ys]
    for lo in range(0, len(cand), chunk):
        idx = cand[lo:lo + chunk]
        dchi = np.linalg.norm(chy[None, :, :] - chi[idx][:, None, :], axis=2)
        dx = np.linalg.norm(cy[None, :, :] - c[idx].astype(float)[:, None, :], axis=2)
        good[lo:lo + chunk] = np.all(dchi < K + eps * dx, axis=1)
    on_line = np.all(np.delete(c[cand], axis, axis=1) == 0, axis=1) if d > 1 else np.ones(len(cand), bool)
    pts = np.sort(c[cand][on_line & good][:, axis])
    delta = float(np.diff(pts).max()) if len(pts) >= 2 else float("inf")
    return GoodSites(cl.sites[cand], good, pts, delta)


def energy_quadratic(cluster: ClusterGraph, f, P=None) -> float:
    """(f, (1 - P) f) with the uniform measure on the cluster, via the transition matrix."""
    from .walks import build_transition_matrix

    P = build_transition_matrix(cluster).matrix if P is None else P
    f = np.asarray(f, dtype=float).reshape(cluster.size, -1)
    return float(np.sum(f * (f - P @ f)) / cluster.size)


def energy_edges(cluster: ClusterGraph, f) -> float:
    """(1/2)(1/2d) sum over ordered neighbour pairs of (f(x) - f(y))^2, per site."""
    f = np.asarray(f, dtype=float).reshape(cluster.size, -1)
    u, v, _ = cluster.edges
    return float(np.sum((f[u] - f[v]) ** 2) / (2 * cluster.d) / cluster.size)
