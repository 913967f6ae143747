"""Connected clusters of a bond configuration and queries on the giant one."""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import EmptyCluster, EmptyShell
from .lattice import BondConfig, direction_index, unit_directions


class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by size and path halving."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a):
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def roots(self):
        return np.fromiter((self.find(i) for i in range(len(self.parent))),
                           dtype=np.int64, count=len(self.parent))


@dataclass(frozen=True, eq=False)
class ClusterGraph:
    """Cluster decomposition of a configuration with the giant cluster singled out.

    ``labels[s]`` is the smallest site index in the cluster of ``s``.
    ``neighbors[s, k]`` is the site across the open bond in direction ``k``
    (order +e_0, -e_0, +e_1, ...) or -1 when that bond is closed.
    ``sites`` lists the giant-cluster sites in increasing order and
    ``index_of`` maps a site to its position there (-1 off the giant).
    """

    config: BondConfig = field(repr=False)
    labels: np.ndarray = field(repr=False)
    giant: int
    sites: np.ndarray = field(repr=False)
    neighbors: np.ndarray = field(repr=False)
    degrees: np.ndarray = field(repr=False)
    index_of: np.ndarray = field(repr=False)
    degenerate: bool = False

    @property
    def geometry(self):
        return self.config.geometry

    @property
    def d(self) -> int:
        return self.config.geometry.d

    @property
    def size(self) -> int:
        return len(self.sites)

    def in_giant(self, site) -> bool:
        return site >= 0 and self.index_of[site] >= 0

    @property
    def origin_in_giant(self) -> bool:
        return self.in_giant(self.geometry.origin)

    def adjacency(self, site) -> list:
        return [int(v) for v in self.neighbors[site] if v >= 0]

    @cached_property
    def local_neighbors(self) -> np.ndarray:
        """``(size, 2d)`` neighbour table in giant-local indices, -1 for closed bonds."""
        nb = self.neighbors[self.sites]
        return np.where(nb >= 0, self.index_of[np.maximum(nb, 0)], -1)

    @cached_property
    def neighbor_lists(self) -> list:
        """``local_neighbors`` as nested Python lists, for scalar walk loops."""
        return self.local_neighbors.tolist()

    @cached_property
    def local_degrees(self) -> np.ndarray:
        return self.degrees[self.sites]

    @cached_property
    def edges(self) -> tuple:
        """Open edges inside the giant, once each: ``(u, v, direction)`` in local indices, u -> v along +e."""
        ln = self.local_neighbors
        us, ks = [], []
        for a in range(self.d):
            col = ln[:, 2 * a]
            u = np.flatnonzero(col >= 0)
            us.append(u)
            ks.append(np.full(len(u), 2 * a))
        u = np.concatenate(us)
        k = np.concatenate(ks)
        return u, ln[u, k], k

    @cached_property
    def coords(self) -> np.ndarray:
        """Lattice coordinates of the giant-cluster sites."""
        return self.geometry.coords(self.sites)

    def component_sizes(self) -> dict:
        lab, cnt = np.unique(self.labels, return_counts=True)
        return dict(zip(lab.tolist(), cnt.tolist()))


def label_clusters(config: BondConfig) -> ClusterGraph:
    """Union-find cluster labelling; the giant is the largest cluster (ties: smallest site)."""
    g = config.geometry
    n = g.n_sites
    d = g.d
    geo = g.geometric_neighbors
    slots = np.flatnonzero(config.bits)
    a_sites = slots // d
    b_sites = geo[a_sites, 2 * (slots % d)]

    uf = UnionFind(n)
    for a, b in zip(a_sites.tolist(), b_sites.tolist()):
        uf.union(a, b)
    roots = uf.roots()
    smallest = np.full(n, n, dtype=np.int64)
    np.minimum.at(smallest, roots, np.arange(n))
    labels = smallest[roots]

    counts = np.bincount(labels, minlength=n)
    giant = int(np.argmax(counts))
    sites = np.flatnonzero(labels == giant)
    index_of = np.full(n, -1, dtype=np.int64)
    index_of[sites] = np.arange(len(sites))

    neighbors = np.full((n, 2 * d), -1, dtype=np.int64)
    bits = config.bits.reshape(n, d)
    for a in range(d):
        plus = geo[:, 2 * a]
        neighbors[:, 2 * a] = np.where(bits[:, a], plus, -1)
        minus = geo[:, 2 * a + 1]
        open_minus = np.zeros(n, dtype=bool)
        ok = minus >= 0
        open_minus[ok] = bits[minus[ok], a]
        neighbors[:, 2 * a + 1] = np.where(open_minus, minus, -1)
    degrees = (neighbors >= 0).sum(axis=1)

    degenerate = len(slots) == 0 and n > 1
    if degenerate:
        warnings.warn("no open bond: giant cluster is a single site", EmptyCluster, stacklevel=2)
    return ClusterGraph(config, labels, giant, sites, neighbors, degrees, index_of, degenerate)


def bfs_distances(cluster: ClusterGraph, source: int, target: int | None = None) -> np.ndarray:
    """Graph distances from ``source`` over open bonds (-1 where unreachable).

    With ``target`` given the search stops as soon as it is reached.
    """
    nb = cluster.neighbors
    dist = np.full(len(nb), -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        x = queue.popleft()
        if x == target:
            break
        dx = dist[x] + 1
        for y in nb[x]:
            if y >= 0 and dist[y] < 0:
                dist[y] = dx
                queue.append(y)
    return dist


def chemical_distance(cluster: ClusterGraph, x: int, y: int):
    """Length of the shortest open path from site ``x`` to site ``y``; None if unreachable."""
    if x == y:
        return 0
    if cluster.labels[x] != cluster.labels[y]:
        return None
    return int(bfs_distances(cluster, x, target=y)[y])


def arrival_points(cluster: ClusterGraph, e, k_max: int) -> list:
    """All k in (0, k_max] with ``origin + k e`` in the giant cluster, increasing."""
    g = cluster.geometry
    if not cluster.origin_in_giant:
        raise ValueError("origin is not in the giant cluster")
    step = unit_directions(g.d)[direction_index(e)]
    out = []
    for k in range(1, k_max + 1):
        s = g.index(k * step)
        if s < 0:
            break
        if cluster.in_giant(s):
            out.append(k)
    return out


class ConductanceRow(NamedTuple):
    R: int
    phi: float
    volume: int
    boundary_edges: int
    stationary_mass: int

    @property
    def isoperimetric_ratio(self) -> float:
        return self.boundary_edges / self.volume


def conductance_profile(cluster: ClusterGraph, shells) -> list:
    """Conductance of ``S = giant ∩ [-R, R]^d`` for each R.

    The stationary measure is the degree and every open edge carries unit flow,
    so ``phi = (#open edges leaving S) / (sum of degrees over S)``.
    """
    g = cluster.geometry
    if not g.centered:
        raise ValueError("conductance profile needs an origin-centred geometry")
    cmax = np.abs(cluster.coords).max(axis=1)
    ln = cluster.local_neighbors
    deg = cluster.local_degrees
    rows = []
    for R in shells:
        inside = cmax <= R
        vol = int(inside.sum())
        if vol == 0:
            raise EmptyShell(f"no cluster site within radius {R}")
        nb = ln[inside]
        out_edges = int(((nb >= 0) & ~inside[np.maximum(nb, 0)]).sum())
        mass = int(deg[inside].sum())
        rows.append(ConductanceRow(int(R), out_edges / mass, vol, out_edges, mass))
    return rows


def conductance_function(rows, r: float) -> float:
    """Infimum of phi over the given shells with stationary mass at most ``r``."""
    vals = [row.phi for row in rows if row.stationary_mass <= r]
    return min(vals) if vals else float("inf")
