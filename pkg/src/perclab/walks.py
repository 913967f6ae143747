"""Lazy, agile and continuous-time simple random walks on the giant cluster.

Randomness for replicate ``r`` of a run seeded with ``seed`` comes from the
stream ``derive_key(seed, WALK_STREAM, r)``; step ``k`` of the walk consumes
counter ``k``. A single path and the ``r``-th member of a vectorized ensemble
are therefore the same realization, whatever the chunking or thread count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import rng
from .cluster import ClusterGraph
from .errors import IsolatedStart, PathTooShort, StartOffCluster, TooLarge
from .lattice import unit_directions

LAZY = "lazy"
AGILE = "agile"
CTRW = "ctrw"

WALK_STREAM = 1
DENSE_CAP = 20_000
SPARSE_CAP = 500_000


@dataclass
class WalkPath:
    """One realization. ``sites`` are global site indices, ``positions`` are
    unwrapped lattice coordinates (a torus walk keeps counting past the seam).
    ``move_times`` starts with 0 and then lists every k with X_k != X_{k-1}.
    """

    sites: np.ndarray
    positions: np.ndarray
    move_times: np.ndarray
    kind: str
    clock: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.sites)

    @property
    def n_steps(self) -> int:
        return len(self.sites) - 1


@dataclass
class TransitionMatrix:
    """Row-stochastic kernel over the giant cluster (rows/cols are giant-local indices)."""

    sites: np.ndarray
    matrix: object
    kind: str
    drift: np.ndarray = field(repr=False)

    @property
    def dense(self) -> np.ndarray:
        m = self.matrix
        return m.toarray() if sp.issparse(m) else np.asarray(m)


def _local_start(cluster: ClusterGraph, start) -> int:
    if start is None:
        start = cluster.geometry.origin
    if start < 0 or not cluster.in_giant(start):
        raise StartOffCluster(f"site {start} is not in the giant cluster")
    return int(cluster.index_of[start])


def _lazy_table(cluster: ClusterGraph) -> np.ndarray:
    ln = cluster.local_neighbors
    own = np.arange(cluster.size)[:, None]
    return np.where(ln >= 0, ln, own)


def _agile_tables(cluster: ClusterGraph):
    ln = cluster.local_neighbors
    deg = cluster.local_degrees
    order = np.argsort(ln < 0, axis=1, kind="stable")
    return order, deg


def walk_keys(seed: int, replicates) -> np.ndarray:
    return rng.stream_keys(rng.derive_key(seed, WALK_STREAM), np.asarray(replicates, dtype=np.int64))


def run_lazy(cluster: ClusterGraph, start, n_steps: int, seed: int, replicate: int = 0) -> WalkPath:
    """Blind-ant walk: pick one of 2d directions, move iff that bond is open."""
    x = _local_start(cluster, start)
    d = cluster.d
    key = walk_keys(seed, [replicate])[0]
    dirs = rng.integers(key, np.arange(n_steps, dtype=np.uint64), 2 * d)
    table = cluster.neighbor_lists
    local = np.empty(n_steps + 1, dtype=np.int64)
    local[0] = x
    moved = np.zeros(n_steps + 1, dtype=bool)
    for k, di in enumerate(dirs.tolist(), start=1):
        y = table[x][di]
        if y >= 0:
            x = y
            moved[k] = True
        local[k] = x
    steps = unit_directions(d)[dirs] * moved[1:, None]
    return _assemble(cluster, local, steps, moved, LAZY)


def run_agile(cluster: ClusterGraph, start, n_steps: int, seed: int, replicate: int = 0) -> WalkPath:
    """Myopic-ant walk: jump to a uniformly chosen open neighbour every step."""
    x = _local_start(cluster, start)
    if cluster.local_degrees[x] == 0:
        raise IsolatedStart("start site has no open bond")
    d = cluster.d
    key = walk_keys(seed, [replicate])[0]
    u = rng.uniforms(key, np.arange(n_steps, dtype=np.uint64)).tolist()
    order, deg = _agile_tables(cluster)
    order = order.tolist()
    deg = deg.tolist()
    table = cluster.neighbor_lists
    local = np.empty(n_steps + 1, dtype=np.int64)
    local[0] = x
    dirs = np.empty(n_steps, dtype=np.int64)
    for k, uk in enumerate(u):
        j = min(int(uk * deg[x]), deg[x] - 1)
        di = order[x][j]
        dirs[k] = di
        x = table[x][di]
        local[k + 1] = x
    steps = unit_directions(d)[dirs]
    moved = np.ones(n_steps + 1, dtype=bool)
    moved[0] = False
    return _assemble(cluster, local, steps, moved, AGILE)


def run_ctrw(cluster: ClusterGraph, start, t_max: float, seed: int, replicate: int = 0) -> WalkPath:
    """Rate-one clock; at every ring one of 2d directions is tried as in the lazy walk.

    ``sites[i]`` is the position after the i-th ring and ``clock[i]`` its time
    (``clock[0] = 0``). Jump i uses counters ``2i`` (holding time) and ``2i+1``.
    """
    x = _local_start(cluster, start)
    d = cluster.d
    key = walk_keys(seed, [replicate])[0]
    table = cluster.neighbor_lists
    local, clock, moved, dirs = [x], [0.0], [False], []
    t = 0.0
    i = 0
    batch = max(16, int(t_max * 1.2) + 16)
    while True:
        ctr = np.arange(i, i + batch, dtype=np.uint64)
        hold = rng.exponentials(key, 2 * ctr).tolist()
        dd = rng.integers(key, 2 * ctr + 1, 2 * d).tolist()
        for h, di in zip(hold, dd):
            t += h
            if t > t_max:
                break
            y = table[x][di]
            if y >= 0:
                x = y
            local.append(x)
            clock.append(t)
            moved.append(y >= 0)
            dirs.append(di)
        else:
            i += batch
            continue
        break
    local = np.asarray(local, dtype=np.int64)
    moved = np.asarray(moved, dtype=bool)
    steps = unit_directions(d)[np.asarray(dirs, dtype=np.int64)].reshape(-1, d) * moved[1:, None]
    path = _assemble(cluster, local, steps, moved, CTRW)
    path.clock = np.asarray(clock)
    return path


def _assemble(cluster, local, steps, moved, kind) -> WalkPath:
    start = cluster.coords[local[0]]
    pos = np.vstack([start[None, :], start + np.cumsum(steps, axis=0)]) if len(steps) else start[None, :]
    mt = np.concatenate([[0], np.flatnonzero(moved)])
    return WalkPath(cluster.sites[local], pos.astype(np.int64), mt.astype(np.int64), kind)


def subsample_at_moves(path: WalkPath) -> WalkPath:
    """The agile walk X'_n = X_{T_n} read off a lazy path."""
    mt = path.move_times
    n = len(mt)
    moved = np.ones(n, dtype=bool)
    moved[0] = False
    return WalkPath(path.sites[mt], path.positions[mt], np.arange(n), AGILE)


def build_transition_matrix(cluster: ClusterGraph, kind: str = LAZY, dense: bool = False,
                            dense_cap: int = DENSE_CAP, sparse_cap: int = SPARSE_CAP) -> TransitionMatrix:
    """Exact one-step kernel of the lazy or agile walk on the giant cluster."""
    n = cluster.size
    if n > sparse_cap or (dense and n > dense_cap):
        raise TooLarge(f"giant cluster has {n} sites (cap {dense_cap if dense else sparse_cap})")
    d = cluster.d
    ln = cluster.local_neighbors
    deg = cluster.local_degrees
    rows, ks = np.nonzero(ln >= 0)
    cols = ln[rows, ks]
    if kind == LAZY:
        vals = np.full(len(rows), 1.0 / (2 * d))
        diag = (2 * d - deg) / (2 * d)
    elif kind == AGILE:
        vals = 1.0 / deg[rows]
        diag = np.where(deg == 0, 1.0, 0.0)
    else:
        raise ValueError(f"unknown walk kind {kind!r}")
    disp = unit_directions(d)[ks].astype(float)
    drift = np.zeros((n, d))
    np.add.at(drift, rows, vals[:, None] * disp)
    m = sp.csr_matrix((np.concatenate([vals, diag]),
                       (np.concatenate([rows, np.arange(n)]), np.concatenate([cols, np.arange(n)]))),
                      shape=(n, n))
    m.sum_duplicates()
    m.eliminate_zeros()
    return TransitionMatrix(cluster.sites.copy(), m.toarray() if dense else m, kind, drift)


def theta(cluster: ClusterGraph) -> float:
    """Inverse of the mean normalized degree over the giant cluster."""
    if cluster.size == 0:
        raise ValueError("empty cluster")
    return 1.0 / float(np.mean(cluster.local_degrees / (2 * cluster.d)))


def rescale_path(path: WalkPath, n: int, t_grid) -> np.ndarray:
    """Piecewise-linear interpolation of the path at times ``t*n``, divided by sqrt(n)."""
    t = np.asarray(t_grid, dtype=float)
    need = math.ceil(t.max() * n) + 1 if t.size else 1
    if len(path.positions) < need:
        raise PathTooShort(f"need {need} positions, have {len(path.positions)}")
    x = path.positions.astype(float)
    tn = t * n
    k = np.floor(tn).astype(np.int64)
    frac = tn - k
    nxt = np.minimum(k + 1, len(x) - 1)
    return (x[k] + frac[:, None] * (x[nxt] - x[k])) / math.sqrt(n)


# vectorized ensembles ----------------------------------------------------

@dataclass
class Ensemble:
    """End state of many independent replicates, in replicate order."""

    final: np.ndarray
    displacement: np.ndarray
    moves: np.ndarray
    times: np.ndarray | None = None
    accumulated: np.ndarray | None = None
    absorbed: np.ndarray | None = None


def _split(replicates: int, threads: int):
    threads = max(1, int(threads))
    size = max(1, math.ceil(replicates / threads))
    return [(lo, min(lo + size, replicates)) for lo in range(0, replicates, size)]


def _run_chunks(fn, replicates, threads) -> Ensemble:
    chunks = _split(replicates, threads)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda c: fn(*c), chunks))
    else:
        parts = [fn(*c) for c in chunks]

    def cat(name):
        vals = [getattr(p, name) for p in parts]
        return None if vals[0] is None else np.concatenate(vals)

    return Ensemble(*(cat(f) for f in ("final", "displacement", "moves", "times", "accumulated", "absorbed")))


def simulate_lazy(cluster: ClusterGraph, start, n_steps: int, replicates: int, seed: int,
                  accumulate=None, threads: int = 1) -> Ensemble:
    """Run ``replicates`` lazy walks for ``n_steps`` steps.

    ``accumulate`` (array over giant-local sites, optionally with trailing
    dims) is summed along each path over times 0..n_steps-1.
    """
    x0 = _local_start(cluster, start)
    d = cluster.d
    table = _lazy_table(cluster)
    ln = cluster.local_neighbors
    units = unit_directions(d)
    acc_f = None if accumulate is None else np.asarray(accumulate, dtype=float)

    def work(lo, hi):
        keys = walk_keys(seed, np.arange(lo, hi))
        cur = np.full(hi - lo, x0, dtype=np.int64)
        disp = np.zeros((hi - lo, d), dtype=np.int64)
        moves = np.zeros(hi - lo, dtype=np.int64)
        acc = None if acc_f is None else np.zeros((hi - lo,) + acc_f.shape[1:])
        for k in range(n_steps):
            if acc is not None:
                acc += acc_f[cur]
            di = rng.integers(keys, k, 2 * d)
            moved = ln[cur, di] >= 0
            cur = table[cur, di]
            disp += units[di] * moved[:, None]
            moves += moved
        return Ensemble(cur, disp, moves, None, acc)

    return _run_chunks(work, replicates, threads)


def simulate_lazy_until_moves(cluster: ClusterGraph, start, n_moves: int, replicates: int, seed: int,
                              threads: int = 1, accumulate=None) -> Ensemble:
    """Lazy walks stopped at their ``n_moves``-th move; ``times`` holds T_n.

    The displacement and final site are those of the agile walk after
    ``n_moves`` steps. ``accumulate`` is summed over the lazy steps before T_n.
    """
    x0 = _local_start(cluster, start)
    if cluster.local_degrees[x0] == 0 and n_moves > 0:
        raise IsolatedStart("start site has no open bond")
    d = cluster.d
    table = _lazy_table(cluster)
    ln = cluster.local_neighbors
    units = unit_directions(d)
    acc_f = None if accumulate is None else np.asarray(accumulate, dtype=float)

    def work(lo, hi):
        m = hi - lo
        keys = walk_keys(seed, np.arange(lo, hi))
        cur = np.full(m, x0, dtype=np.int64)
        disp = np.zeros((m, d), dtype=np.int64)
        moves = np.zeros(m, dtype=np.int64)
        times = np.zeros(m, dtype=np.int64)
        acc = None if acc_f is None else np.zeros((m,) + acc_f.shape[1:])
        active = np.flatnonzero(moves < n_moves)
        k = 0
        while active.size:
            c = cur[active]
            if acc is not None:
                acc[active] += acc_f[c]
            di = rng.integers(keys[active], k, 2 * d)
            moved = ln[c, di] >= 0
            cur[active] = table[c, di]
            disp[active] += units[di] * moved[:, None]
            moves[active] += moved
            k += 1
            done = moves[active] >= n_moves
            if done.any():
                times[active[done]] = k
                active = active[~done]
        return Ensemble(cur, disp, moves, times, acc)

    return _run_chunks(work, replicates, threads)


def simulate_lazy_until_absorbed(cluster: ClusterGraph, start, absorbing, replicates: int, seed: int,
                                 max_steps: int, threads: int = 1) -> Ensemble:
    """Lazy walks killed on entering a site where ``absorbing`` (giant-local mask) is True."""
    x0 = _local_start(cluster, start)
    d = cluster.d
    table = _lazy_table(cluster)
    ln = cluster.local_neighbors
    units = unit_directions(d)
    absorbing = np.asarray(absorbing, dtype=bool)

    def work(lo, hi):
        m = hi - lo
        keys = walk_keys(seed, np.arange(lo, hi))
        cur = np.full(m, x0, dtype=np.int64)
        disp = np.zeros((m, d), dtype=np.int64)
        moves = np.zeros(m, dtype=np.int64)
        times = np.zeros(m, dtype=np.int64)
        absorbed = np.full(m, absorbing[x0])
        active = np.flatnonzero(~absorbed)
        k = 0
        while active.size and k < max_steps:
            c = cur[active]
            di = rng.integers(keys[active], k, 2 * d)
            moved = ln[c, di] >= 0
            cur[active] = table[c, di]
            disp[active] += units[di] * moved[:, None]
            moves[active] += moved
            k += 1
            hit = absorbing[cur[active]]
            if hit.any():
                absorbed[active[hit]] = True
                times[active[hit]] = k
                active = active[~hit]
        times[active] = k
        return Ensemble(cur, disp, moves, times, None, absorbed)

    return _run_chunks(work, replicates, threads)


def simulate_agile(cluster: ClusterGraph, start, n_steps: int, replicates: int, seed: int,
                   threads: int = 1) -> Ensemble:
    """Run ``replicates`` agile walks for ``n_steps`` steps."""
    x0 = _local_start(cluster, start)
    if cluster.local_degrees[x0] == 0:
        raise IsolatedStart("start site has no open bond")
    d = cluster.d
    ln = cluster.local_neighbors
    order, deg = _agile_tables(cluster)
    units = unit_directions(d)

    def work(lo, hi):
        keys = walk_keys(seed, np.arange(lo, hi))
        cur = np.full(hi - lo, x0, dtype=np.int64)
        disp = np.zeros((hi - lo, d), dtype=np.int64)
        for k in range(n_steps):
            j = rng.integers(keys, k, deg[cur])
            di = order[cur, j]
            cur = ln[cur, di]
            disp += units[di]
        return Ensemble(cur, disp, np.full(hi - lo, n_steps))

    return _run_chunks(work, replicates, threads)


def heat_kernel_vectors(tm: TransitionMatrix, start_local: int, n_list) -> dict:
    """Exact distributions P_0(X_n = .) for every n in ``n_list`` via repeated products."""
    targets = sorted(set(int(n) for n in n_list))
    m = tm.matrix
    mt = m.T.tocsr() if sp.issparse(m) else np.asarray(m).T
    v = np.zeros(m.shape[0])
    v[start_local] = 1.0
    out = {}
    k = 0
    for n in targets:
        while k < n:
            v = mt @ v
            k += 1
        out[n] = v.copy()
    return out
