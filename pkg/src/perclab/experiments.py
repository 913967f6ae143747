"""Statistical studies on fixed environments and environment ensembles.

Every study returns an :class:`ExperimentReport`. Rows labelled ``quenched``
carry Monte Carlo error over walks in one environment; rows labelled
``averaged`` carry error over environments (or over sites, as a proxy for the
environment average).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .cluster import ClusterGraph, bfs_distances, label_clusters
from .corrector import (CorrectorField, drift_field, harmonicity_residual, mean_increments,
                        good_sites, solve_dirichlet, solve_resolvent, solve_slab, sublinearity_profile)
from .errors import DataError, NoSpanningCluster, StartOffCluster
from .lattice import BoxGeometry, direction_index, sample_config, unit_directions
from .walks import (build_transition_matrix, heat_kernel_vectors, simulate_lazy,
                    simulate_lazy_until_absorbed, simulate_lazy_until_moves, theta)

FORMAT_VERSION = 1
ENV_STREAM = 2
SITE_STREAM = 3


@dataclass
class Statistic:
    label: str
    estimate: float
    std_error: float
    n_samples: int


@dataclass
class Verdict:
    criterion: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""


@dataclass
class ExperimentReport:
    name: str
    params: dict = field(default_factory=dict)
    stats: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    run_spec: dict | None = None

    def add(self, label, estimate, std_error=0.0, n_samples=1):
        self.stats.append(Statistic(label, float(estimate), float(std_error), int(n_samples)))

    def check(self, criterion, passed, measured, tolerance, detail=""):
        self.verdicts.append(Verdict(criterion, bool(passed), float(measured), float(tolerance), detail))

    def stat(self, label) -> Statistic:
        for s in self.stats:
            if s.label == label:
                return s
        raise KeyError(label)

    def verdict(self, criterion) -> Verdict:
        for v in self.verdicts:
            if v.criterion == criterion:
                return v
        raise KeyError(criterion)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "name": self.name,
            "params": self.params,
            "stats": [asdict(s) for s in self.stats],
            "verdicts": [asdict(v) for v in self.verdicts],
            "series": self.series,
            "run_spec": self.run_spec,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentReport":
        return cls(data["name"], data.get("params", {}),
                   [Statistic(**s) for s in data.get("stats", [])],
                   [Verdict(**v) for v in data.get("verdicts", [])],
                   data.get("series", {}), data.get("run_spec"))

    def to_text(self) -> str:
        lines = [f"== {self.name} =="]
        for k, v in self.params.items():
            lines.append(f"  {k} = {v}")
        if self.stats:
            w = max(len(s.label) for s in self.stats)
            lines.append(f"  {'statistic':<{w}}  {'estimate':>14}  {'std_error':>11}  {'n':>9}")
            for s in self.stats:
                lines.append(f"  {s.label:<{w}}  {s.estimate:>14.6g}  {s.std_error:>11.3g}  {s.n_samples:>9d}")
        for v in self.verdicts:
            mark = "PASS" if v.passed else "FAIL"
            lines.append(f"  [{mark}] {v.criterion}: measured {v.measured:.6g} vs tolerance {v.tolerance:.6g}"
                         + (f" ({v.detail})" if v.detail else ""))
        return "\n".join(lines)


# helpers -------------------------------------------------------------------

def mean_se(x) -> tuple:
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2:
        return float(x.mean()) if n else float("nan"), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n))


def linear_fit(x, y) -> dict:
    """Least-squares line with slope standard error, t statistic and r^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    sst = float(np.sum((y - ym) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / sst if sst > 0 else 1.0
    se = math.sqrt(float(np.sum(resid ** 2)) / (n - 2) / sxx) if n > 2 else float("nan")
    t = slope / se if se and se > 0 else (math.copysign(float("inf"), slope) if slope else 0.0)
    return {"slope": slope, "intercept": intercept, "slope_se": se, "t": t, "r2": r2, "n": n}


def survival_curve(values, min_count: int = 10) -> tuple:
    """``(n, P(value > n))`` for n = 1, 2, ... while at least ``min_count`` samples exceed n."""
    v = np.asarray(values)
    ns, ps = [], []
    n = 1
    while True:
        c = int((v > n).sum())
        if c < min_count:
            break
        ns.append(n)
        ps.append(c / len(v))
        n += 1
    return np.array(ns), np.array(ps)


def sample_environment(geometry: BoxGeometry, p: float, seed: int, index: int = 0,
                       max_tries: int = 10_000, accept=None) -> tuple:
    """Resample until the origin is in the giant cluster (and ``accept(cluster)`` holds).

    Attempt ``a`` of environment ``index`` uses seed ``derive_key(seed, ENV_STREAM, index, a)``.
    Returns ``(config, cluster, attempts)``.
    """
    for a in range(max_tries):
        s = rng.derive_key(seed, ENV_STREAM, index, a)
        cfg = sample_config(geometry, p, s)
        cl = label_clusters(cfg)
        if cl.origin_in_giant and (accept is None or accept(cl)):
            return cfg, cl, a + 1
    raise DataError(f"no acceptable environment in {max_tries} tries")


def _origin_local(cluster: ClusterGraph) -> int:
    o = cluster.geometry.origin
    if not cluster.in_giant(o):
        raise StartOffCluster("origin is not in the giant cluster")
    return int(cluster.index_of[o])


def edge_increments(field: CorrectorField) -> tuple:
    """Increments e + chi(x+e) - chi(x) over every open edge (once), with endpoints."""
    cl = field.cluster
    u, v, k = cl.edges
    return u, v, unit_directions(cl.d)[k] + field.chi[v] - field.chi[u]


def one_step_variance(field: CorrectorField) -> np.ndarray:
    """Per site q(x) = sum_y P_lazy[x,y] |phi(y) - phi(x)|^2."""
    cl = field.cluster
    u, v, inc = edge_increments(field)
    sq = np.sum(inc ** 2, axis=1)
    q = np.zeros(cl.size)
    np.add.at(q, u, sq)
    np.add.at(q, v, sq)
    return q / (2 * cl.d)


# martingale ---------------------------------------------------------------

def martingale_defects(field: CorrectorField, tm=None) -> np.ndarray:
    """Per-site max component of E[phi(X_1) | X_0 = x] - phi(x), computed with the transition matrix."""
    tm = tm if tm is not None else build_transition_matrix(field.cluster)
    P = tm.matrix
    chi = field.chi
    return np.abs(P @ chi - chi + tm.drift).max(axis=1)


def martingale_check(cluster: ClusterGraph, field: CorrectorField, tol: float = 1e-8) -> ExperimentReport:
    rep = ExperimentReport("martingale", {"sites": int(cluster.size), "method": field.method, "tol": tol})
    defects = martingale_defects(field)[field.interior]
    worst = float(defects.max()) if defects.size else 0.0
    resid = harmonicity_residual(field)
    rep.add("max_martingale_defect", worst)
    rep.add("harmonicity_residual", resid)
    rep.add("interior_sites", int(field.interior.sum()))
    rep.check("martingale defect <= tol", worst <= tol, worst, tol)
    rep.check("defect equals harmonicity residual", abs(worst - resid) <= 1e-12 + 1e-9 * resid,
              abs(worst - resid), 1e-12 + 1e-9 * resid)
    return rep


# diffusion ----------------------------------------------------------------

def lindeberg_site_function(field: CorrectorField, K: float, a=None) -> np.ndarray:
    """f_K(x) = E_x[(a . dM)^2 ; |a . dM| >= K] for one lazy step from x."""
    cl = field.cluster
    a = np.eye(cl.d)[0] if a is None else np.asarray(a, dtype=float)
    u, v, inc = edge_increments(field)
    proj = inc @ a
    w = np.where(np.abs(proj) >= K, proj ** 2, 0.0)
    f = np.zeros(cl.size)
    np.add.at(f, u, w)
    np.add.at(f, v, w)
    return f / (2 * cl.d)


def estimate_diffusion(cluster: ClusterGraph, field: CorrectorField, n_steps: int, replicates: int,
                       seed: int, threads: int = 1, lindeberg_eps=(0.1, 0.5), sigmas: float = 3.0) -> ExperimentReport:
    d = cluster.d
    o = _origin_local(cluster)
    rep = ExperimentReport("diffusion", {"sites": int(cluster.size), "n_steps": n_steps,
                                         "replicates": replicates, "seed": seed, "method": field.method})
    q = one_step_variance(field)
    D1 = float(q.mean())
    q_mean, q_se = mean_se(q)
    rep.add("D_one_step", D1)
    rep.add("D_one_step_averaged", q_mean, q_se, len(q))

    n = n_steps
    a = np.eye(d)[0]
    max_inc = float(np.abs(edge_increments(field)[2] @ a).max()) if cluster.edges[0].size else 0.0
    fks = np.stack([lindeberg_site_function(field, e * math.sqrt(n), a) for e in lindeberg_eps], axis=1)
    ens = simulate_lazy(cluster, None, n, replicates, seed, accumulate=fks, threads=threads)
    M = ens.displacement + field.chi[ens.final] - field.chi[o]
    sq = np.sum(M ** 2, axis=1) / n
    Dmc, Dse = mean_se(sq)
    rep.add("D_monte_carlo", Dmc, Dse, replicates)
    Z = M / math.sqrt(n)
    for i in range(d):
        for j in range(i, d):
            prod = Z[:, i] * Z[:, j]
            m, s = mean_se(prod)
            rep.add(f"cov_{i}{j}", m, s, replicates)
    lind = (ens.accumulated + fks[ens.final]) / n
    for c, e in enumerate(lindeberg_eps):
        m, s = mean_se(lind[:, c])
        rep.add(f"lindeberg_V_nn(eps={e})", m, s, replicates)
        cutoff = (2 * max_inc / e) ** 2
        if n > cutoff:
            rep.check(f"lindeberg sum vanishes (eps={e})", m == 0.0, m, 0.0, f"n > {cutoff:.3g}")
    comb = math.hypot(Dse, q_se)
    rep.check("one-step D agrees with Monte Carlo", abs(D1 - Dmc) <= sigmas * comb,
              abs(D1 - Dmc), sigmas * comb, f"{sigmas} combined sigma")
    return rep


# time change --------------------------------------------------------------

def time_change_check(cluster: ClusterGraph, field: CorrectorField, n: int, replicates: int, seed: int,
                      threads: int = 1, sigmas: float = 3.0) -> ExperimentReport:
    """T_n/n against theta, and the agile diffusion constant against D theta^2 and D theta."""
    o = _origin_local(cluster)
    rep = ExperimentReport("time-change", {"sites": int(cluster.size), "n": n,
                                           "replicates": replicates, "seed": seed})
    th = theta(cluster)
    var = one_step_variance(field)
    D, Dse = mean_se(var)
    rep.add("theta", th)
    rep.add("D_one_step", D, Dse, int(cluster.size))
    ens = simulate_lazy_until_moves(cluster, None, n, replicates, seed, threads=threads)
    ratio = ens.times / n
    tm, tse = mean_se(ratio)
    rep.add("T_n_over_n", tm, tse, replicates)
    M = ens.displacement + field.chi[ens.final] - field.chi[o]
    Dp, Dpse = mean_se(np.sum(M ** 2, axis=1) / n)
    rep.add("D_agile_monte_carlo", Dp, Dpse, replicates)
    rep.add("D_theta_squared", D * th * th)
    rep.add("D_theta", D * th)
    rep.check("T_n/n within 3 sigma of theta", abs(tm - th) <= sigmas * tse, abs(tm - th), sigmas * tse)
    # combined error: walk noise plus the site-sampling error of D, propagated
    s2 = math.hypot(Dpse, th * th * Dse)
    s1 = math.hypot(Dpse, th * Dse)
    rep.check("agile D equals D*theta^2", abs(Dp - D * th * th) <= sigmas * s2,
              abs(Dp - D * th * th), sigmas * s2, "relation as stated for the two ants")
    rep.check("agile D equals D*theta", abs(Dp - D * th) <= sigmas * s1, abs(Dp - D * th), sigmas * s1,
              "time-change prediction B'(t) = B(theta t)")
    return rep


# sublinearity -----------------------------------------------------------------

def sublinearity_trend(geometry: BoxGeometry, p: float, n_env: int, seed: int, radii=(16, 64),
                       K: float = 8.0, eps: float = 0.1, tol: float = 1e-8, min_count: int | None = None,
                       progress=None) -> ExperimentReport:
    """Per environment: max |chi|/n and Delta_n/n (good-site gap on the first axis)
    at each radius, and how many environments see both drop from the first
    radius to the last."""
    radii = list(radii)
    min_count = math.ceil(0.9 * n_env) if min_count is None else min_count
    rep = ExperimentReport("sublinearity", {"d": geometry.d, "side": geometry.side, "p": p,
                                            "environments": n_env, "seed": seed, "radii": radii,
                                            "K": K, "eps": eps})
    prof, gaps = [], []
    for i in range(n_env):
        _, cl, _ = sample_environment(geometry, p, seed, i)
        f = solve_dirichlet(cl, tol=tol)
        prof.append([v for _, v in sublinearity_profile(f, radii)])
        gaps.append([good_sites(f, K, eps, n).delta / n for n in radii])
        if progress is not None:
            progress(i, prof[-1], gaps[-1])
    prof, gaps = np.array(prof), np.array(gaps)
    rep.series["max_chi_over_n"] = prof.tolist()
    rep.series["gap_over_n"] = gaps.tolist()
    for name, arr in (("max_chi_over_n", prof), ("gap_over_n", gaps)):
        for j, n in enumerate(radii):
            m, se = mean_se(arr[:, j])
            rep.add(f"{name}(n={n})", m, se, n_env)
        drops = int(np.sum(arr[:, -1] < arr[:, 0]))
        rep.add(f"{name}_drops", drops, 0.0, n_env)
        rep.check(f"{name} decreases on >= {min_count} environments", drops >= min_count, drops, min_count)
    return rep


# resolvent limit ------------------------------------------------------------

def resolvent_limit(config, ks=range(2, 11), tol: float = 1e-12, bulk: float = 0.25,
                    factor: float = 10.0) -> ExperimentReport:
    """Regularised correctors at eps = 2^-k: energy decay and Cauchy behaviour of the gradients.

    The discrepancy between consecutive eps is the RMS difference of the edge
    increments over edges with both ends in the central box of half-width
    ``bulk * side``. Increments are anchor free, so no normalisation enters.
    """
    ks = list(ks)
    cl = label_clusters(config)
    g = config.geometry
    u, v, _ = cl.edges
    r = bulk * g.side
    inner = (np.abs(cl.coords[u]).max(axis=1) <= r) & (np.abs(cl.coords[v]).max(axis=1) <= r)
    rep = ExperimentReport("resolvent-limit", {"d": g.d, "side": g.side, "ks": ks, "sites": int(cl.size)})
    energy, gap, prev = [], [], None
    for k in ks + [ks[-1] + 1]:
        eps = 2.0 ** -k
        f = solve_resolvent(config, eps, tol=tol, cluster=cl)
        inc = edge_increments(f)[2][inner]
        if k in ks:
            energy.append(eps * float(np.mean(np.sum(f.psi ** 2, axis=1))))
            rep.add(f"eps_psi_sq(k={k})", energy[-1])
        if prev is not None:
            gap.append(float(np.sqrt(np.mean((inc - prev) ** 2))))
            rep.add(f"gradient_gap(k={k - 1})", gap[-1])
        prev = inc
    rep.series["energy"] = energy
    rep.series["gradient_gap"] = gap
    drop = energy[0] / energy[-1]
    rep.check(f"energy drops by {factor:g}x", drop >= factor, drop, factor)
    rep.check("gradient gap decreasing in eps", all(b < a for a, b in zip(gap, gap[1:])),
              max(b - a for a, b in zip(gap, gap[1:])), 0.0)
    return rep


# slab exit ----------------------------------------------------------------

def slab_exit(config, replicates: int, seed: int, threads: int = 1, max_steps: int = 10_000_000,
              sigmas: float = 3.0, cluster=None) -> ExperimentReport:
    """Probability that the lazy walk from the origin reaches x_d = +N before x_d = -N."""
    g = config.geometry
    cl = cluster if cluster is not None else label_clusters(config)
    pot = solve_slab(config, cluster=cl)
    _origin_local(cl)
    N = g.side // 2
    rep = ExperimentReport("slab-exit", {"d": g.d, "N": N, "replicates": replicates, "seed": seed})
    exact = pot.top_probability
    rep.add("P_top_exact", exact)
    absorbing = pot.top | pot.bottom
    ens = simulate_lazy_until_absorbed(cl, None, absorbing, replicates, seed, max_steps, threads=threads)
    if not ens.absorbed.all():
        raise DataError(f"{int((~ens.absorbed).sum())} walks not absorbed within {max_steps} steps")
    hit_top = pot.top[ens.final].astype(float)
    m, se = mean_se(hit_top)
    rep.add("P_top_monte_carlo", m, se, replicates)
    tm, tse = mean_se(ens.times)
    rep.add("exit_time", tm, tse, replicates)
    rep.check("Monte Carlo agrees with potential", abs(m - exact) <= sigmas * se, abs(m - exact), sigmas * se)
    return rep


def sample_slab_environment(d: int, N: int, p: float, seed: int, index: int, max_tries: int = 10_000):
    g = BoxGeometry.slab(d, N)

    def spans(cl):
        xd = cl.coords[:, -1]
        return bool((xd == N).any() and (xd == -N).any())

    return sample_environment(g, p, seed, index, max_tries, accept=spans)


def slab_exit_trend(d: int, p: float, N_list, n_env: int, seed: int) -> ExperimentReport:
    """Environment average of |P(top first) - 1/2| (exact potential) for each N."""
    rep = ExperimentReport("slab-exit-trend", {"d": d, "p": p, "N": list(N_list), "environments": n_env,
                                               "seed": seed})
    means = []
    for N in N_list:
        dev = []
        for i in range(n_env):
            cfg, cl, _ = sample_slab_environment(d, N, p, seed, i)
            dev.append(abs(solve_slab(cfg, cluster=cl).top_probability - 0.5))
        m, se = mean_se(dev)
        means.append(m)
        rep.add(f"mean_abs_deviation(N={N})", m, se, n_env)
    rep.series["mean_abs_deviation"] = means
    rep.check("deviation decreases from first to last N", means[-1] < means[0], means[-1], means[0])
    return rep


# heat kernel --------------------------------------------------------------

def heat_kernel(cluster: ClusterGraph, n_list, slope_tol: float = 0.15) -> ExperimentReport:
    """Exact return-type decay: sup_x P_0(X_n = x) from powers of the lazy kernel."""
    d = cluster.d
    o = _origin_local(cluster)
    tm = build_transition_matrix(cluster)
    vecs = heat_kernel_vectors(tm, o, n_list)
    ns = sorted(vecs)
    sups = np.array([vecs[n].max() for n in ns])
    sums = np.array([vecs[n].sum() for n in ns])
    rep = ExperimentReport("heat-kernel", {"sites": int(cluster.size), "n_list": ns, "mode": "exact"})
    for n, s in zip(ns, sups):
        rep.add(f"sup_P(n={n})*n^(d/2)", s * n ** (d / 2))
    fit = linear_fit(np.log(ns), np.log(sups))
    rep.add("log_log_slope", fit["slope"], fit["slope_se"], len(ns))
    rep.series["sup_probability"] = sups.tolist()
    rep.series["mass"] = sums.tolist()
    target = -d / 2
    rep.check("slope near -d/2", abs(fit["slope"] - target) <= slope_tol, fit["slope"] - target, slope_tol)
    err = float(np.abs(sums - 1).max())
    rep.check("probability conserved", err <= 1e-10, err, 1e-10)
    return rep


def heat_kernel_tail(cluster: ClusterGraph, n: int, replicates: int, seed: int, ratios=None,
                     threads: int = 1, r2_min: float = 0.98) -> ExperimentReport:
    """Empirical P(|X_n| > R) against R^2/n over R/sqrt(n) in ``ratios``."""
    _origin_local(cluster)
    ratios = np.linspace(1.0, 2.5, 16) if ratios is None else np.asarray(ratios, dtype=float)
    ens = simulate_lazy(cluster, None, n, replicates, seed, threads=threads)
    r = np.linalg.norm(ens.displacement, axis=1)
    R = ratios * math.sqrt(n)
    tail = np.array([(r > Ri).mean() for Ri in R])
    rep = ExperimentReport("heat-kernel-tail", {"sites": int(cluster.size), "n": n, "replicates": replicates,
                                                "seed": seed, "ratios": ratios.tolist()})
    rep.series["tail"] = tail.tolist()
    ok = tail > 0
    fit = linear_fit((R[ok] ** 2) / n, np.log(tail[ok]))
    rep.add("tail_slope", fit["slope"], fit["slope_se"], int(ok.sum()))
    rep.add("tail_r2", fit["r2"])
    rep.add("empty_bins", int((~ok).sum()))
    rep.check("log tail linear in R^2/n", fit["r2"] >= r2_min and ok.all(), fit["r2"], r2_min)
    rep.check("tail slope negative", fit["slope"] < 0, fit["slope"], 0.0)
    return rep


# axis statistics ----------------------------------------------------------

def arrival_distances(cluster: ClusterGraph, locals_, e) -> np.ndarray:
    """|v_e| from each giant-local site (0 where no arrival before the box edge)."""
    g = cluster.geometry
    step = unit_directions(g.d)[direction_index(e)]
    c = cluster.coords[locals_]
    out = np.zeros(len(locals_), dtype=np.int64)
    todo = np.arange(len(locals_))
    k = 1
    while todo.size and k < max(g.shape):
        s = g.index(c[todo] + k * step)
        hit = (s >= 0) & (cluster.index_of[np.maximum(s, 0)] >= 0)
        out[todo[hit]] = k
        todo = todo[~hit & (s >= 0)]
        k += 1
    return out


def axis_statistics(geometry: BoxGeometry, p: float, n_env: int, seed: int, e=1, sample_size: int = 16,
                    window: int | None = None, tol: float = 1e-10, min_count: int = 10,
                    t_min: float = 5.0, sigmas: float = 3.0) -> ExperimentReport:
    """Tails of |v_e| and L = d(0, v_e), and the mean of chi(v_e) under P_0.

    The mean of chi(v_e) uses the origin of each environment (one sample per
    environment). Tail samples use every giant site in the window
    ``|x|_inf <= window`` for |v_e| and ``sample_size`` sites (origin first)
    for L, by stationarity of the environment.
    """
    d = geometry.d
    window = geometry.side // 4 if window is None else window
    step = unit_directions(d)[direction_index(e)]
    chis, ve_all, L_all = [], [], []
    attempts = 0
    for i in range(n_env):
        cfg, cl, a = sample_environment(geometry, p, seed, i)
        attempts += a
        field = solve_dirichlet(cl, tol=tol)
        o = int(cl.index_of[geometry.origin])
        win = np.flatnonzero(np.abs(cl.coords).max(axis=1) <= window)
        ve = arrival_distances(cl, win, e)
        ve_all.append(ve[ve > 0])
        n0 = int(arrival_distances(cl, np.array([o]), e)[0])
        tgt = int(cl.index_of[geometry.index(n0 * step)])
        chis.append(field.chi[tgt] - field.chi[o])
        key = rng.derive_key(seed, SITE_STREAM, i)
        others = win[rng.integers(key, np.arange(max(sample_size - 1, 0), dtype=np.uint64), len(win))]
        pos = np.searchsorted(win, o)
        o_slot = pos if pos < len(win) and win[pos] == o else -1
        slots = np.searchsorted(win, others)
        for x, slot in zip([o, *others.tolist()], [o_slot, *slots.tolist()]):
            n_x = int(ve[slot]) if slot >= 0 else n0
            if n_x == 0:
                continue
            src = int(cl.sites[x])
            dst = geometry.index(cl.coords[x] + n_x * step)
            L_all.append(int(bfs_distances(cl, src, target=dst)[dst]))
    chis = np.array(chis)
    ve_all = np.concatenate(ve_all)
    L_all = np.array(L_all)
    rep = ExperimentReport("axis", {"d": d, "side": geometry.side, "p": p, "environments": n_env,
                                    "seed": seed, "e": direction_index(e), "window": window,
                                    "sample_size": sample_size, "attempts": attempts})
    for j in range(d):
        m, se = mean_se(chis[:, j])
        rep.add(f"mean_chi_v_e[{j}]", m, se, n_env)
        rep.check(f"mean chi(v_e)[{j}] within {sigmas} SE of 0", abs(m) <= sigmas * se, abs(m), sigmas * se)
    for name, vals in (("v_e", ve_all), ("L", L_all)):
        m, se = mean_se(vals)
        rep.add(f"mean_{name}", m, se, len(vals))
        ns, ps = survival_curve(vals, min_count)
        rep.series[f"survival_{name}"] = [ns.tolist(), ps.tolist()]
        if len(ns) >= 3:
            fit = linear_fit(ns, np.log(ps))
            rep.add(f"survival_slope_{name}", fit["slope"], fit["slope_se"], len(ns))
            rep.check(f"{name} survival decays exponentially", fit["slope"] < 0 and abs(fit["t"]) > t_min,
                      fit["t"], t_min, f"slope {fit['slope']:.4g}")
        else:
            rep.check(f"{name} survival decays exponentially", False, float(len(ns)), 3,
                      "fewer than 3 survival points")
    return rep
