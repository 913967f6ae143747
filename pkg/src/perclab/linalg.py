"""Graph Laplacians and a Jacobi-preconditioned conjugate gradient for several right-hand sides."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import NoConvergence

_REPLACE_EVERY = 50


def laplacian(cluster) -> sp.csr_matrix:
    """``L = deg - A`` over the giant cluster in local indices; ``(L f)(x) = sum_{y~x} f(x) - f(y)``."""
    u, v, _ = cluster.edges
    n = cluster.size
    a = sp.coo_matrix((np.ones(2 * len(u)), (np.concatenate([u, v]), np.concatenate([v, u]))), shape=(n, n))
    a = a.tocsr()
    a.sum_duplicates()
    deg = np.asarray(a.sum(axis=1)).ravel()
    return (sp.diags(deg) - a).tocsr()


def pcg(A, b, tol, max_iter=None, scale=1.0, x0=None, diag=None):
    """Solve ``A x = b`` column by column for SPD (or consistent PSD) sparse ``A``.

    Convergence is declared when ``max |b - A x| * scale <= tol`` over every
    entry of every column; the true residual is recomputed periodically and at
    exit so the reported value is not the recursively updated one.

    Returns ``(x, residual, iterations)``.
    """
    b = np.asarray(b, dtype=float)
    vec = b.ndim == 1
    if vec:
        b = b[:, None]
    n = b.shape[0]
    if max_iter is None:
        max_iter = max(1000, 10 * n)
    if diag is None:
        diag = A.diagonal()
    inv_diag = np.where(diag != 0, 1.0 / np.where(diag != 0, diag, 1.0), 1.0)[:, None]
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float).reshape(b.shape)
    r = b - A @ x
    if n == 0:
        return (x[:, 0] if vec else x), 0.0, 0

    def worst(res):
        return float(np.abs(res).max()) * scale

    res = worst(r)
    z = r * inv_diag
    p = z.copy()
    rz = np.einsum("ij,ij->j", r, z)
    it = 0
    while res > tol:
        if it >= max_iter:
            raise NoConvergence(max_iter, res)
        q = A @ p
        pq = np.einsum("ij,ij->j", p, q)
        alpha = np.divide(rz, pq, out=np.zeros_like(rz), where=pq > 0)
        x += alpha * p
        it += 1
        if it % _REPLACE_EVERY == 0:
            r = b - A @ x
        else:
            r -= alpha * q
        res = worst(r)
        if res <= tol:
            r = b - A @ x
            res = worst(r)
            if res <= tol:
                break
        z = r * inv_diag
        rz_new = np.einsum("ij,ij->j", r, z)
        beta = np.divide(rz_new, rz, out=np.zeros_like(rz), where=rz > 0)
        p = z + beta * p
        rz = rz_new
    return (x[:, 0] if vec else x), res, it
