"""NumPy implementation of the PLS hot loops.

Both kernels work on the item correlation matrix: with standardized items the
whole outer/inner iteration is a function of ``R`` alone, so a fit costs
O(p^2) per iteration regardless of sample size.

Status codes returned by :func:`outer_loop`: 0 ok, 1 singular inner
regression, 2 degenerate (zero-variance) composite.
"""

import numpy as np

SCHEMES = {"path": 0, "centroid": 1, "factor": 2}
SINGULAR_EPS = 1e-12


def weighted_corr(X, counts):
    """Correlation matrix of ``X`` with row ``i`` repeated ``counts[i]`` times.

    Returns ``(R, sd)``; ``R`` is ``None`` when some column has zero variance.
    """
    X = np.asarray(X, dtype=np.float64)
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    mean = c @ X / total
    Xc = X - mean
    cov = Xc.T @ (Xc * c[:, None]) / (total - 1.0)
    var = np.diag(cov).copy()
    if np.any(var <= 0.0):
        return None, np.sqrt(np.maximum(var, 0.0))
    sd = np.sqrt(var)
    R = cov / np.outer(sd, sd)
    np.fill_diagonal(R, 1.0)
    return R, sd


def _block_mask(starts, p):
    K = len(starts) - 1
    mask = np.zeros((p, K))
    for j in range(K):
        mask[starts[j]:starts[j + 1], j] = 1.0
    return mask


def _normalize(R, W, mask, starts):
    var = np.einsum("pk,pq,qk->k", W, R, W)
    if np.any(var <= 0.0):
        return None
    W = W / np.sqrt(var)
    RW = R @ W
    for j in range(W.shape[1]):
        if RW[starts[j], j] < 0.0:
            W[:, j] = -W[:, j]
    return W


def inner_weights(P, adj, scheme):
    """Inner-approximation weights; column ``j`` builds the proxy of construct ``j``.

    Returns ``None`` when an inner regression is singular.
    """
    K = P.shape[0]
    E = np.zeros((K, K))
    for j in range(K):
        if scheme == 0:
            preds = np.flatnonzero(adj[:, j])
            if preds.size:
                A = P[np.ix_(preds, preds)]
                if np.linalg.eigvalsh(A).min() < SINGULAR_EPS:
                    return None
                E[preds, j] = np.linalg.solve(A, P[preds, j])
            succs = np.flatnonzero(adj[j, :])
            E[succs, j] = P[succs, j]
        else:
            nbrs = np.flatnonzero(adj[:, j] | adj[j, :])
            E[nbrs, j] = np.sign(P[nbrs, j]) if scheme == 1 else P[nbrs, j]
    return E


def outer_loop(R, starts, adj, scheme, max_iter, tol):
    """Iterate Mode A outer weights to a fixed point.

    Returns ``(w, iterations, converged, status)`` with ``w`` holding every
    item's weight scaled so each block composite has unit variance.
    """
    R = np.asarray(R, dtype=np.float64)
    starts = np.asarray(starts)
    adj = np.asarray(adj, dtype=bool)
    p = R.shape[0]
    mask = _block_mask(starts, p)
    W = _normalize(R, mask.copy(), mask, starts)
    if W is None:
        return np.zeros(p), 0, False, 2
    w = W.sum(axis=1)
    for it in range(1, max_iter + 1):
        RW = R @ W
        P = W.T @ RW
        E = inner_weights(P, adj, scheme)
        if E is None:
            return w, it, False, 1
        W_new = _normalize(R, (RW @ E) * mask, mask, starts)
        if W_new is None:
            return w, it, False, 2
        w_new = W_new.sum(axis=1)
        delta = np.abs(w_new - w).max()
        W, w = W_new, w_new
        if delta < tol:
            return w, it, True, 0
    return w, max_iter, False, 0
