"""Lowest eigenpairs of sparse Hermitian matrices with residual certificates.

Block Lanczos with full reorthogonalization and thick restarts.  With a
shift ``sigma`` below the wanted eigenvalues the iteration runs on
``(M - sigma)^{-1}`` (sparse LU), whose largest eigenvalues are the wanted
ones; Ritz values are always recomputed as Rayleigh quotients of ``M`` and
convergence is judged on the residuals ``||M v - lambda v||`` only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

__all__ = ["EigResult", "gershgorin_radius", "gershgorin_lower", "lowest_eigenpairs", "count_below"]

log = logging.getLogger(__name__)


@dataclass
class EigResult:
    eigenvalue: float
    vector: np.ndarray = field(repr=False)
    residual: float
    iterations: int
    converged: bool


def _as_sparse(M):
    if hasattr(M, "matrix"):
        M = M.matrix
    return sp.csr_matrix(M) if not sp.issparse(M) else M.tocsr()


def gershgorin_radius(M) -> float:
    """``max_i sum_j |M_ij|``, an upper bound of the spectral radius."""
    A = _as_sparse(M)
    return float(np.max(np.asarray(abs(A).sum(axis=1)).ravel()))


def gershgorin_lower(M) -> float:
    A = _as_sparse(M)
    d = A.diagonal().real
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - off))


def _orthonormalize(V, W, rng, drop_tol=1e-10):
    """Orthonormalize the columns of ``W`` against ``V`` and among themselves."""
    for _ in range(2):
        if V is not None and V.shape[1]:
            W = W - V @ (V.conj().T @ W)
    norms0 = np.linalg.norm(W, axis=0)
    Q, R = np.linalg.qr(W)
    keep = np.abs(np.diag(R)) > drop_tol * np.maximum(norms0.max(initial=0.0), 1e-300)
    Q = Q[:, keep]
    if V is not None and V.shape[1] and Q.shape[1]:
        Q = Q - V @ (V.conj().T @ Q)
        Q, _ = np.linalg.qr(Q)
    return Q


def lowest_eigenpairs(M, m: int = 1, tol: float = 1e-10, max_iter: int = 300, seed: int = 0,
                      shift: float | str | None = "auto", block_size: int | None = None,
                      basis_size: int | None = None) -> list[EigResult]:
    """The ``m`` smallest eigenpairs of the Hermitian matrix ``M``, ascending.

    Each pair is converged when ``||M v - lambda v|| <= tol * G`` with ``G`` the
    Gershgorin radius of ``M``.  ``shift="auto"`` uses shift-invert around a
    point just below the Gershgorin lower bound; ``None`` iterates with ``M``
    itself; a number is used as the shift and must lie below the wanted
    eigenvalues.  ``max_iter`` bounds the number of block expansions.
    """
    A = _as_sparse(M)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if m < 1:
        raise ValueError("m must be at least 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    m = min(m, n)
    G = gershgorin_radius(A)
    thresh = tol * G
    complex_ = np.iscomplexobj(A.data)
    dtype = complex if complex_ else float
    rng = np.random.default_rng(seed)

    if shift == "auto":
        lb = gershgorin_lower(A)
        shift = lb - 1e-3 * max(abs(lb), 1e-3 * G, 1.0)
    if shift is not None:
        lu = splu((A - shift * sp.identity(n, dtype=A.dtype, format="csr")).tocsc())

        def op(X):
            return lu.solve(np.ascontiguousarray(X))
    else:
        def op(X):
            return A @ X

    b = block_size or min(max(m, 2), n)
    kmax = basis_size or min(n, max(6 * m, 4 * b, 40))
    kmax = max(kmax, min(n, m + 2 * b))

    def rand_block(k):
        X = rng.standard_normal((n, k))
        if complex_:
            X = X + 1j * rng.standard_normal((n, k))
        return X.astype(dtype)

    V = _orthonormalize(None, rand_block(b), rng)
    OV = op(V)
    pending = OV
    iterations = 0
    results = None
    while True:
        # expand the block Krylov basis
        while V.shape[1] < kmax and iterations < max_iter:
            W = _orthonormalize(V, pending, rng)
            if W.shape[1] == 0:
                if V.shape[1] >= n:
                    break
                W = _orthonormalize(V, rand_block(min(b, n - V.shape[1])), rng)
                if W.shape[1] == 0:
                    break
            W = W[:, : kmax - V.shape[1]]
            OW = op(W)
            V = np.hstack([V, W])
            OV = np.hstack([OV, OW])
            pending = OW
            iterations += 1
        T = V.conj().T @ OV
        T = 0.5 * (T + T.conj().T)
        theta, Y = np.linalg.eigh(T)
        if shift is not None:
            order = np.argsort(-theta)
        else:
            order = np.argsort(theta)
        keep = min(V.shape[1], max(m + b, 2 * m))
        Y = Y[:, order[:keep]]
        X = V @ Y
        MX = A @ X
        lam = np.real(np.einsum("ij,ij->j", X.conj(), MX))
        R = MX - X * lam
        res = np.linalg.norm(R, axis=0)
        idx = np.argsort(lam)[:m]
        results = [EigResult(float(lam[i]), X[:, i], float(res[i]), iterations, bool(res[i] <= thresh))
                   for i in idx]
        done = all(r.converged for r in results)
        log.debug("lanczos: basis %d, iterations %d, max residual %.3e (target %.3e)",
                  V.shape[1], iterations, max(r.residual for r in results), thresh)
        if done or iterations >= max_iter or V.shape[1] >= n:
            break
        # thick restart on the leading Ritz vectors, continue from their images
        V = X
        OV = OV @ Y
        pending = OV[:, :b]
    # final Rayleigh-Ritz among the returned vectors to enforce orthonormality
    X = np.column_stack([r.vector for r in results])
    Q, _ = np.linalg.qr(X)
    MQ = A @ Q
    S = Q.conj().T @ MQ
    S = 0.5 * (S + S.conj().T)
    w, Z = np.linalg.eigh(S)
    X = Q @ Z
    MX = MQ @ Z
    res = np.linalg.norm(MX - X * w, axis=0)
    return [EigResult(float(w[i]), X[:, i], float(res[i]), iterations, bool(res[i] <= thresh))
            for i in range(len(w))]


def count_below(M, threshold: float, tol: float = 1e-10, m0: int = 4, **kw) -> int:
    """Number of eigenvalues strictly below ``threshold - tol``.

    Requests more eigenpairs until the largest returned one clears the
    threshold.
    """
    A = _as_sparse(M)
    n = A.shape[0]
    m = min(m0, n)
    while True:
        res = lowest_eigenpairs(A, m, **kw)
        if not all(r.converged for r in res):
            raise RuntimeError("eigensolver did not converge while counting")
        if res[-1].eigenvalue >= threshold - tol or m >= n:
            return sum(r.eigenvalue < threshold - tol for r in res)
        m = min(2 * m, n)
