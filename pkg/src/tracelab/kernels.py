"""Dense spectral kernels: cyclic Jacobi eigensolver and one-sided Jacobi SVD.

Self-contained rotations keep these independent of LAPACK's eigen/SVD drivers,
so library routines stay available as cross-checking oracles in the tests.
Intended scale is desk-size dense matrices (a few hundred rows).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotSymmetric

# Machine epsilon for float64; rank decisions key off this.
EPS = np.finfo(float).eps


def _offdiag_norm(a: np.ndarray) -> float:
    # measured entrywise: the sum-of-squares difference cancels catastrophically
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def jacobi_eigh(a: np.ndarray, tol: float = 1e-13, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps row-cyclically until the off-diagonal Frobenius mass drops below
    ``tol`` times the Frobenius norm of the input.

    Returns
    -------
    w : (n,) ndarray, eigenvalues ascending
    v : (n, n) ndarray, orthonormal eigenvectors as columns, a @ v == v @ diag(w)
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionMismatch(f"square matrix expected, got {a.shape}")
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(a).max(initial=0.0)))):
        raise NotSymmetric("jacobi_eigh requires a symmetric matrix")

    w = a.copy()
    v = np.eye(n)
    ref = float(np.linalg.norm(w))
    if n == 1 or ref == 0.0:
        order = np.argsort(np.diag(w))
        return np.diag(w)[order], v[:, order]

    for _ in range(max_sweeps):
        if _offdiag_norm(w) <= tol * ref:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p, q]
                if abs(apq) <= 1e-300:
                    w[p, q] = w[q, p] = 0.0
                    continue
                app, aqq = w[p, p], w[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(1.0, theta)) if theta != 0.0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = w[:, p].copy()
                col_q = w[:, q].copy()
                w[:, p] = c * col_p - s * col_q
                w[:, q] = s * col_p + c * col_q
                row_p = w[p, :].copy()
                row_q = w[q, :].copy()
                w[p, :] = c * row_p - s * row_q
                w[q, :] = s * row_p + c * row_q
                # stable closed forms for the rotated 2x2 block
                w[p, p] = app - t * apq
                w[q, q] = aqq + t * apq
                w[p, q] = w[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q

    vals = np.diag(w).copy()
    order = np.argsort(vals, kind="stable")
    return vals[order], v[:, order]


def jacobi_svd(m: np.ndarray, tol: float = 1e-14, max_sweeps: int = 60):
    """Thin SVD by one-sided (Hestenes) Jacobi orthogonalization.

    Returns ``(u, s, vt)`` with ``m == u @ diag(s) @ vt`` up to rounding,
    singular values descending.  Columns of ``u`` belonging to zero singular
    values are zero vectors.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch("2-d array expected")
    rows, cols = m.shape
    if rows < cols:
        ut, s, vt = jacobi_svd(m.T, tol=tol, max_sweeps=max_sweeps)
        return vt.T, s, ut.T

    u = m.copy()
    v = np.eye(cols)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(cols - 1):
            for q in range(p + 1, cols):
                x = u[:, p]
                y = u[:, q]
                npp = float(x @ x)
                nqq = float(y @ y)
                npq = float(x @ y)
                if abs(npq) <= tol * np.sqrt(npp * nqq):
                    continue
                rotated = True
                zeta = (nqq - npp) / (2.0 * npq)
                t = np.sign(zeta) / (abs(zeta) + np.hypot(1.0, zeta)) if zeta != 0.0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # compute both rotated columns before writing (x, y are views)
                up = c * x - s * y
                uq = s * x + c * y
                u[:, p] = up
                u[:, q] = uq
                vp = c * v[:, p] - s * v[:, q]
                vq = s * v[:, p] + c * v[:, q]
                v[:, p] = vp
                v[:, q] = vq
        if not rotated:
            break

    sigma = np.linalg.norm(u, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    u = u[:, order]
    v = v[:, order]
    nonzero = sigma > 0.0
    u[:, nonzero] = u[:, nonzero] / sigma[nonzero]
    u[:, ~nonzero] = 0.0
    return u, sigma, v.T


def rank_cutoff(shape: tuple[int, int], sigma_max: float) -> float:
    """Singular values at or below this are treated as zero."""
    return max(shape) * EPS * sigma_max * 1e3


def pinv_dense(m: np.ndarray):
    """Euclidean Moore-Penrose inverse built on jacobi_svd.

    Returns ``(pinv, rank)``.
    """
    u, s, vt = jacobi_svd(m)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0])), 0
    cut = rank_cutoff(m.shape, float(s[0]))
    keep = s > cut
    r = int(np.count_nonzero(keep))
    inv = vt[:r].T @ (u[:, :r] / s[:r]).T
    return inv, r


def gen_eigh(a: np.ndarray, b: np.ndarray):
    """Generalized symmetric eigenproblem a x = lam b x with b positive definite.

    Cholesky reduction to standard form, then jacobi_eigh.  Returns
    ``(w, x)`` with eigenvalues ascending and x.T @ b @ x == identity.
    """
    from scipy.linalg import solve_triangular

    low = np.linalg.cholesky(b)
    # c = L^-1 a L^-T, symmetrized against rounding drift
    tmp = solve_triangular(low, np.asarray(a, dtype=float), lower=True)
    c = solve_triangular(low, tmp.T, lower=True).T
    c = 0.5 * (c + c.T)
    w, y = jacobi_eigh(c)
    x = solve_triangular(low.T, y, lower=False)
    return w, x
