"""Complex dense linear algebra kernels.

Everything here works on complex128 numpy arrays stored column-major, so
block-column slices of a moment matrix are views.  The kernels are written
out explicitly (no LAPACK calls) and vectorised with numpy where the
algorithm allows it.
"""

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (
    DimensionMismatch,
    NoConvergence,
    RankDeficient,
    SingularMatrix,
    SingularReducedB,
)

EPS = np.finfo(np.float64).eps
DENSE_CAP = 4096
LU_BLOCK = 64


def as_matrix(M, name="matrix"):
    """Return ``M`` as a finite, 2-D, column-major complex128 array."""
    A = np.asarray(M)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    A = np.asfortranarray(A, dtype=np.complex128)
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _require_square(A, name="matrix"):
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {A.shape}")


# ---------------------------------------------------------------------------
# LU


@dataclass(frozen=True)
class LUFactorization:
    """Packed ``P M = L U`` with unit lower ``L``.

    ``pivots[i]`` is the row of the source matrix that ended up in row ``i``.
    The inverses of the diagonal blocks of ``L`` and ``U`` are kept so that
    triangular solves are a sequence of matrix products.
    """

    factors: np.ndarray
    pivots: np.ndarray
    source_dim: int
    rcond: float = float("nan")
    norm1: float = float("nan")
    block: int = LU_BLOCK
    _linv: tuple = field(default=(), repr=False)
    _uinv: tuple = field(default=(), repr=False)

    def reconstruct(self):
        n = self.source_dim
        L = np.tril(self.factors, -1) + np.eye(n)
        U = np.triu(self.factors)
        A = np.empty((n, n), dtype=np.complex128)
        A[self.pivots] = L @ U
        return A


def _unit_lower_solve(L, B):
    X = np.array(B, dtype=np.complex128, order="F")
    for i in range(1, L.shape[0]):
        X[i] -= L[i, :i] @ X[:i]
    return X


def _upper_solve(U, B):
    X = np.array(B, dtype=np.complex128, order="F")
    n = U.shape[0]
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            X[i] -= U[i, i + 1:] @ X[i + 1:]
        X[i] /= U[i, i]
    return X


def lu_factor(M, block=LU_BLOCK, estimate_condition=True):
    """Right-looking blocked LU with partial pivoting.

    Raises SingularMatrix when a pivot magnitude falls below
    ``1e-14 * max|M_ij|``.
    """
    A = np.array(as_matrix(M), order="F", copy=True)
    _require_square(A)
    n = A.shape[0]
    perm = np.arange(n)
    amax = float(np.abs(A).max()) if n else 0.0
    thresh = 1e-14 * amax
    norm1 = float(np.abs(A).sum(axis=0).max()) if n else 0.0

    for k0 in range(0, n, block):
        k1 = min(k0 + block, n)
        for k in range(k0, k1):
            p = k + int(np.argmax(np.abs(A[k:, k])))
            piv = A[p, k]
            if amax == 0.0 or abs(piv) < thresh or piv == 0:
                raise SingularMatrix(k, piv)
            if p != k:
                A[[k, p], :] = A[[p, k], :]
                perm[[k, p]] = perm[[p, k]]
            A[k + 1:, k] /= A[k, k]
            if k + 1 < k1:
                A[k + 1:, k + 1:k1] -= np.outer(A[k + 1:, k], A[k, k + 1:k1])
        if k1 < n:
            A[k0:k1, k1:] = _unit_lower_solve(A[k0:k1, k0:k1], A[k0:k1, k1:])
            A[k1:, k1:] -= A[k1:, k0:k1] @ A[k0:k1, k1:]

    linv, uinv = [], []
    for k0 in range(0, n, block):
        k1 = min(k0 + block, n)
        eye = np.eye(k1 - k0, dtype=np.complex128)
        linv.append(_unit_lower_solve(A[k0:k1, k0:k1], eye))
        uinv.append(_upper_solve(np.triu(A[k0:k1, k0:k1]), eye))

    f = LUFactorization(A, perm, n, norm1=norm1, block=block,
                        _linv=tuple(linv), _uinv=tuple(uinv))
    if estimate_condition and n:
        inv_norm = _inv_norm1_estimate(f)
        rcond = 0.0 if inv_norm == 0 else 1.0 / (norm1 * inv_norm)
        object.__setattr__(f, "rcond", rcond)
    return f


def lu_solve(f, RHS, trans=False):
    """Solve ``M X = RHS`` (or ``M^H X = RHS`` when ``trans``) from ``lu_factor``."""
    B = np.asarray(RHS)
    vector = B.ndim == 1
    B = as_matrix(B, "RHS")
    n = f.source_dim
    if B.shape[0] != n:
        raise DimensionMismatch(f"RHS has {B.shape[0]} rows, factorization is {n}x{n}")
    LU, nb = f.factors, f.block
    starts = list(range(0, n, nb))
    if not trans:
        Y = np.asfortranarray(B[f.pivots])
        for b, k0 in enumerate(starts):
            k1 = min(k0 + nb, n)
            R = Y[k0:k1] - LU[k0:k1, :k0] @ Y[:k0] if k0 else Y[k0:k1]
            Y[k0:k1] = f._linv[b] @ R
        for b in range(len(starts) - 1, -1, -1):
            k0 = starts[b]
            k1 = min(k0 + nb, n)
            R = Y[k0:k1] - LU[k0:k1, k1:] @ Y[k1:] if k1 < n else Y[k0:k1]
            Y[k0:k1] = f._uinv[b] @ R
        X = Y
    else:
        # M^H = U^H L^H P
        W = np.array(B, order="F", copy=True)
        for b, k0 in enumerate(starts):
            k1 = min(k0 + nb, n)
            R = W[k0:k1] - LU[:k0, k0:k1].conj().T @ W[:k0] if k0 else W[k0:k1]
            W[k0:k1] = f._uinv[b].conj().T @ R
        for b in range(len(starts) - 1, -1, -1):
            k0 = starts[b]
            k1 = min(k0 + nb, n)
            R = W[k0:k1] - LU[k1:, k0:k1].conj().T @ W[k1:] if k1 < n else W[k0:k1]
            W[k0:k1] = f._linv[b].conj().T @ R
        X = np.empty_like(W)
        X[f.pivots] = W
    return X[:, 0] if vector else X


def _inv_norm1_estimate(f, itmax=5):
    # Hager / Higham 1-norm estimator for ||M^{-1}||_1.
    n = f.source_dim
    x = np.full(n, 1.0 / n, dtype=np.complex128)
    est = 0.0
    j_old = -1
    for it in range(itmax):
        y = lu_solve(f, x)
        est = float(np.abs(y).sum())
        ay = np.abs(y)
        xi = np.where(ay > 0, y / np.where(ay > 0, ay, 1.0), 1.0)
        z = lu_solve(f, xi, trans=True)
        j = int(np.argmax(np.abs(z)))
        if it > 0 and (abs(z[j]) <= (z.conj() @ x).real or j == j_old):
            break
        x = np.zeros(n, dtype=np.complex128)
        x[j] = 1.0
        j_old = j
    alt = np.array([(-1) ** i * (1 + i / max(n - 1, 1)) for i in range(n)], dtype=np.complex128)
    est_alt = 2.0 * float(np.abs(lu_solve(f, alt)).sum()) / (3.0 * n)
    return max(est, est_alt)


# ---------------------------------------------------------------------------
# QR


def norm2_estimate(A, iters=30):
    """Power-iteration estimate of the spectral norm."""
    A = np.asarray(A)
    if A.size == 0:
        return 0.0
    G = A.conj().T @ A
    x = np.ones(G.shape[0], dtype=np.complex128)
    lam = 0.0
    for _ in range(iters):
        y = G @ x
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
        lam = ny
    return float(np.sqrt(lam))


def _householder(x):
    """Unit v and beta with (I - 2vv^H) x = beta e_1."""
    normx = np.linalg.norm(x)
    if normx == 0:
        return None, 0.0
    x0 = x[0]
    phase = x0 / abs(x0) if x0 != 0 else 1.0
    beta = -phase * normx
    v = x.copy()
    v[0] -= beta
    nv = np.linalg.norm(v)
    if nv == 0:
        return None, x0
    return v / nv, beta


def qr_orthonormalize(M, check_rank=True):
    """Householder QR: ``M = Q R`` with orthonormal ``Q`` (m x n) and upper ``R``.

    Raises RankDeficient when ``|R_kk| < 1e-14 ||M||_2``, unless
    ``check_rank`` is false (Q is orthonormal either way).
    """
    A = np.array(as_matrix(M), order="F", copy=True)
    m, n = A.shape
    if m < n:
        raise DimensionMismatch(f"qr_orthonormalize needs rows >= cols, got {A.shape}")
    thresh = 1e-14 * norm2_estimate(A)
    vs = []
    for k in range(n):
        v, beta = _householder(A[k:, k].copy())
        if v is not None:
            A[k:, k:] -= 2.0 * np.outer(v, v.conj() @ A[k:, k:])
            A[k, k] = beta
            A[k + 1:, k] = 0.0
        vs.append(v)
        if check_rank and (thresh == 0.0 or abs(A[k, k]) < thresh):
            raise RankDeficient(k, A[k, k])
    Q = np.zeros((m, n), dtype=np.complex128, order="F")
    Q[np.arange(n), np.arange(n)] = 1.0
    for k in range(n - 1, -1, -1):
        v = vs[k]
        if v is not None:
            Q[k:, :] -= 2.0 * np.outer(v, v.conj() @ Q[k:, :])
    return Q, np.triu(A[:n, :])


# ---------------------------------------------------------------------------
# SVD (one-sided Jacobi)


@dataclass(frozen=True)
class SVDResult:
    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray
    sweeps: int = 0

    def rank(self, cutoff):
        """Number of singular values with sigma_i / sigma_1 >= cutoff."""
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0
        return int(np.count_nonzero(s / s[0] >= cutoff))


def _round_robin(k):
    # circle-method tournament: k-1 rounds of k/2 disjoint pairs
    players = list(range(k))
    rounds = []
    for _ in range(k - 1):
        top = players[: k // 2]
        bot = players[k // 2:][::-1]
        p = np.array([min(a, b) for a, b in zip(top, bot)])
        q = np.array([max(a, b) for a, b in zip(top, bot)])
        rounds.append((p, q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _complete_orthonormal(U, missing):
    """Replace columns ``missing`` of U by an orthonormal completion."""
    m = U.shape[0]
    have = [j for j in range(U.shape[1]) if j not in set(missing)]
    basis = [U[:, j] for j in have]
    cand = 0
    for j in missing:
        while True:
            e = np.zeros(m, dtype=np.complex128)
            e[cand % m] = 1.0
            cand += 1
            for _ in range(2):
                for b in basis:
                    e -= b * (b.conj() @ e)
            ne = np.linalg.norm(e)
            if ne > 0.5:
                break
        e /= ne
        U[:, j] = e
        basis.append(e)
    return U


def svd(M, max_sweeps=30, tol=None):
    """Thin SVD by one-sided (Hestenes) Jacobi with round-robin pair ordering."""
    A = as_matrix(M)
    m, n = A.shape
    if m < n:
        r = svd(A.conj().T, max_sweeps=max_sweeps, tol=tol)
        return SVDResult(r.V, r.singular_values, r.U, r.sweeps)
    if n == 0:
        return SVDResult(np.zeros((m, 0), complex), np.zeros(0), np.zeros((0, 0), complex))
    if tol is None:
        tol = 4.0 * np.sqrt(m) * EPS
    k = n + (n % 2)
    G = np.zeros((m, k), dtype=np.complex128, order="F")
    G[:, :n] = A
    V = np.eye(k, dtype=np.complex128, order="F")
    rounds = _round_robin(k)
    off = 0.0
    sweep = 0
    converged = False
    for sweep in range(1, max_sweeps + 1):
        rotated = False
        off = 0.0
        for p, q in rounds:
            gp, gq = G[:, p], G[:, q]
            alpha = np.einsum("ij,ij->j", gp.conj(), gp).real
            beta = np.einsum("ij,ij->j", gq.conj(), gq).real
            gamma = np.einsum("ij,ij->j", gp.conj(), gq)
            ag = np.abs(gamma)
            scale = np.sqrt(alpha * beta)
            with np.errstate(invalid="ignore", divide="ignore"):
                rel = np.where(scale > 0, ag / np.where(scale > 0, scale, 1.0), 0.0)
            off = max(off, float(rel.max(initial=0.0)))
            act = rel > tol
            if not act.any():
                continue
            rotated = True
            p, q = p[act], q[act]
            gp, gq = gp[:, act], gq[:, act]
            alpha, beta, gamma, ag = alpha[act], beta[act], gamma[act], ag[act]
            phase = gamma / ag
            zeta = (beta - alpha) / (2.0 * ag)
            sgn = np.where(zeta >= 0, 1.0, -1.0)
            t = sgn / (np.abs(zeta) + np.hypot(1.0, zeta))
            c = 1.0 / np.hypot(1.0, t)
            s = c * t
            gqh = gq * phase.conj()
            G[:, p] = c * gp - s * gqh
            G[:, q] = s * gp + c * gqh
            vp, vq = V[:, p], V[:, q] * phase.conj()
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
        if not rotated:
            converged = True
            break
    if not converged:
        raise NoConvergence(
            f"one-sided Jacobi did not converge in {max_sweeps} sweeps "
            f"(off-diagonal residual {off:.3e})",
            residual=off,
        )
    sigma = np.linalg.norm(G, axis=0)
    order = np.argsort(-sigma[:n], kind="stable")
    sigma = sigma[order]
    G = G[:, order]
    V = V[:n, :][:, order]
    U = np.zeros((m, n), dtype=np.complex128, order="F")
    zero = []
    for j in range(n):
        if sigma[j] > 0 and np.isfinite(1.0 / sigma[j]):
            U[:, j] = G[:, j] / sigma[j]
        else:
            zero.append(j)
    if zero:
        U = _complete_orthonormal(U, zero)
    return SVDResult(U, sigma, np.asfortranarray(V), sweep)


# ---------------------------------------------------------------------------
# Nonsymmetric eigenproblem


def hessenberg(M):
    """Householder reduction ``M = Q H Q^H``; returns H and the reflectors."""
    H = np.array(as_matrix(M), order="F", copy=True)
    _require_square(H)
    n = H.shape[0]
    refl = []
    for k in range(n - 2):
        x = H[k + 1:, k]
        if not np.any(x[1:]):
            continue
        v, beta = _householder(x.copy())
        if v is None:
            continue
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
        refl.append((k, v))
    return H, refl


def _apply_q(refl, Y):
    Y = np.array(Y, dtype=np.complex128, copy=True)
    Z = Y.reshape(Y.shape[0], -1)
    for k, v in reversed(refl):
        Z[k + 1:] -= 2.0 * np.outer(v, v.conj() @ Z[k + 1:])
    return Y


@njit(cache=True)
def _givens(x, y):
    ax = abs(x)
    r = np.hypot(ax, abs(y))
    if r == 0.0:
        return 1.0, 0.0j
    if ax == 0.0:
        return 0.0, np.conj(y) / abs(y)
    return ax / r, (x / ax) * np.conj(y) / r


@njit(cache=True)
def _qr_kernel(T, w, cap):
    # returns -1 on success, else the index of the stalled eigenvalue
    n = T.shape[0]
    hnorm = 0.0
    for i in range(n):
        for j in range(n):
            hnorm = max(hnorm, abs(T[i, j]))
    total = 0
    its = 0
    hi = n - 1
    while hi >= 0:
        l = hi
        while l > 0:
            s = abs(T[l - 1, l - 1]) + abs(T[l, l])
            if s == 0.0:
                s = hnorm
            if abs(T[l, l - 1]) <= EPS * s:
                T[l, l - 1] = 0.0
                break
            l -= 1
        lo = l
        if lo == hi:
            w[hi] = T[hi, hi]
            hi -= 1
            its = 0
            continue
        if total >= cap:
            return hi
        a = T[hi - 1, hi - 1]
        b = T[hi - 1, hi]
        c = T[hi, hi - 1]
        d = T[hi, hi]
        if its > 0 and its % 10 == 0:
            mu = d + 0.75 * abs(c)
        else:
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            m1 = d - half + disc
            m2 = d - half - disc
            mu = m1 if abs(m1 - d) < abs(m2 - d) else m2
        for k in range(lo, hi):
            if k == lo:
                x = T[lo, lo] - mu
                y = T[lo + 1, lo]
            else:
                x = T[k, k - 1]
                y = T[k + 1, k - 1]
            cs, sn = _givens(x, y)
            j0 = lo if k == lo else k - 1
            for j in range(j0, hi + 1):
                u = T[k, j]
                v = T[k + 1, j]
                T[k, j] = cs * u + sn * v
                T[k + 1, j] = -np.conj(sn) * u + cs * v
            if k > lo:
                T[k + 1, k - 1] = 0.0
            i1 = min(k + 2, hi) + 1
            for i in range(lo, i1):
                u = T[i, k]
                v = T[i, k + 1]
                T[i, k] = cs * u + np.conj(sn) * v
                T[i, k + 1] = -sn * u + cs * v
        its += 1
        total += 1
    return -1


def hessenberg_eigvals(H, max_iter=None):
    """Eigenvalues of an upper Hessenberg matrix by single-shift implicit QR."""
    T = np.array(H, dtype=np.complex128, order="C", copy=True)
    n = T.shape[0]
    w = np.zeros(n, dtype=np.complex128)
    if n == 0:
        return w
    cap = max_iter if max_iter is not None else 100 * n
    stalled = _qr_kernel(T, w, cap)
    if stalled >= 0:
        raise NoConvergence(f"QR iteration stalled at eigenvalue index {stalled}", index=stalled)
    return w


@njit(cache=True)
def _hessenberg_inverse_iteration(H, lam, start, hnorm, steps=3):
    n = H.shape[0]
    small = EPS * max(hnorm, 1e-300)
    U = H.copy()
    for i in range(n):
        U[i, i] -= lam
    swaps = np.zeros(n, dtype=np.bool_)
    mult = np.zeros(n, dtype=np.complex128)
    for k in range(n - 1):
        if abs(U[k + 1, k]) > abs(U[k, k]):
            for j in range(k, n):
                t = U[k, j]
                U[k, j] = U[k + 1, j]
                U[k + 1, j] = t
            swaps[k] = True
        if abs(U[k, k]) < small:
            U[k, k] = small
        mult[k] = U[k + 1, k] / U[k, k]
        for j in range(k, n):
            U[k + 1, j] -= mult[k] * U[k, j]
    if abs(U[n - 1, n - 1]) < small:
        U[n - 1, n - 1] = small
    x = start.astype(np.complex128)
    for _ in range(steps):
        y = x.copy()
        for k in range(n - 1):
            if swaps[k]:
                t = y[k]
                y[k] = y[k + 1]
                y[k + 1] = t
            y[k + 1] -= mult[k] * y[k]
        for i in range(n - 1, -1, -1):
            acc = y[i]
            for j in range(i + 1, n):
                acc -= U[i, j] * y[j]
            y[i] = acc / U[i, i]
        ny = np.linalg.norm(y)
        if not np.isfinite(ny) or ny == 0.0:
            break
        x = y / ny
    return x


def _normalize_phase(x):
    nx = np.linalg.norm(x)
    if nx == 0:
        return x
    x = x / nx
    j = int(np.argmax(np.abs(x)))
    return x * (abs(x[j]) / x[j])


def eig_dense(M, select=None, cap=DENSE_CAP):
    """All eigenpairs of a dense square matrix.

    Eigenvalues come from Hessenberg reduction plus shifted QR; eigenvectors
    from inverse iteration on the Hessenberg form, back-transformed and
    normalised to unit 2-norm.  ``select`` is an optional predicate on the
    eigenvalue: pairs it rejects carry ``None`` instead of a vector.
    Returns a list of ``(lambda, x)`` tuples in Schur-diagonal order.
    """
    A = as_matrix(M)
    _require_square(A)
    n = A.shape[0]
    if n > cap:
        raise DimensionMismatch(f"eig_dense is capped at dimension {cap}, got {n}")
    if n == 0:
        return []
    H, refl = hessenberg(A)
    w = hessenberg_eigvals(H)
    hnorm = float(np.abs(H).max())
    Hc = np.ascontiguousarray(H)
    wanted = [i for i, lam in enumerate(w) if select is None or select(lam)]
    Y = np.zeros((n, len(wanted)), dtype=np.complex128)
    for c, i in enumerate(wanted):
        lam = w[i]
        prev = w[wanted[:c]]
        copies = int(np.count_nonzero(np.abs(prev - lam) <= 1e-8 * max(1.0, abs(lam))))
        if copies == 0:
            start = np.ones(n, dtype=np.complex128)
        else:
            start = np.random.default_rng(7919 + copies).standard_normal(n).astype(np.complex128)
        shift = lam + copies * 10.0 * EPS * max(hnorm, 1.0)
        Y[:, c] = _hessenberg_inverse_iteration(Hc, complex(shift), start, hnorm)
    X = _apply_q(refl, Y)
    vectors = dict(zip(wanted, (_normalize_phase(X[:, c]) for c in range(len(wanted)))))
    return [(complex(lam), vectors.get(i)) for i, lam in enumerate(w)]


def eigvals_dense(M):
    A = as_matrix(M)
    _require_square(A)
    H, _ = hessenberg(A)
    return hessenberg_eigvals(H)


def eig_reduced_gep(A_red, B_red):
    """Solve ``A_red t = theta B_red t`` through ``B_red^{-1} A_red``.

    Raises SingularReducedB when B_red is numerically singular.
    """
    A = as_matrix(A_red, "A_red")
    B = as_matrix(B_red, "B_red")
    _require_square(A, "A_red")
    _require_square(B, "B_red")
    if A.shape != B.shape:
        raise DimensionMismatch(f"A_red {A.shape} and B_red {B.shape} differ")
    if A.shape[0] == 0:
        return []
    try:
        f = lu_factor(B)
    except SingularMatrix:
        raise SingularReducedB(0.0) from None
    if not f.rcond >= 1e-12:
        raise SingularReducedB(f.rcond)
    return eig_dense(lu_solve(f, A))
