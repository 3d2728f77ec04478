"""Contour-integral eigensolvers built on the moment engine.

Six methods share one pipeline: factorise ``z_j B - A`` on the contour,
push a random block ``V`` through the quadrature to get the moments, then
extract eigenpairs from a small dense problem.

==========  =======================================================
ss_hankel   Petrov-Galerkin on the block Hankel pair of moments
ss_rr       Rayleigh-Ritz on span of all moments
feast       Subspace iteration with Rayleigh-Ritz (Hermitian-definite)
ss_arnoldi  Block Arnoldi on the filtered operator, no truncation
beyn        Truncated SVD of ``S_0``, reduced matrix from ``S_1``
ss_beyn     Block generalisation of Beyn over all moments
==========  =======================================================
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dense import as_matrix, eig_dense, eig_reduced_gep, qr_orthonormalize, svd
from .errors import (ArnoldiBreakdown, DimensionMismatch, NotHermitianDefinite, RankCollapse,
                     RankDeficient)
from .moments import (TimingLedger, assemble_hankel, block_moments, compute_moments,
                      factorize_points, filter_block, quadrature_sum, refine_subspace,
                      solve_points)
from .quadrature import build_rule

METHODS = ("ss_hankel", "ss_rr", "feast", "ss_arnoldi", "beyn", "ss_beyn")


@dataclass(frozen=True)
class SolverConfig:
    L: int = 8
    M: int = 2
    N: int = 32
    rank_cutoff: float = 1e-14
    max_feast_iters: int = 20
    feast_tol: float = 1e-12
    seed: int = 0
    method: str = "ss_rr"
    refine_l: int = 1
    rule_kind: str = "trapezoidal"
    half_contour: bool = True
    complex_V: bool = False
    vtilde_equals_v: bool = False
    margin: float = 0.0

    def __post_init__(self):
        if self.L < 1 or self.M < 1:
            raise ValueError("L and M must be >= 1")
        if not 0.0 <= self.rank_cutoff < 1.0:
            raise ValueError("rank_cutoff must lie in [0, 1)")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.refine_l < 1:
            raise ValueError("refine_l must be >= 1")

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return SolverConfig(**d)


@dataclass
class EigenPair:
    value: complex
    vector: np.ndarray
    residual: float
    inside: bool


@dataclass
class EigenResult:
    pairs: list
    mhat: int
    timing: dict
    method: str
    iterations_used: int = 0
    converged: bool = True
    undersized: bool = False
    history: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def inside(self):
        return [p for p in self.pairs if p.inside]

    @property
    def eigenvalues(self):
        return np.array([p.value for p in self.pairs], dtype=np.complex128)

    def inside_values(self):
        return np.array([p.value for p in self.inside], dtype=np.complex128)

    def inside_residuals(self):
        return np.array([p.residual for p in self.inside])


def residuals(pencil, pairs):
    """``||A x - lambda B x||_2`` for each ``(lambda, x)``."""
    if not pairs:
        return []
    lam = np.array([p[0] for p in pairs], dtype=np.complex128)
    X = np.column_stack([np.asarray(p[1], dtype=np.complex128) for p in pairs])
    R = pencil.A @ X - pencil.apply_B(X) * lam
    return [float(np.linalg.norm(R[:, i])) for i in range(R.shape[1])]


def select_in_region(pairs, region, margin=0.0):
    """Split pairs by region membership; returns ``(inside, outside)``.

    Accepts EigenPair objects (their ``inside`` flag is updated) or bare
    ``(lambda, x)`` tuples.
    """
    inside, outside = [], []
    for p in pairs:
        lam = p.value if isinstance(p, EigenPair) else p[0]
        flag = region.contains(lam, margin)
        if isinstance(p, EigenPair):
            p.inside = flag
        (inside if flag else outside).append(p)
    return inside, outside


def _seed_block(n, L, seed, complex_V):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((n, L))
    if complex_V:
        V = V + 1j * rng.standard_normal((n, L))
    return np.asfortranarray(V.astype(np.complex128))


def _truncate(S, cutoff):
    res = svd(S)
    k = res.rank(cutoff)
    if k == 0:
        raise RankCollapse("numerical rank is zero: the contour encloses no eigenvalues "
                           "reachable from the seed block")
    return res.U[:, :k], res.singular_values[:k], res.V[:, :k]


def _finish(pencil, region, cfg, ritz, X, mhat, ledger, method, **extra):
    """Normalise vectors, compute residuals, flag region membership."""
    pairs = []
    if ritz:
        lam = [r for r in ritz]
        nrm = np.linalg.norm(X, axis=0)
        nrm[nrm == 0] = 1.0
        X = X / nrm
        res = residuals(pencil, list(zip(lam, X.T)))
        for i, v in enumerate(lam):
            pairs.append(EigenPair(complex(v), X[:, i].copy(), res[i],
                                   region.contains(v, cfg.margin)))
    return EigenResult(pairs, mhat, {}, method, **extra)


def _prepare(pencil, region, cfg, ledger, real_rhs_only=False):
    rule = build_rule(region, cfg.rule_kind, cfg.N)
    half = cfg.half_contour and not (real_rhs_only and cfg.complex_V)
    f = factorize_points(pencil, rule, half, ledger)
    V = _seed_block(pencil.n, cfg.L, cfg.seed, cfg.complex_V)
    if cfg.refine_l > 1:
        V = refine_subspace(f, V, cfg.refine_l)
    return f, V


def _eigs(M):
    pairs = eig_dense(M)
    lam = [p[0] for p in pairs]
    T = np.column_stack([p[1] for p in pairs]) if pairs else np.zeros((M.shape[0], 0))
    return lam, T


def _timed(method):
    def wrap(fn):
        def run(pencil, region, config=None, **kw):
            cfg = config if config is not None else SolverConfig(method=method)
            ledger = TimingLedger()
            with ledger.phase("t_total"):
                result = fn(pencil, region, cfg, ledger, **kw)
            result.timing = ledger.as_dict()
            if method in TRUNCATING and result.mhat >= _capacity(cfg, method, pencil.n):
                # full rank: the subspace may be too small to hold every eigenvalue inside
                result.undersized = True
            return result
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        run.__wrapped__ = fn
        return run
    return wrap


TRUNCATING = ("ss_hankel", "ss_rr", "beyn", "ss_beyn")


def _capacity(cfg, method, n):
    if method == "beyn":
        return min(cfg.L, n)
    return min(cfg.L * cfg.M, n)


@_timed("ss_hankel")
def solve_ss_hankel(pencil, region, cfg, ledger, Vtilde=None):
    """Block Hankel method: eigenvalues of ``U^H H_< W Sigma^{-1}``."""
    f, V = _prepare(pencil, region, cfg, ledger)
    M = cfg.M
    stack = compute_moments(f, V, 2 * M - 1)
    if Vtilde is None:
        Vtilde = V if cfg.vtilde_equals_v else _seed_block(pencil.n, cfg.L, cfg.seed + 1, cfg.complex_V)
    Vtilde = as_matrix(Vtilde, "Vtilde")
    if Vtilde.shape != V.shape:
        raise DimensionMismatch(f"Vtilde must be {V.shape}, got {Vtilde.shape}")
    mus = block_moments(Vtilde, stack, 2 * M - 1)
    H, Hs = assemble_hankel(mus, M)
    U1, s1, W1 = _truncate(H, cfg.rank_cutoff)
    K = W1 / s1
    red = U1.conj().T @ Hs @ K
    lam, T = _eigs(red)
    X = stack.S(M) @ (K @ T)
    return _finish(pencil, region, cfg, lam, X, len(s1), ledger, "ss_hankel")


@_timed("ss_rr")
def solve_ss_rr(pencil, region, cfg, ledger):
    """Rayleigh-Ritz on the range of ``[S_0, ..., S_{M-1}]``."""
    f, V = _prepare(pencil, region, cfg, ledger)
    stack = compute_moments(f, V, cfg.M)
    U1, s1, _ = _truncate(stack.S(cfg.M), cfg.rank_cutoff)
    pairs = eig_reduced_gep(U1.conj().T @ (pencil.A @ U1), U1.conj().T @ pencil.apply_B(U1))
    lam = [p[0] for p in pairs]
    T = np.column_stack([p[1] for p in pairs])
    return _finish(pencil, region, cfg, lam, U1 @ T, len(s1), ledger, "ss_rr")


@_timed("feast")
def solve_feast(pencil, region, cfg, ledger):
    """Filtered subspace iteration with Rayleigh-Ritz.

    Each pass filters the current Ritz block and re-projects.  Stops once
    the largest in-region residual drops below ``feast_tol``; otherwise
    returns the last iterate with ``converged=False``.
    """
    if not (pencil.hermitian_A and pencil.hpd_B):
        raise NotHermitianDefinite("FEAST needs a Hermitian A and a Hermitian positive definite B")
    f, V = _prepare(pencil, region, cfg, ledger)
    history = []
    result = None
    for it in range(1, cfg.max_feast_iters + 1):
        S0 = filter_block(f, V)
        Qb, _ = qr_orthonormalize(S0, check_rank=False)
        pairs = eig_reduced_gep(Qb.conj().T @ (pencil.A @ Qb), Qb.conj().T @ pencil.apply_B(Qb))
        lam = [p[0] for p in pairs]
        T = np.column_stack([p[1] for p in pairs])
        result = _finish(pencil, region, cfg, lam, Qb @ T, Qb.shape[1], ledger, "feast")
        inside = result.inside_residuals()
        worst = float(inside.max()) if inside.size else 0.0
        history.append(worst)
        V = np.asfortranarray(np.column_stack([p.vector for p in result.pairs]))
        if worst < cfg.feast_tol:
            break
    result.iterations_used = it
    result.history = history
    result.converged = history[-1] < cfg.feast_tol
    if not result.converged:
        result.notes.append(f"no convergence after {it} iterations "
                            f"(max in-region residual {history[-1]:.3e})")
    return result


@_timed("ss_arnoldi")
def solve_ss_arnoldi(pencil, region, cfg, ledger):
    """Block Arnoldi on the filtered operator, driven through the quadrature.

    The per-node coefficient blocks ``alpha_{k,j}`` let every new Krylov
    block be formed from the stored solutions ``Y_j`` without extra solves.
    """
    L, M = cfg.L, cfg.M
    if L * M > pencil.n:
        raise DimensionMismatch(f"L*M = {L * M} exceeds n = {pencil.n}")
    f, V = _prepare(pencil, region, cfg, ledger, real_rhs_only=True)
    Ys = solve_points(f, V)
    z = f.points
    nodes = range(len(Ys))
    W0 = quadrature_sum(f, Ys, lambda jj: 1.0)
    try:
        W1, R = qr_orthonormalize(W0)
    except RankDeficient as e:
        raise ArnoldiBreakdown(0, e.column) from None
    Rinv = _upper_inverse(R)
    # alphas[i][j]: coefficients with W_{i+1} = sum_j w_j Y_j alphas[i][j]
    alphas = [[Rinv for _ in nodes]]
    Ws = [W1]
    H = np.zeros((L * M, L * M), dtype=np.complex128)
    for k in range(M):
        at = [z[jj] * alphas[k][jj] for jj in nodes]
        Wt = quadrature_sum(f, Ys, lambda jj: at[jj])
        for i in range(k + 1):
            Hik = Ws[i].conj().T @ Wt
            H[i * L:(i + 1) * L, k * L:(k + 1) * L] = Hik
            at = [at[jj] - alphas[i][jj] @ Hik for jj in nodes]
            Wt = Wt - Ws[i] @ Hik
        if k == M - 1:
            # H_{M+1,M} lies outside the square Hessenberg matrix
            break
        try:
            Wn, Hn = qr_orthonormalize(Wt)
        except RankDeficient as e:
            raise ArnoldiBreakdown(k + 1, e.column) from None
        H[(k + 1) * L:(k + 2) * L, k * L:(k + 1) * L] = Hn
        Hinv = _upper_inverse(Hn)
        alphas.append([at[jj] @ Hinv for jj in nodes])
        Ws.append(Wn)
    lam, T = _eigs(H)
    X = np.hstack(Ws) @ T
    return _finish(pencil, region, cfg, lam, X, L * M, ledger, "ss_arnoldi")


def _upper_inverse(R):
    n = R.shape[0]
    Rinv = np.zeros_like(R)
    for i in range(n - 1, -1, -1):
        Rinv[i, i] = 1.0 / R[i, i]
        if i < n - 1:
            Rinv[i, i + 1:] = -(R[i, i + 1:] @ Rinv[i + 1:, i + 1:]) / R[i, i]
    return Rinv


@_timed("beyn")
def solve_beyn(pencil, region, cfg, ledger):
    """Truncated SVD of ``S_0`` and the reduced matrix ``U^H S_1 W Sigma^{-1}``."""
    if cfg.M != 1:
        warnings.warn(f"beyn uses a single moment pair; ignoring M={cfg.M}", stacklevel=3)
    return _beyn_core(pencil, region, cfg, ledger, 1, "beyn")


@_timed("ss_beyn")
def solve_ss_beyn(pencil, region, cfg, ledger):
    """Block Beyn over ``S`` and the shifted stack ``S_+``."""
    return _beyn_core(pencil, region, cfg, ledger, cfg.M, "ss_beyn")


def _beyn_core(pencil, region, cfg, ledger, M, method):
    f, V = _prepare(pencil, region, cfg, ledger)
    stack = compute_moments(f, V, M)
    U1, s1, W1 = _truncate(stack.S(M), cfg.rank_cutoff)
    red = U1.conj().T @ stack.S_plus(M) @ (W1 / s1)
    lam, T = _eigs(red)
    return _finish(pencil, region, cfg, lam, U1 @ T, len(s1), ledger, method)


SOLVERS = {
    "ss_hankel": solve_ss_hankel,
    "ss_rr": solve_ss_rr,
    "feast": solve_feast,
    "ss_arnoldi": solve_ss_arnoldi,
    "beyn": solve_beyn,
    "ss_beyn": solve_ss_beyn,
}


def solve(pencil, region, config):
    """Dispatch on ``config.method``."""
    return SOLVERS[config.method](pencil, region, config)
