"""Quadrature-point solves and complex moments.

``S_k = sum_j w_j z_j^k (z_j B - A)^{-1} B V``.  Every solver in the package
is a thin layer over :func:`factorize_points` and :func:`compute_moments`.
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .dense import as_matrix, lu_factor, lu_solve, qr_orthonormalize
from .errors import DimensionMismatch, InsufficientDegree, QuadraturePointHitsSpectrum, SingularMatrix


class TimingLedger:
    """Wall-clock accumulation per phase (factorisation, triangular solves, total)."""

    def __init__(self):
        self.t_lu = 0.0
        self.t_solve = 0.0
        self.t_total = 0.0

    @contextmanager
    def phase(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            setattr(self, name, getattr(self, name) + dt)

    @property
    def t_other(self):
        return self.t_total - self.t_lu - self.t_solve

    def as_dict(self):
        return {"t_lu": self.t_lu, "t_solve": self.t_solve,
                "t_other": self.t_other, "t_total": self.t_total}


@dataclass(frozen=True)
class MatrixPencil:
    """The pair (A, B) of ``A x = lambda B x``; ``B=None`` means the identity."""

    A: np.ndarray
    B: np.ndarray = None
    hermitian_A: bool = False
    hpd_B: bool = False
    b_is_identity: bool = False

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        n = A.shape[0]
        if self.B is None:
            B = np.eye(n, dtype=np.complex128, order="F")
            object.__setattr__(self, "b_is_identity", True)
        else:
            B = as_matrix(self.B, "B")
            if B.shape != A.shape:
                raise DimensionMismatch(f"A {A.shape} and B {B.shape} differ")
            if self.b_is_identity and not np.array_equal(B, np.eye(n)):
                raise ValueError("b_is_identity set but B is not the identity")
        if self.hermitian_A:
            amax = np.abs(A).max() if n else 0.0
            if np.abs(A - A.conj().T).max(initial=0.0) > 1e-12 * amax:
                raise ValueError("hermitian_A set but A is not Hermitian")
        if self.hpd_B:
            bmax = np.abs(B).max() if n else 0.0
            if np.abs(B - B.conj().T).max(initial=0.0) > 1e-12 * bmax:
                raise ValueError("hpd_B set but B is not Hermitian")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def is_real(self):
        return not np.any(self.A.imag) and not np.any(self.B.imag)

    def apply_B(self, X):
        return X if self.b_is_identity else self.B @ X


@dataclass(frozen=True)
class PointFactorizations:
    """LU factors of ``z_j B - A`` for the nodes that are actually solved.

    With the half-contour shortcut only nodes in the upper half plane are
    factorised; their conjugate partners contribute complex conjugates.
    """

    rule: object
    pencil: MatrixPencil
    factors: list
    recip_conds: list
    indices: np.ndarray
    half: bool = False
    ledger: TimingLedger = field(default_factory=TimingLedger, repr=False)

    @property
    def points(self):
        return self.rule.points[self.indices]

    @property
    def weights(self):
        return self.rule.weights[self.indices]


def half_contour_indices(rule):
    """Indices of upper-half-plane nodes when the rule pairs under conjugation."""
    z, w = rule.points, rule.weights
    N = rule.N
    upper = np.flatnonzero(z.imag > 0)
    if 2 * upper.size != N:
        return None
    for j in upper:
        partner = N - 1 - j
        scale = max(abs(z[j]), 1.0)
        if abs(z[partner] - np.conj(z[j])) > 1e-14 * scale:
            return None
        if abs(w[partner] - np.conj(w[j])) > 1e-14 * max(abs(w[j]), 1e-300):
            return None
    return upper


def factorize_points(pencil, rule, half_contour=False, ledger=None):
    """Factorise ``z_j B - A`` at every node (or every upper node, see above)."""
    ledger = ledger if ledger is not None else TimingLedger()
    idx = None
    if half_contour and pencil.is_real and rule.region.symmetric_about_real_axis():
        idx = half_contour_indices(rule)
    half = idx is not None
    if idx is None:
        idx = np.arange(rule.N)
    factors, rconds = [], []
    for j in idx:
        z = rule.points[j]
        with ledger.phase("t_lu"):
            try:
                f = lu_factor(z * pencil.B - pencil.A)
            except SingularMatrix:
                raise QuadraturePointHitsSpectrum(int(j), z) from None
        if not f.rcond > 0:
            raise QuadraturePointHitsSpectrum(int(j), z)
        factors.append(f)
        rconds.append(f.rcond)
    return PointFactorizations(rule, pencil, factors, rconds, np.asarray(idx), half, ledger)


@dataclass(frozen=True)
class MomentStack:
    """Blocks ``S_0..S_M`` stored side by side in one column-major array."""

    data: np.ndarray
    L: int
    M: int
    rule: object = field(repr=False)
    solutions: list = field(default=None, repr=False)

    @property
    def blocks(self):
        return [self.data[:, k * self.L:(k + 1) * self.L] for k in range(self.M + 1)]

    def block(self, k):
        if not 0 <= k <= self.M:
            raise InsufficientDegree(f"moment S_{k} requested, stack holds S_0..S_{self.M}")
        return self.data[:, k * self.L:(k + 1) * self.L]

    def S(self, M=None):
        """``[S_0, ..., S_{M-1}]`` as a view."""
        M = self.M if M is None else M
        if M > self.M:
            raise InsufficientDegree(f"S needs S_0..S_{M - 1}, stack holds S_0..S_{self.M}")
        return self.data[:, :M * self.L]

    def S_plus(self, M=None):
        """``[S_1, ..., S_M]`` as a view."""
        M = self.M if M is None else M
        if M > self.M:
            raise InsufficientDegree(f"S_+ needs S_1..S_{M}, stack holds S_0..S_{self.M}")
        return self.data[:, self.L:(M + 1) * self.L]


def _accumulate(terms, half, compensated=False):
    """Sum a sequence of arrays in the order given."""
    total = None
    comp = None
    for t in terms:
        if half:
            t = 2.0 * t.real + 0j
        if total is None:
            total = np.array(t, dtype=np.complex128, order="F")
            comp = np.zeros_like(total) if compensated else None
            continue
        if compensated:
            y = t - comp
            s = total + y
            comp = (s - total) - y
            total = s
        else:
            total += t
    return total


def solve_points(f, X):
    """``Y_j = (z_j B - A)^{-1} B X`` for every factorised node."""
    X = as_matrix(X, "V")
    if X.shape[0] != f.pencil.n:
        raise DimensionMismatch(f"V has {X.shape[0]} rows, pencil is {f.pencil.n}x{f.pencil.n}")
    BX = f.pencil.apply_B(X)
    Ys = []
    for fac in f.factors:
        with f.ledger.phase("t_solve"):
            Ys.append(lu_solve(fac, BX))
    return Ys


def quadrature_sum(f, Ys, coef):
    """``sum_j w_j Y_j coef(j)``; ``coef(j)`` is a scalar or an L x L matrix."""
    w = f.weights
    terms = []
    for jj, Y in enumerate(Ys):
        c = coef(jj)
        terms.append(w[jj] * (Y @ c if np.ndim(c) == 2 else Y * c))
    return _accumulate(terms, f.half)


def filter_block(f, X):
    """One application of the filtered operator: ``sum_j w_j (z_j B - A)^{-1} B X``."""
    X = as_matrix(X, "V")
    if f.half and np.any(X.imag):
        # conjugate doubling needs a real right-hand side; split by linearity
        return filter_block(f, X.real) + 1j * filter_block(f, X.imag)
    return quadrature_sum(f, solve_points(f, X), lambda jj: 1.0)


def compute_moments(f, V, M, compensated=False):
    """Moments ``S_0..S_M`` from one solve per node.

    ``M = 0`` is accepted for callers that only need ``S_0``.  With the
    half-contour shortcut a complex ``V`` is handled as two real blocks.
    """
    V = as_matrix(V, "V")
    if V.shape[0] != f.pencil.n:
        raise DimensionMismatch(f"V has {V.shape[0]} rows, pencil is {f.pencil.n}x{f.pencil.n}")
    if M < 0:
        raise InsufficientDegree("moment degree must be nonnegative")
    if f.half and np.any(V.imag):
        re = compute_moments(f, V.real, M, compensated)
        im = compute_moments(f, V.imag, M, compensated)
        data = np.asfortranarray(re.data + 1j * im.data)
        return MomentStack(data, V.shape[1], M, f.rule, None)
    L = V.shape[1]
    Ys = solve_points(f, V)
    z, w = f.points, f.weights
    n = f.pencil.n
    data = np.zeros((n, L * (M + 1)), dtype=np.complex128, order="F")
    for k in range(M + 1):
        zk = z ** k
        terms = (w[jj] * zk[jj] * Ys[jj] for jj in range(len(Ys)))
        Sk = _accumulate(terms, f.half, compensated)
        if Sk is not None:
            data[:, k * L:(k + 1) * L] = Sk
    return MomentStack(data, L, M, f.rule, Ys)


def block_moments(Vtilde, stack, upto):
    """``mu_k = Vtilde^H S_k`` for ``k = 0..upto``."""
    if upto > stack.M:
        raise InsufficientDegree(f"need moments up to degree {upto}, stack has {stack.M}")
    Vt = as_matrix(Vtilde, "Vtilde")
    VH = Vt.conj().T
    return [VH @ stack.block(k) for k in range(upto + 1)]


def assemble_hankel(moments, M):
    """Block Hankel pair with ``H[i, j] = mu_{i+j}`` and ``H_shift[i, j] = mu_{i+j+1}``."""
    if len(moments) < 2 * M:
        raise InsufficientDegree(f"block Hankel of order {M} needs {2 * M} moments, got {len(moments)}")
    mus = [np.atleast_2d(np.asarray(m, dtype=np.complex128)) for m in moments]
    H = np.block([[mus[i + j] for j in range(M)] for i in range(M)])
    Hs = np.block([[mus[i + j + 1] for j in range(M)] for i in range(M)])
    return np.asfortranarray(H), np.asfortranarray(Hs)


def refine_subspace(f, V, ell):
    """Apply the filtered operator ``ell - 1`` times, orthonormalising between passes.

    The result seeds :func:`compute_moments`, which performs the ``ell``-th
    application.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    X = as_matrix(V, "V")
    for _ in range(ell - 1):
        X, _ = qr_orthonormalize(filter_block(f, X), check_rank=False)
    return X
