"""Test pencils with known spectral structure, and a dense reference solver.

Pencils are assembled from a Weierstrass form,
``Pt^H (z B - A) Q = diag(z I - J(lambda_i), ..., z J(0) - I, ...)``,
with random transforms of controlled condition number.  The transforms are
drawn with numpy so that the generated truth is independent of the
package's own dense kernels.
"""

import re
from dataclasses import dataclass, field

import numpy as np

from .dense import eig_dense, lu_factor, lu_solve
from .errors import BadSpec, SingularBWithoutTruth, SingularMatrix
from .moments import MatrixPencil


class _Infinite:
    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return "INFINITE"


INFINITE = _Infinite()


def is_infinite(lam):
    return lam is INFINITE


@dataclass(frozen=True)
class JordanSpec:
    """Ordered Jordan blocks ``(eigenvalue, size)``; eigenvalue may be INFINITE."""

    blocks: tuple
    conditioning: float = 10.0

    def __post_init__(self):
        blocks = []
        for entry in self.blocks:
            try:
                lam, size = entry
            except (TypeError, ValueError):
                raise BadSpec(f"block {entry!r} is not an (eigenvalue, size) pair") from None
            if int(size) != size or size < 1:
                raise BadSpec(f"block size must be a positive integer, got {size!r}")
            if not is_infinite(lam):
                lam = complex(lam)
                if not np.isfinite(lam):
                    raise BadSpec("finite blocks need a finite eigenvalue; use INFINITE")
            blocks.append((lam, int(size)))
        if not blocks:
            raise BadSpec("a Jordan spec needs at least one block")
        if not self.conditioning >= 1.0:
            raise BadSpec("conditioning must be >= 1")
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def n(self):
        return sum(s for _, s in self.blocks)

    @property
    def eta(self):
        sizes = [s for lam, s in self.blocks if is_infinite(lam)]
        return max(sizes) if sizes else 1

    @property
    def r(self):
        return sum(s for lam, s in self.blocks if not is_infinite(lam))

    @property
    def infinite_block_count(self):
        return sum(1 for lam, _ in self.blocks if is_infinite(lam))

    def finite_blocks(self):
        return [(lam, s) for lam, s in self.blocks if not is_infinite(lam)]

    def to_text(self):
        return format_spec(self)


_BLOCK_RE = re.compile(r"\(\s*([^,()]+)\s*,\s*([^,()]+)\s*,\s*([^,()]+)\s*\)|INF\s*,\s*(\d+)", re.I)


def parse_spec(text, conditioning=10.0):
    """Parse ``"(0.3,0,2),(0.5,0,1),INF,2"`` into a :class:`JordanSpec`."""
    text = text.strip()
    blocks = []
    pos = 0
    for m in _BLOCK_RE.finditer(text):
        gap = text[pos:m.start()].strip().strip(",;").strip()
        if gap:
            raise BadSpec(f"cannot parse {gap!r} in Jordan spec")
        pos = m.end()
        if m.group(4) is not None:
            blocks.append((INFINITE, int(m.group(4))))
            continue
        try:
            lam = complex(float(m.group(1)), float(m.group(2)))
            size = int(m.group(3))
        except ValueError:
            raise BadSpec(f"bad block {m.group(0)!r}") from None
        blocks.append((lam, size))
    if text[pos:].strip().strip(",;").strip():
        raise BadSpec(f"cannot parse {text[pos:]!r} in Jordan spec")
    return JordanSpec(tuple(blocks), conditioning)


def format_spec(spec):
    parts = []
    for lam, s in spec.blocks:
        if is_infinite(lam):
            parts.append(f"INF,{s}")
        else:
            parts.append(f"({lam.real!r},{lam.imag!r},{s})")
    return ",".join(parts)


def jordan_block(lam, size):
    J = np.diag(np.full(size, complex(lam)))
    if size > 1:
        J += np.diag(np.ones(size - 1), 1)
    return J


def canonical_pair(spec):
    """``(K_A, K_B)`` with ``z K_B - K_A`` the Weierstrass form of ``spec``."""
    n = spec.n
    KA = np.zeros((n, n), dtype=np.complex128)
    KB = np.zeros((n, n), dtype=np.complex128)
    i = 0
    for lam, s in spec.blocks:
        sl = slice(i, i + s)
        if is_infinite(lam):
            KA[sl, sl] = np.eye(s)
            KB[sl, sl] = jordan_block(0.0, s)
        else:
            KA[sl, sl] = jordan_block(lam, s)
            KB[sl, sl] = np.eye(s)
        i += s
    return KA, KB


@dataclass(frozen=True)
class GroundTruth:
    Q: np.ndarray
    Q_tilde: np.ndarray
    P_tilde: np.ndarray
    jordan: JordanSpec
    finite_pairs: list = field(default_factory=list)

    @property
    def eta(self):
        return self.jordan.eta

    def finite_columns(self):
        cols, i = [], 0
        for lam, s in self.jordan.blocks:
            if not is_infinite(lam):
                cols.extend(range(i, i + s))
            i += s
        return np.array(cols, dtype=int)

    def filtered_operator(self, region=None):
        """``C = Q_F J_F Qt_F^H`` over the finite blocks (or those inside ``region``)."""
        cols, Js, i = [], [], 0
        for lam, s in self.jordan.blocks:
            if not is_infinite(lam) and (region is None or region.contains(lam)):
                cols.extend(range(i, i + s))
                Js.append(jordan_block(lam, s))
            i += s
        n = self.Q.shape[0]
        if not cols:
            return np.zeros((n, n), dtype=np.complex128)
        J = _block_diag(Js)
        Qf = self.Q[:, cols]
        Qtf = self.Q_tilde[:, cols]
        return Qf @ J @ Qtf.conj().T

    def spectral_projector(self, region):
        """``Q_Omega Qt_Omega^H``: the exact contour integral of ``(zB-A)^{-1} B``."""
        cols, i = [], 0
        for lam, s in self.jordan.blocks:
            if not is_infinite(lam) and region.contains(lam):
                cols.extend(range(i, i + s))
            i += s
        return self.Q[:, cols] @ self.Q_tilde[:, cols].conj().T

    def finite_eigenvalues(self, region=None):
        out = []
        for lam, s in self.jordan.blocks:
            if not is_infinite(lam) and (region is None or region.contains(lam)):
                out.extend([lam] * s)
        return out


def _block_diag(blocks):
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=np.complex128)
    i = 0
    for b in blocks:
        s = b.shape[0]
        out[i:i + s, i:i + s] = b
        i += s
    return out


def _random_unitary(rng, n, real):
    G = rng.standard_normal((n, n))
    if not real:
        G = G + 1j * rng.standard_normal((n, n))
    Qm, R = np.linalg.qr(G)
    d = np.diag(R)
    return Qm * (d / np.abs(d))


def _scalings(rng, n, cond):
    # log-uniform in [1, cond] with both endpoints hit so cond(Q) == cond
    if n == 1 or cond == 1.0:
        return np.ones(n)
    s = np.exp(rng.uniform(0.0, np.log(cond), n))
    s[0], s[-1] = 1.0, cond
    return s


def _conditioned(rng, n, cond, real):
    """Random ``U diag(s) W^H`` together with its exact inverse."""
    U = _random_unitary(rng, n, real)
    W = _random_unitary(rng, n, real)
    s = _scalings(rng, n, cond)
    M = (U * s) @ W.conj().T
    Minv = (W / s) @ U.conj().T
    return M, Minv


def gen_weierstrass(spec, seed=0, identity=False, real=False):
    """Pencil with the Weierstrass structure ``spec``.

    With no infinite blocks the left transform is tied to the right one, so
    ``B`` is exactly the identity and ``A = Q J Q^{-1}``.  ``identity=True``
    skips the random transforms altogether.
    """
    if not isinstance(spec, JordanSpec):
        spec = JordanSpec(tuple(spec))
    if real and any(not is_infinite(lam) and lam.imag != 0 for lam, _ in spec.blocks):
        raise BadSpec("real=True needs real eigenvalues")
    n = spec.n
    rng = np.random.default_rng(seed)
    KA, KB = canonical_pair(spec)
    has_inf = spec.infinite_block_count > 0
    # P plays the role of Pt^{-H}, so A = P K_A Q^{-1} and B = P K_B Q^{-1}
    if identity:
        Q = np.eye(n, dtype=np.complex128)
        Qinv = P = Pinv = Q
    else:
        Q, Qinv = _conditioned(rng, n, spec.conditioning, real)
        if has_inf:
            P, Pinv = _conditioned(rng, n, spec.conditioning, real)
        else:
            P, Pinv = Q, Qinv
    Pt = Pinv.conj().T
    A = P @ KA @ Qinv
    if has_inf:
        pencil = MatrixPencil(A, P @ KB @ Qinv)
    else:
        pencil = MatrixPencil(A)
    Q_tilde = Qinv.conj().T
    pairs, i = [], 0
    for lam, s in spec.blocks:
        if not is_infinite(lam):
            pairs.append((lam, s, Q[:, i:i + s].copy()))
        i += s
    truth = GroundTruth(np.asarray(Q, dtype=np.complex128), np.asarray(Q_tilde, dtype=np.complex128),
                        np.asarray(Pt, dtype=np.complex128), spec, pairs)
    return pencil, truth


def gen_symmetric_dense(n, m, inside_interval=(-1.0, 1.0), outside_spread=(1.5, 5.0),
                        seed=0, cond_B=10.0):
    """Real symmetric ``A`` and SPD ``B`` with prescribed real spectrum of ``B^{-1} A``.

    ``m`` eigenvalues are uniform in ``inside_interval``; the rest are uniform
    in ``+-outside_spread`` with random signs.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise BadSpec("n must be a positive integer")
    if not 0 <= m <= n:
        raise BadSpec(f"inside count m={m} must lie in [0, n={n}]")
    lo, hi = inside_interval
    olo, ohi = outside_spread
    if not lo < hi or not 0 < olo < ohi:
        raise BadSpec("bad eigenvalue intervals")
    if not cond_B >= 1.0:
        raise BadSpec("cond_B must be >= 1")
    rng = np.random.default_rng(seed)
    lam_in = rng.uniform(lo, hi, m)
    lam_out = rng.uniform(olo, ohi, n - m) * rng.choice([-1.0, 1.0], n - m)
    lam = np.concatenate([np.sort(lam_in), lam_out])
    return _symmetric_pencil(lam, rng, cond_B)


def gen_symmetric_from_spectrum(eigenvalues, seed=0, cond_B=10.0):
    """Real symmetric-definite pencil whose eigenvalues are exactly ``eigenvalues``."""
    lam = np.asarray(eigenvalues, dtype=np.float64).ravel()
    if lam.size == 0 or not np.all(np.isfinite(lam)):
        raise BadSpec("need a nonempty list of finite real eigenvalues")
    if not cond_B >= 1.0:
        raise BadSpec("cond_B must be >= 1")
    return _symmetric_pencil(lam, np.random.default_rng(seed), cond_B)


def _symmetric_pencil(lam, rng, cond_B):
    n = lam.size
    # B = R^T R with R = diag(s) W; A = G^T diag(lam) G with G = X R
    W = _random_unitary(rng, n, True)
    X = _random_unitary(rng, n, True)
    s = _scalings(rng, n, np.sqrt(cond_B))
    R = s[:, None] * W
    G = X @ R
    B = R.T @ R
    A = (G.T * lam) @ G
    A = (A + A.T) / 2
    B = (B + B.T) / 2
    pencil = MatrixPencil(A, B, hermitian_A=True, hpd_B=True)
    # Q = G^{-1} = W^T diag(1/s) X^T, Qt^H = G
    Q = (W.T / s) @ X.T
    Q_tilde = G.T
    spec = JordanSpec(tuple((complex(v), 1) for v in lam), float(cond_B))
    pairs = [(complex(v), 1, Q[:, [i]].astype(np.complex128)) for i, v in enumerate(lam)]
    truth = GroundTruth(Q.astype(np.complex128), Q_tilde.astype(np.complex128),
                        Q.astype(np.complex128), spec, pairs)
    return pencil, truth


def _cluster(values, tol):
    """Single-linkage clusters of complex values; returns index groups."""
    groups = []
    for i, v in enumerate(values):
        hit = [g for g in groups if min(abs(values[j] - v) for j in g) <= tol]
        if not hit:
            groups.append([i])
            continue
        merged = [i]
        for g in hit:
            merged.extend(g)
            groups.remove(g)
        groups.append(sorted(merged))
    return sorted(groups, key=lambda g: (values[g[0]].real, values[g[0]].imag))


def dense_oracle(pencil, region, truth=None, cluster_tol=1e-6):
    """Reference in-region eigenvalues ``(lambda, x, multiplicity)``.

    Uses a dense eigensolve of ``B^{-1} A`` when ``B`` is nonsingular and the
    ground truth otherwise.  Defective eigenvalues are split by
    O(sqrt(eps)) in floating point, hence the default ``cluster_tol``.
    """
    singular = False
    try:
        fB = lu_factor(pencil.B)
        if fB.rcond < 1e-13:
            singular = True
    except SingularMatrix:
        singular = True
    if singular:
        if truth is None:
            raise SingularBWithoutTruth("B is singular and no ground truth is attached")
        return [(lam, cols[:, 0] / np.linalg.norm(cols[:, 0]), s)
                for lam, s, cols in truth.finite_pairs if region.contains(lam)]
    C = pencil.A if pencil.b_is_identity else lu_solve(fB, pencil.A)
    pairs = eig_dense(C, select=region.contains)
    inside = [(lam, x) for lam, x in pairs if x is not None]
    if not inside:
        return []
    vals = np.array([lam for lam, _ in inside])
    out = []
    for g in _cluster(vals, cluster_tol):
        lam = complex(np.mean(vals[g]))
        out.append((lam, inside[g[0]][1], len(g)))
    return out
