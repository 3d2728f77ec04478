"""Numerical checks of the theory behind the solvers.

(a) weight condition of the quadrature rules
(b) moment recurrence ``S_k = C S_{k-1}`` on Jordan and singular-B pencils
(c) rank of the moment matrix and containment of the target eigenvectors
(d) block Arnoldi and block Beyn give the same Ritz values
(e) FEAST residual contraction against the filter ratio
(f) decay bound with the polynomial factor on a defective pencil
"""

from dataclasses import dataclass, field

import numpy as np

from ..dense import qr_orthonormalize, svd
from ..forge import JordanSpec, gen_symmetric_from_spectrum, gen_weierstrass, parse_spec
from ..moments import compute_moments, factorize_points, filter_block, refine_subspace
from ..quadrature import ContourRegion, build_rule, check_weight_condition, filter_eval
from ..solvers import SolverConfig, solve_feast, solve_ss_arnoldi, solve_ss_beyn
from .bench import match_eigenvalues


@dataclass(frozen=True)
class VerifyConfig:
    seeds: tuple = (1, 2, 3)
    N: int = 32
    jordan_spec: str = "(0.3,0,2),(0.5,0,1),INF,2"
    # radius 0.6 keeps |z|^k growth mild against the 0.5^k decay of S_k
    recurrence_radius: float = 0.6
    recurrence_tol: float = 1e-9
    zero_weight: int = None
    rank_tol: float = 1e-8
    equivalence_tol: float = 1e-8
    slack: float = 2.0


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    skipped: bool = False
    data: dict = field(default_factory=dict)


@dataclass
class VerifyReport:
    checks: list

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    def lines(self):
        out = []
        for c in self.checks:
            status = "SKIP" if c.skipped else ("PASS" if c.passed else "FAIL")
            out.append(f"[{status}] {c.name}: {c.detail}")
        return out

    def text(self):
        return "\n".join(self.lines()) + "\n"


def _rule(cfg, region, N=None):
    rule = build_rule(region, "trapezoidal", N or cfg.N)
    if cfg.zero_weight is not None:
        w = rule.weights.copy()
        w[cfg.zero_weight % rule.N] = 0.0
        rule = rule.with_weights(w)
    return rule


def check_weight_condition_suite(cfg):
    regions = [ContourRegion.circle(0, 1), ContourRegion.circle(0, cfg.recurrence_radius),
               ContourRegion.ellipse(0, 1, 0.1)]
    bad = []
    for region in regions:
        for N in (4, 8, 16, 32, 64):
            rep = check_weight_condition(_rule(cfg, region, N), 1e-11 * N)
            if not rep.passes:
                bad.append(f"{region.kind} N={N} (k={rep.max_violation_k})")
    if bad:
        return CheckResult("weight_condition", False, "violated for " + ", ".join(bad))
    return CheckResult("weight_condition", True, "all rules pass at tol 1e-11*N")


def moment_recurrence_errors(pencil, truth, rule, L, seed, kmax):
    """Relative errors ``||S_k - C S_{k-1}|| / ||S_k||`` for ``k = 1..kmax``."""
    f = factorize_points(pencil, rule)
    V = np.random.default_rng(seed).standard_normal((pencil.n, L))
    stack = compute_moments(f, V, kmax)
    C = truth.filtered_operator()
    errs = []
    for k in range(1, kmax + 1):
        Sk = stack.block(k)
        errs.append(float(np.linalg.norm(Sk - C @ stack.block(k - 1), 2) / np.linalg.norm(Sk, 2)))
    return errs


def check_moment_recurrence(cfg):
    spec = parse_spec(cfg.jordan_spec)
    N = cfg.N
    kmax = N - spec.eta
    if kmax < 1:
        return CheckResult("moment_recurrence", False, f"empty range: N={N}, eta={spec.eta}")
    region = ContourRegion.circle(0, cfg.recurrence_radius)
    rule = _rule(cfg, region, N)
    worst, beyond = 0.0, []
    for seed in cfg.seeds:
        pencil, truth = gen_weierstrass(spec, seed)
        errs = moment_recurrence_errors(pencil, truth, rule, 2, seed, kmax + 1)
        worst = max(worst, max(errs[:kmax]))
        beyond.append(errs[kmax])
    ok = worst <= cfg.recurrence_tol
    detail = (f"k = 1..{kmax} (N - eta, eta = {spec.eta}): max rel. error {worst:.2e}; "
              f"at k = {kmax + 1}: {max(beyond):.2e} (reported only)")
    return CheckResult("moment_recurrence", ok, detail,
                       data={"kmax": kmax, "worst": worst, "beyond": beyond})


def check_rank_span(cfg):
    worst_res, ranks = 0.0, []
    ok = True
    region = ContourRegion.circle(0, 1)
    rule = _rule(cfg, region, 64)
    for seed in cfg.seeds:
        rng = np.random.default_rng(seed)
        m = 5
        inside = 0.7 * np.sqrt(rng.uniform(0, 1, m)) * np.exp(2j * np.pi * rng.uniform(0, 1, m))
        outside = rng.uniform(3, 6, 55) * np.exp(2j * np.pi * rng.uniform(0, 1, 55))
        spec = JordanSpec(tuple((v, 1) for v in np.concatenate([inside, outside])))
        pencil, truth = gen_weierstrass(spec, seed)
        f = factorize_points(pencil, rule)
        V = rng.standard_normal((pencil.n, 4))
        S = compute_moments(f, V, 2).S(2)
        res = svd(S)
        rank = res.rank(1e-10)
        U = res.U[:, :rank]
        X = truth.Q[:, :m] / np.linalg.norm(truth.Q[:, :m], axis=0)
        proj = float(np.linalg.norm(X - U @ (U.conj().T @ X), axis=0).max())
        ranks.append(rank)
        worst_res = max(worst_res, proj)
        ok = ok and rank == m and proj <= cfg.rank_tol
    detail = f"rank(S) = {ranks} with m = 5; eigenvector projection residual {worst_res:.2e}"
    return CheckResult("rank_span", ok, detail)


def random_diagonalizable(seed, n=60, m_max=8, r_in=0.8, r_out=(1.1, 2.5)):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, m_max + 1))
    inside = r_in * np.sqrt(rng.uniform(0, 1, m)) * np.exp(2j * np.pi * rng.uniform(0, 1, m))
    outside = rng.uniform(*r_out, n - m) * np.exp(2j * np.pi * rng.uniform(0, 1, n - m))
    spec = JordanSpec(tuple((v, 1) for v in np.concatenate([inside, outside])))
    return gen_weierstrass(spec, seed)


def check_arnoldi_beyn(cfg, n=60):
    region = ContourRegion.circle(0, 1)
    worst = 0.0
    ok = True
    for seed in cfg.seeds:
        pencil, _ = random_diagonalizable(seed, n)
        sc = SolverConfig(L=4, M=3, N=cfg.N, rank_cutoff=0.0, seed=seed)
        a = solve_ss_arnoldi(pencil, region, sc).eigenvalues
        b = solve_ss_beyn(pencil, region, sc).eigenvalues
        matched, err, _ = match_eigenvalues(a, b, cfg.equivalence_tol)
        ok = ok and matched and a.size == b.size
        worst = max(worst, err)
    return CheckResult("arnoldi_beyn_equivalence", ok,
                       f"max Ritz value gap {worst:.2e} (tol {cfg.equivalence_tol:.0e})")


def feast_contraction(seed, N=16, ratio=0.1, iters=8):
    """Measured and predicted per-iteration residual contraction of FEAST."""
    region = ContourRegion.circle(0, 1)
    rule = build_rule(region, "trapezoidal", N)
    x = ((1 - ratio) / ratio) ** (1.0 / N)
    rng = np.random.default_rng(seed)
    inside = rng.uniform(-0.5, 0.5, 4)
    far = rng.uniform(3, 6, 36) * rng.choice([-1.0, 1.0], 36)
    pencil, _ = gen_symmetric_from_spectrum(np.concatenate([inside, [x], far]), seed)
    predicted = abs(filter_eval(rule, x)) / min(abs(filter_eval(rule, v)) for v in inside)
    res = solve_feast(pencil, region, SolverConfig(L=4, M=1, N=N, method="feast", seed=seed,
                                                   max_feast_iters=iters, feast_tol=0.0))
    h = np.array(res.history)
    # contraction factors over iterations 2..6
    measured = float(np.mean(h[1:6] / h[0:5]))
    return measured, predicted, h


def check_feast_slope(cfg):
    ok, parts = True, []
    for seed in cfg.seeds:
        measured, r, _ = feast_contraction(seed)
        ok = ok and r / 3 <= measured <= 3 * r
        parts.append(f"{measured:.3f}/{r:.3f}")
    return CheckResult("feast_contraction", ok,
                       "measured/predicted contraction " + ", ".join(parts))


def jordan_decay(seed, N=16, ratio=0.3, ells=range(1, 7)):
    """Subspace error against the defective-case bound for each ``ell``.

    Returns the margins ``log(err) - log(bound)`` (without slack) per ``ell``.
    """
    region = ContourRegion.circle(0, 1)
    rule = build_rule(region, "trapezoidal", N)
    x = ((1 - ratio) / ratio) ** (1.0 / N)
    inside = [0.2, -0.3 + 0.2j, 0.1 - 0.4j]
    blocks = [(v, 1) for v in inside] + [(x, 2)] + \
        [(3.0 * np.exp(2j * np.pi * k / 7), 1) for k in range(7)]
    spec = JordanSpec(tuple(blocks))
    eta = max(s for _, s in spec.blocks)
    pencil, truth = gen_weierstrass(spec, seed)
    f = factorize_points(pencil, rule)
    m = len(inside)
    V = np.random.default_rng(seed).standard_normal((pencil.n, m)) + 0j
    Xin, Xt_in = truth.Q[:, :m], truth.Q_tilde[:, :m]
    cols = truth.finite_columns()
    alpha = 2 * np.linalg.norm(truth.Q[:, cols], 2) * np.linalg.norm(truth.Q_tilde[:, cols], 2)
    # s_i in span(V) with the in-region spectral projection of s_i equal to x_i
    S = V @ np.linalg.solve(Xt_in.conj().T @ V, np.eye(m))
    beta = np.linalg.norm(Xin - S, axis=0)
    f_in = np.array([abs(filter_eval(rule, v)) for v in inside])
    ratios = abs(filter_eval(rule, x)) / f_in
    margins = []
    for ell in ells:
        P, _ = qr_orthonormalize(filter_block(f, refine_subspace(f, V, ell)), check_rank=False)
        err = np.linalg.norm(Xin - P @ (P.conj().T @ Xin), axis=0)
        log_bound = np.log(alpha * beta) + (eta - 1) * np.log(ell) + ell * np.log(ratios)
        margins.append(float(np.max(np.log(err) - log_bound)))
    return margins


def check_jordan_slope(cfg):
    worst = -np.inf
    for seed in cfg.seeds:
        worst = max(worst, max(jordan_decay(seed)))
    ok = worst <= cfg.slack
    return CheckResult("jordan_decay_bound", ok,
                       f"max log(err / bound) = {worst:.2f} (slack {cfg.slack})")


def verify_suite(cfg=None):
    cfg = cfg or VerifyConfig()
    first = check_weight_condition_suite(cfg)
    checks = [first]
    rest = [("moment_recurrence", check_moment_recurrence), ("rank_span", check_rank_span),
            ("arnoldi_beyn_equivalence", check_arnoldi_beyn),
            ("feast_contraction", check_feast_slope), ("jordan_decay_bound", check_jordan_slope)]
    for name, fn in rest:
        if not first.passed:
            checks.append(CheckResult(name, False, "skipped: quadrature rule is invalid",
                                      skipped=True))
            continue
        checks.append(fn(cfg))
    return VerifyReport(checks)
