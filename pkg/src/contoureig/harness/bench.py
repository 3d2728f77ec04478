"""Sweep runner producing cost/accuracy rows for every (method, L, M) cell."""

import csv
import io
import sys
from dataclasses import dataclass

import numpy as np

from ..errors import ContourEigError
from ..forge import dense_oracle
from ..solvers import SOLVERS, SolverConfig
from .io import build_problem

CSV_HEADER = ("method", "M", "L", "mhat", "t_lu", "t_solve", "t_other", "t_total",
              "max_res", "min_res", "found", "oracle_match")


@dataclass
class ReportRow:
    method: str
    M: int
    L: int
    mhat: int
    t_lu: float
    t_solve: float
    t_other: float
    t_total: float
    max_res: float
    min_res: float
    found: int
    oracle_match: bool
    error: str = None
    match_error: float = float("nan")
    in_region: int = 0

    def csv_values(self, timing=True):
        def num(x):
            return repr(float(x))
        t = (self.t_lu, self.t_solve, self.t_other, self.t_total) if timing else (0.0,) * 4
        return [self.method, str(self.M), str(self.L), str(self.mhat), *map(num, t),
                num(self.max_res), num(self.min_res), str(self.found),
                "true" if self.oracle_match else "false"]


def match_eigenvalues(reference, computed, tol):
    """Greedy one-to-one matching by distance.

    Returns ``(all_matched, max_error, pairs)`` where ``pairs`` maps
    reference indices to computed indices.
    """
    ref = np.asarray(reference, dtype=np.complex128)
    got = np.asarray(computed, dtype=np.complex128)
    if ref.size == 0:
        return True, 0.0, []
    if got.size == 0:
        return False, float("inf"), []
    D = np.abs(ref[:, None] - got[None, :])
    order = np.argsort(D, axis=None, kind="stable")
    used_r, used_c, pairs = set(), set(), []
    for flat in order:
        i, j = divmod(int(flat), got.size)
        if i in used_r or j in used_c:
            continue
        used_r.add(i)
        used_c.add(j)
        pairs.append((i, j))
        if len(pairs) == min(ref.size, got.size):
            break
    worst = max(D[i, j] for i, j in pairs)
    return len(pairs) == ref.size and worst <= tol, float(worst), pairs


def oracle_values(pencil, region, truth):
    """In-region reference eigenvalues with multiplicity."""
    if truth is not None:
        return np.array(truth.finite_eigenvalues(region), dtype=np.complex128)
    vals = []
    for lam, _, mult in dense_oracle(pencil, region):
        vals.extend([lam] * mult)
    return np.array(vals, dtype=np.complex128)


def evaluate(result, reference, res_tol, match_tol):
    """``(found, max_res, min_res, oracle_match, match_error)`` for one solver result."""
    good = [p for p in result.inside if p.residual <= res_tol]
    res = np.array([p.residual for p in good])
    vals = np.array([p.value for p in good], dtype=np.complex128)
    ok, err, _ = match_eigenvalues(reference, vals, match_tol)
    ok = ok and len(good) == len(reference)
    max_res = float(res.max()) if res.size else float("nan")
    min_res = float(res.min()) if res.size else float("nan")
    return len(good), max_res, min_res, ok, err


def run_cell(pencil, region, truth_values, method, L, M, cfg):
    scfg = SolverConfig(L=L, M=M, N=cfg.N, rank_cutoff=cfg.delta, seed=cfg.seed,
                        method=method, rule_kind=cfg.rule, half_contour=cfg.half_contour)
    try:
        result = SOLVERS[method](pencil, region, scfg)
    except ContourEigError as e:
        nan = float("nan")
        return ReportRow(method, M, L, 0, 0.0, 0.0, 0.0, 0.0, nan, nan, 0, False,
                         error=f"{type(e).__name__}: {e}")
    found, max_res, min_res, ok, err = evaluate(result, truth_values, cfg.res_tol, cfg.match_tol)
    t = result.timing if cfg.timing else {"t_lu": 0.0, "t_solve": 0.0, "t_total": 0.0}
    t_other = t["t_total"] - t["t_lu"] - t["t_solve"]
    return ReportRow(method, M, L, result.mhat, t["t_lu"], t["t_solve"], t_other,
                     t["t_total"], max_res, min_res, found, ok, match_error=err,
                     in_region=len(result.inside))


def run_experiment(cfg, problem=None, log=None):
    """Run every method over every sweep cell; the problem is built once."""
    if not cfg.methods:
        return []
    if problem is None:
        problem = build_problem(cfg.problem, cfg.effective_problem_seed, cfg.conditioning)
    pencil, truth = problem
    reference = oracle_values(pencil, cfg.region, truth)
    rows = []
    for method in cfg.methods:
        for L, M in cfg.sweep:
            row = run_cell(pencil, cfg.region, reference, method, L, M, cfg)
            if log is not None and row.error:
                print(f"{method} L={L} M={M}: {row.error}", file=log)
            rows.append(row)
    if cfg.output:
        write_csv(rows, cfg.output, cfg.timing)
    return rows


def write_csv(rows, dest=None, timing=True):
    """Write rows as CSV to a path or stream; returns the CSV text.

    ``timing=False`` writes zeros in the timing columns, which makes the
    output reproducible bit for bit.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_values(timing))
    text = buf.getvalue()
    if dest is None:
        return text
    if isinstance(dest, str):
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    else:
        dest.write(text)
    return text


def read_csv(path_or_text):
    src = path_or_text
    if "\n" not in src:
        with open(src) as fh:
            src = fh.read()
    rows = list(csv.DictReader(io.StringIO(src)))
    return rows


def print_rows(rows, out=sys.stdout):
    write_csv(rows, out)
