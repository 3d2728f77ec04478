"""Problem files and problem descriptors.

File layout (plain text, one complex entry ``re im`` per line, row-major)::

    contoureig-problem 1
    n 3
    flags hermitian_A=0 hpd_B=0 b_is_identity=1
    A
    0.5 0.0
    ...
    B
    ...
    truth (0.5,0.0,1),(3.0,0.0,1)     # optional, followed by Q, Q_tilde, P_tilde
"""

import numpy as np

from ..errors import BadSpec, ConfigError
from ..forge import (GroundTruth, gen_symmetric_dense, gen_weierstrass, is_infinite, parse_spec,
                     format_spec)
from ..moments import MatrixPencil

MAGIC = "contoureig-problem 1"


def _write_matrix(fh, name, M):
    fh.write(f"{name}\n")
    for v in np.asarray(M, dtype=np.complex128).ravel(order="C"):
        fh.write(f"{float(v.real)!r} {float(v.imag)!r}\n")


def write_problem(path_or_fh, pencil, truth=None):
    own = isinstance(path_or_fh, str)
    fh = open(path_or_fh, "w") if own else path_or_fh
    try:
        n = pencil.n
        fh.write(MAGIC + "\n")
        fh.write(f"n {n}\n")
        fh.write(f"flags hermitian_A={int(pencil.hermitian_A)} hpd_B={int(pencil.hpd_B)} "
                 f"b_is_identity={int(pencil.b_is_identity)}\n")
        _write_matrix(fh, "A", pencil.A)
        _write_matrix(fh, "B", pencil.B)
        if truth is not None:
            fh.write(f"truth {format_spec(truth.jordan)}\n")
            _write_matrix(fh, "Q", truth.Q)
            _write_matrix(fh, "Q_tilde", truth.Q_tilde)
            _write_matrix(fh, "P_tilde", truth.P_tilde)
    finally:
        if own:
            fh.close()


def _read_matrix(lines, pos, name, n):
    if pos >= len(lines) or lines[pos].strip() != name:
        raise ConfigError(f"expected section {name!r}", line=pos + 1)
    vals = np.empty(n * n, dtype=np.complex128)
    for k in range(n * n):
        ln = pos + 1 + k
        try:
            re_, im_ = lines[ln].split()
            vals[k] = complex(float(re_), float(im_))
        except (ValueError, IndexError):
            raise ConfigError(f"bad entry in section {name}", line=ln + 1) from None
    return vals.reshape(n, n), pos + 1 + n * n


def read_problem(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ConfigError("not a problem file (bad header)", line=1)
    try:
        n = int(lines[1].split()[1])
        flags = dict(kv.split("=") for kv in lines[2].split()[1:])
    except (IndexError, ValueError):
        raise ConfigError("bad dimension or flags line", line=2) from None
    A, pos = _read_matrix(lines, 3, "A", n)
    B, pos = _read_matrix(lines, pos, "B", n)
    if flags.get("b_is_identity") == "1":
        pencil = MatrixPencil(A)
    else:
        pencil = MatrixPencil(A, B, hermitian_A=flags.get("hermitian_A") == "1",
                              hpd_B=flags.get("hpd_B") == "1")
    truth = None
    if pos < len(lines) and lines[pos].startswith("truth"):
        spec = parse_spec(lines[pos][len("truth"):].strip())
        Q, pos = _read_matrix(lines, pos + 1, "Q", n)
        Qt, pos = _read_matrix(lines, pos, "Q_tilde", n)
        Pt, pos = _read_matrix(lines, pos, "P_tilde", n)
        pairs, i = [], 0
        for lam, s in spec.blocks:
            if not is_infinite(lam):
                pairs.append((lam, s, Q[:, i:i + s].copy()))
            i += s
        truth = GroundTruth(Q, Qt, Pt, spec, pairs)
    return pencil, truth


def _kv(text):
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        k, sep, v = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value in problem parameters, got {item!r}",
                              field="problem")
        out[k.strip()] = v.strip()
    return out


def _interval(text):
    a, _, b = text.partition(":")
    return float(a), float(b)


def build_problem(descriptor, seed=0, conditioning=10.0):
    """Resolve a problem descriptor into ``(pencil, truth_or_None)``.

    ``symmetric:n=..,m=..,inside=a:b,outside=a:b[,cond_B=..]``,
    ``jordan:<block list>`` or ``file:<path>``.
    """
    kind, _, rest = descriptor.strip().partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "symmetric":
            p = _kv(rest)
            return gen_symmetric_dense(
                int(p.get("n", 500)), int(p.get("m", 40)),
                _interval(p.get("inside", "-1:1")), _interval(p.get("outside", "1.5:5")),
                seed=seed, cond_B=float(p.get("cond_B", 10.0)))
        if kind == "jordan":
            spec = parse_spec(rest.strip().strip('"').strip("'"), conditioning)
            return gen_weierstrass(spec, seed)
        if kind == "file":
            return read_problem(rest.strip())
    except (BadSpec, ValueError) as e:
        raise ConfigError(str(e), field="problem") from None
    except OSError as e:
        raise ConfigError(f"cannot read problem file: {e}", field="problem") from None
    raise ConfigError(f"unknown problem kind {kind!r} (symmetric, jordan or file)", field="problem")
