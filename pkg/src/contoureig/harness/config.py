"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored.  Every error carries the line
number and the field name.

Example::

    problem = symmetric:n=500,m=40,inside=-1:1,outside=1.5:5
    region  = ellipse:0,0,1,0.1
    sweep   = 64x1,32x2,16x4,8x8,4x16
    N       = 32
    methods = ss_hankel,ss_rr,ss_arnoldi,ss_beyn
"""

from dataclasses import dataclass, field, fields, replace

from ..errors import ConfigError
from ..quadrature import ContourRegion
from ..solvers import METHODS

DEFAULT_METHODS = ("ss_hankel", "ss_rr", "ss_arnoldi", "ss_beyn")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "symmetric:n=500,m=40,inside=-1:1,outside=1.5:5"
    region: ContourRegion = field(default_factory=lambda: ContourRegion.ellipse(0.0, 1.0, 0.1))
    sweep: tuple = ((64, 1), (32, 2), (16, 4), (8, 8), (4, 16))
    N: int = 32
    methods: tuple = DEFAULT_METHODS
    delta: float = 1e-14
    seed: int = 0
    problem_seed: int = None
    output: str = None
    half_contour: bool = True
    timing: bool = True
    res_tol: float = 1e-6
    match_tol: float = 1e-8
    conditioning: float = 10.0
    rule: str = "trapezoidal"

    def __post_init__(self):
        products = {L * M for L, M in self.sweep}
        if len(products) > 1:
            raise ConfigError(f"sweep must keep L*M fixed, got products {sorted(products)}",
                              field="sweep")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}", field="methods")
        if self.N < 2:
            raise ConfigError("N must be >= 2", field="N")
        if not 0.0 <= self.delta < 1.0:
            raise ConfigError("delta must lie in [0, 1)", field="delta")

    @property
    def effective_problem_seed(self):
        return self.seed if self.problem_seed is None else self.problem_seed


def parse_region(text):
    """``circle:cx,cy,r`` or ``ellipse:cx,cy,a,b``."""
    kind, _, rest = text.strip().partition(":")
    try:
        nums = [float(v) for v in rest.split(",")]
    except ValueError:
        raise ConfigError(f"bad region numbers in {text!r}") from None
    kind = kind.strip().lower()
    try:
        if kind == "circle" and len(nums) == 3:
            return ContourRegion.circle(complex(nums[0], nums[1]), nums[2])
        if kind == "ellipse" and len(nums) == 4:
            return ContourRegion.ellipse(complex(nums[0], nums[1]), nums[2], nums[3])
    except ValueError as e:
        raise ConfigError(str(e)) from None
    raise ConfigError(f"region must be circle:cx,cy,r or ellipse:cx,cy,a,b, got {text!r}")


def format_region(region):
    c = region.center
    if region.kind == "circle":
        return f"circle:{c.real!r},{c.imag!r},{region.semi_major!r}"
    return f"ellipse:{c.real!r},{c.imag!r},{region.semi_major!r},{region.semi_minor!r}"


def parse_sweep(text):
    cells = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        L, sep, M = item.partition("x")
        if not sep:
            raise ConfigError(f"sweep cell {item!r} is not LxM")
        try:
            cells.append((int(L), int(M)))
        except ValueError:
            raise ConfigError(f"sweep cell {item!r} is not LxM") from None
        if cells[-1][0] < 1 or cells[-1][1] < 1:
            raise ConfigError(f"sweep cell {item!r} needs L, M >= 1")
    return tuple(cells)


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text):
    t = text.strip().lower()
    return None if t in ("", "none") else int(t)


def _methods(text):
    return tuple(m.strip() for m in text.split(",") if m.strip())


_PARSERS = {
    "problem": str.strip,
    "region": parse_region,
    "sweep": parse_sweep,
    "N": int,
    "methods": _methods,
    "delta": float,
    "seed": int,
    "problem_seed": _optional_int,
    "output": lambda s: s.strip() or None,
    "half_contour": _bool,
    "timing": _bool,
    "res_tol": float,
    "match_tol": float,
    "conditioning": float,
    "rule": str.strip,
}

FIELDS = tuple(f.name for f in fields(ExperimentConfig))


def parse_value(key, text, line=None):
    if key not in _PARSERS:
        raise ConfigError(f"unknown key {key!r}", line=line, field=key)
    try:
        return _PARSERS[key](text)
    except ConfigError as e:
        raise ConfigError(e.message, line=line, field=key) from None
    except ValueError as e:
        raise ConfigError(str(e), line=line, field=key) from None


def parse_config_text(text):
    """Parse config text into a dict of typed overrides."""
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", line=lineno)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, field=key)
        values[key] = parse_value(key, val, lineno)
        where[key] = lineno
    return values, where


def build_config(values, where=None, base=None):
    where = where or {}
    base = base or ExperimentConfig()
    try:
        return replace(base, **values)
    except ConfigError as e:
        raise ConfigError(e.message, line=where.get(e.field), field=e.field) from None


def load_config(path, overrides=None):
    with open(path) as fh:
        text = fh.read()
    values, where = parse_config_text(text)
    if overrides:
        values.update(overrides)
    return build_config(values, where)


def dump_config(cfg):
    lines = [
        f"problem = {cfg.problem}",
        f"region = {format_region(cfg.region)}",
        "sweep = " + ",".join(f"{L}x{M}" for L, M in cfg.sweep),
        f"N = {cfg.N}",
        "methods = " + ",".join(cfg.methods),
        f"delta = {cfg.delta!r}",
        f"seed = {cfg.seed}",
        f"problem_seed = {'none' if cfg.problem_seed is None else cfg.problem_seed}",
        f"half_contour = {str(cfg.half_contour).lower()}",
        f"timing = {str(cfg.timing).lower()}",
        f"res_tol = {cfg.res_tol!r}",
        f"match_tol = {cfg.match_tol!r}",
        f"conditioning = {cfg.conditioning!r}",
        f"rule = {cfg.rule}",
    ]
    if cfg.output:
        lines.append(f"output = {cfg.output}")
    return "\n".join(lines) + "\n"
