"""Exception hierarchy shared by every module of the package."""


class ContourEigError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(ContourEigError, ValueError):
    pass


class SingularMatrix(ContourEigError):
    def __init__(self, column, pivot=0.0):
        self.column = column
        self.pivot = pivot
        super().__init__(f"pivot {abs(pivot):.3e} below threshold at column {column}")


class RankDeficient(ContourEigError):
    def __init__(self, column, diag=0.0):
        self.column = column
        self.diag = diag
        super().__init__(f"R[{column},{column}] = {abs(diag):.3e} below rank threshold")


class NoConvergence(ContourEigError):
    def __init__(self, message, index=None, residual=None):
        self.index = index
        self.residual = residual
        super().__init__(message)


class SingularReducedB(ContourEigError):
    def __init__(self, rcond):
        self.rcond = rcond
        super().__init__(
            f"reduced B has reciprocal condition {rcond:.3e} < 1e-12; tighten the rank cutoff"
        )


class UnsupportedRule(ContourEigError):
    pass


class PoleCollision(ContourEigError):
    def __init__(self, point, index=None):
        self.point = point
        self.index = index
        where = "" if index is None else f" (sample {index})"
        super().__init__(f"evaluation point {point} coincides with a quadrature node{where}")


class QuadraturePointHitsSpectrum(ContourEigError):
    def __init__(self, j, z):
        self.j = j
        self.z = z
        super().__init__(f"z_{j} = {z} lies on the spectrum: zB - A is singular")


class InsufficientDegree(ContourEigError):
    pass


class RankCollapse(ContourEigError):
    pass


class NotHermitianDefinite(ContourEigError):
    pass


class ArnoldiBreakdown(ContourEigError):
    def __init__(self, step, column):
        self.step = step
        self.column = column
        super().__init__(f"block Arnoldi breakdown at step {step}, column {column}")


class BadSpec(ContourEigError, ValueError):
    pass


class SingularBWithoutTruth(ContourEigError):
    pass


class ConfigError(ContourEigError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.message = message
        self.line = line
        self.field = field
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        prefix = (", ".join(loc) + ": ") if loc else ""
        super().__init__(prefix + message)
