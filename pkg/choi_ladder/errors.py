"""Exception hierarchy for choi-ladder."""


class ChoiLadderError(Exception):
    """Base class for all errors raised by choi-ladder."""


class NonSquareError(ChoiLadderError, ValueError):
    def __init__(self, shape: tuple[int, ...]):
        self.shape = shape
        super().__init__(f"Matrix must be square, got shape {shape}")


class NotHermitianError(ChoiLadderError, ValueError):
    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"Matrix is not Hermitian: max |A - A^*| = {deviation:.3e} exceeds {tol:.3e}"
        )


class NoConvergenceError(ChoiLadderError, ArithmeticError):
    def __init__(self, sweeps: int, off_diagonal: float):
        self.sweeps = sweeps
        self.off_diagonal = off_diagonal
        super().__init__(
            f"Jacobi iteration did not converge in {sweeps} sweeps "
            f"(off-diagonal mass {off_diagonal:.3e})"
        )


class DimensionOverflowError(ChoiLadderError, ValueError):
    def __init__(self, dimension: int, cap: int):
        self.dimension = dimension
        self.cap = cap
        super().__init__(f"Product dimension {dimension} exceeds the cap {cap}")


class DimensionMismatchError(ChoiLadderError, ValueError):
    """Operand dimensions are inconsistent."""


class NonFiniteError(ChoiLadderError, ValueError):
    """Matrix entries contain NaN or infinity."""


class TruncationTooLargeError(ChoiLadderError, ValueError):
    def __init__(self, n: int, dim: int):
        self.n = n
        self.dim = dim
        super().__init__(f"Truncation level {n} is outside 1..{dim}")


class InvalidExponentError(ChoiLadderError, ValueError):
    def __init__(self, p: object):
        self.p = p
        super().__init__(f"Schatten exponent must be >= 1 or infinity, got {p!r}")


class TailFormulaViolationError(ChoiLadderError, ArithmeticError):
    def __init__(self, direct: float, formula: float):
        self.direct = direct
        self.formula = formula
        super().__init__(
            f"Residual norm {direct!r} disagrees with singular value tail {formula!r}"
        )


class NotPSDError(ChoiLadderError, ValueError):
    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"Matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.6g}"
        )


class OracleLevelUnsupportedError(ChoiLadderError, ValueError):
    def __init__(self, level: int, supported: int):
        self.level = level
        self.supported = supported
        super().__init__(f"Level {level} is not supported (maximum {supported})")


class InvalidDilationError(ChoiLadderError, ValueError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        message = f"Invalid dilation: {invariant}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


class UnknownBuiltinError(ChoiLadderError, KeyError):
    def __init__(self, name: str, known: list[str]):
        self.name = name
        self.known = known
        super().__init__(f"Unknown builtin {name!r}; known: {', '.join(known)}")

    def __str__(self) -> str:
        return self.args[0]


class BadParamsError(ChoiLadderError, ValueError):
    """Builtin parameters are missing, unknown or out of range."""


class ParseError(ChoiLadderError, ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"ParseError at {path}: {message}")
