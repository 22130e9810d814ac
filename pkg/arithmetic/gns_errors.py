from typing import Optional


class GnsError(ValueError):
    pass


class NotMonic(GnsError):
    pass


class RationalRootFound(GnsError):
    def __init__(self, root):
        super().__init__(f"minimal polynomial has the rational root {root}")
        self.root = root


class EnclosureFailure(GnsError):
    """Roots or values could not be certified at the precision cap."""

    def __init__(self, message: str, bits: Optional[int] = None):
        super().__init__(message)
        self.bits = bits


class NotDivisible(GnsError):
    pass


class ZeroModulus(GnsError):
    pass


class NotTiling(GnsError):
    def __init__(self, point, matches):
        super().__init__(f"point {point} has {len(matches)} lattice translates in the domain: {matches}")
        self.point = point
        self.matches = matches


class UnsupportedDomain(GnsError):
    pass


class DegenerateModulus(GnsError):
    pass


class StepCapExceeded(GnsError):
    def __init__(self, step_cap: int):
        super().__init__(f"expansion did not terminate or revisit a state within {step_cap} steps")
        self.step_cap = step_cap


class TooLarge(GnsError):
    pass


class NotApplicable(GnsError):
    pass


class ConfigParseError(GnsError):
    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None, token: Optional[str] = None
    ):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.message = message
        self.line = line
        self.column = column
        self.token = token


class InternalError(GnsError):
    pass
