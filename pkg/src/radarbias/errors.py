"""Exception types shared across the toolkit."""


class ZeroVector(ValueError):
    """Cartesian-to-spherical conversion of the zero vector."""


class SingularGeometry(ValueError):
    """Sensor geometry makes the measurement matrix singular.

    Raised when the sensor-target distance is (near) zero or the elevation
    is (near) +-pi/2, where the spherical increment map loses rank.
    """

    def __init__(self, label: str, detail: str = ""):
        self.label = label
        msg = f"singular geometry: {label}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SingularSystem(ValueError):
    """The combined reduction matrix of the bias solver is not invertible."""


class DimensionMismatch(ValueError):
    """Filter model or state arrays have inconsistent shapes."""


class SingularInnovation(ValueError):
    """The innovation-covariance bracket of the gain equation is singular."""


class DegenerateDenominator(ValueError):
    """A closed-form steady-state covariance denominator vanishes."""


class NoValidRoot(ValueError):
    """No real root of the gain cubic passes validation."""

    def __init__(self, msg: str, roots=()):
        self.roots = tuple(roots)
        if roots:
            msg += f" (roots found: {', '.join(format(r, '.6g') for r in roots)})"
        super().__init__(msg)


class InvalidGains(ValueError):
    """Filter gains fail the steady-state validity checks."""


class ConfigError(ValueError):
    """Malformed or schema-violating input document."""
