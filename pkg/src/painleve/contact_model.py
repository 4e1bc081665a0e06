"""Rigid-body contact coefficients and the constraint-based regime picture.

All quantities are nondimensional: lengths in units of the half-length ``l``,
forces in units of ``m g`` and time in units of ``sqrt(l / g)``.
"""
from __future__ import annotations

import abc
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple


class DomainError(ValueError):
    """Raised when an operation is evaluated outside its domain."""


class NoParadoxError(DomainError):
    """Raised when ``mu <= mu_P(alpha)``, so ``p_+`` never becomes negative."""


class DegenerateSlidingError(DomainError):
    """Raised when ``q_- - q_+`` vanishes and the Filippov combination is undefined."""


@dataclass(frozen=True)
class BodyParams:
    alpha: float = 3.0
    mu: float = 1.4

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.mu >= 0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")


class CoefficientValues(NamedTuple):
    a: float
    b: float
    q_plus: float
    q_minus: float
    p_plus: float
    p_minus: float
    c_plus: float
    c_minus: float


class BodyCoefficients(abc.ABC):
    """The functions defining a planar rigid body slipping on a rough surface.

    ``a`` and ``b`` are the free horizontal and vertical accelerations of the
    contact point; ``q``, ``p`` and ``c`` are the responses of the horizontal,
    vertical and angular accelerations to a unit normal force, with the ``+``
    (``-``) branch valid for positive (negative) slip velocity.
    """

    @abc.abstractmethod
    def a(self, theta: float, phi: float) -> float: ...

    @abc.abstractmethod
    def b(self, theta: float, phi: float) -> float: ...

    @abc.abstractmethod
    def q_plus(self, theta: float) -> float: ...

    @abc.abstractmethod
    def q_minus(self, theta: float) -> float: ...

    @abc.abstractmethod
    def p_plus(self, theta: float) -> float: ...

    @abc.abstractmethod
    def p_minus(self, theta: float) -> float: ...

    @abc.abstractmethod
    def c_plus(self, theta: float) -> float: ...

    @abc.abstractmethod
    def c_minus(self, theta: float) -> float: ...

    def values(self, theta: float, phi: float) -> CoefficientValues:
        return CoefficientValues(
            self.a(theta, phi), self.b(theta, phi),
            self.q_plus(theta), self.q_minus(theta),
            self.p_plus(theta), self.p_minus(theta),
            self.c_plus(theta), self.c_minus(theta),
        )

    def sliding(self, theta: float, tol: float = 1e-12) -> tuple[float, float]:
        """Filippov sliding coefficients ``(S_w, S_phi)`` from the convex combination."""
        qp, qm = self.q_plus(theta), self.q_minus(theta)
        den = qm - qp
        if abs(den) < tol:
            raise DegenerateSlidingError(f"q_- - q_+ = {den:.3e} at theta={theta}")
        lam_p, lam_m = qm / den, qp / den
        s_w = lam_p * self.p_plus(theta) - lam_m * self.p_minus(theta)
        s_phi = lam_p * self.c_plus(theta) - lam_m * self.c_minus(theta)
        return s_w, s_phi

    def sliding_drift(self, theta: float, tol: float = 1e-12) -> tuple[float, float]:
        """Coefficients ``(R_w, R_phi)`` multiplying ``a`` in the exact Filippov field.

        Sticking with ``v' = 0`` exactly requires the convex weight to depend on
        ``a``; this adds ``a R_w`` to ``w'`` and ``a R_phi`` to ``phi'``.
        """
        den = self.q_minus(theta) - self.q_plus(theta)
        if abs(den) < tol:
            raise DegenerateSlidingError(f"q_- - q_+ = {den:.3e} at theta={theta}")
        return ((self.p_plus(theta) - self.p_minus(theta)) / den,
                (self.c_plus(theta) - self.c_minus(theta)) / den)


class RodCoefficients(BodyCoefficients):
    """The classical Painleve rod: a uniform-or-not slender rod touching at one end."""

    def __init__(self, params: BodyParams):
        self.params = params

    def __repr__(self):
        return f"RodCoefficients(alpha={self.params.alpha}, mu={self.params.mu})"

    def a(self, theta, phi):
        return -phi * phi * math.cos(theta)

    def b(self, theta, phi):
        return -1.0 + phi * phi * math.sin(theta)

    def q_plus(self, theta):
        al, mu = self.params.alpha, self.params.mu
        s, c = math.sin(theta), math.cos(theta)
        return al * s * c - mu * (1.0 + al * s * s)

    def q_minus(self, theta):
        al, mu = self.params.alpha, self.params.mu
        s, c = math.sin(theta), math.cos(theta)
        return al * s * c + mu * (1.0 + al * s * s)

    def p_plus(self, theta):
        al, mu = self.params.alpha, self.params.mu
        s, c = math.sin(theta), math.cos(theta)
        return 1.0 + al * c * c - mu * al * s * c

    def p_minus(self, theta):
        al, mu = self.params.alpha, self.params.mu
        s, c = math.sin(theta), math.cos(theta)
        return 1.0 + al * c * c + mu * al * s * c

    def c_plus(self, theta):
        al, mu = self.params.alpha, self.params.mu
        return -al * (math.cos(theta) - mu * math.sin(theta))

    def c_minus(self, theta):
        al, mu = self.params.alpha, self.params.mu
        return -al * (math.cos(theta) + mu * math.sin(theta))

    def sliding_closed_form(self, theta: float) -> tuple[float, float]:
        al = self.params.alpha
        den = 1.0 + al * math.sin(theta) ** 2
        return (1.0 + al) / den, -al * math.cos(theta) / den


class RegimeLabel(enum.Enum):
    SLIPPING = "slipping"
    LIFT_OFF = "lift_off"
    INCONSISTENT = "inconsistent"
    INDETERMINATE = "indeterminate"
    BOUNDARY = "boundary"


DEFAULT_BOUNDARY_TOL = 1e-9


def classical_coeffs(params: BodyParams, theta: float, phi: float) -> CoefficientValues:
    return RodCoefficients(params).values(theta, phi)


def sliding_coeffs(coeffs: BodyCoefficients, theta: float,
                   form: str = "general") -> tuple[float, float]:
    """Return ``(S_w, S_phi)``.

    ``form="general"`` uses the convex combination of the two slip branches and
    works for any body; ``form="closed"`` is available for the classical rod.
    """
    if form == "general":
        return coeffs.sliding(theta)
    if form == "closed":
        if not isinstance(coeffs, RodCoefficients):
            raise TypeError("closed-form sliding coefficients exist only for the rod")
        return coeffs.sliding_closed_form(theta)
    raise ValueError(f"unknown form {form!r}")


def mu_critical(alpha: float) -> float:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return 2.0 / alpha * math.sqrt(1.0 + alpha)


def theta_range(params: BodyParams) -> tuple[float, float]:
    """The angles ``theta_1 < theta_2`` bounding the interval where ``p_+ < 0``.

    At ``mu == mu_P`` exactly the interval degenerates to a point and both
    endpoints are returned equal.
    """
    al, mu = params.alpha, params.mu
    if mu < mu_critical(al) * (1.0 - 1e-12):
        raise NoParadoxError(
            f"mu={mu} <= mu_P({al})={mu_critical(al):.6g}: no Painleve paradox")
    # tan(theta) solves tan^2 - mu*alpha*tan + (1 + alpha) = 0
    root = math.sqrt(max(mu * mu * al * al - 4.0 * (1.0 + al), 0.0))
    t2 = 0.5 * (mu * al + root)
    # smaller root from the product of roots, free of cancellation
    t1 = (1.0 + al) / t2
    return math.atan(t1), math.atan(t2)


def classify_regime(coeffs: BodyCoefficients, theta: float, phi: float,
                    tol: float = DEFAULT_BOUNDARY_TOL) -> RegimeLabel:
    b = coeffs.b(theta, phi)
    p = coeffs.p_plus(theta)
    if abs(b) < tol or abs(p) < tol:
        return RegimeLabel.BOUNDARY
    if b < 0:
        return RegimeLabel.SLIPPING if p > 0 else RegimeLabel.INCONSISTENT
    return RegimeLabel.LIFT_OFF if p > 0 else RegimeLabel.INDETERMINATE


def constraint_normal_force(coeffs: BodyCoefficients, theta: float, phi: float,
                            tol: float = 1e-14) -> float:
    """Normal force keeping ``y = 0`` during positive slip; negative means inconsistent."""
    p = coeffs.p_plus(theta)
    if abs(p) < tol:
        raise ZeroDivisionError(f"p_+({theta}) = {p:.3e} vanishes")
    return -coeffs.b(theta, phi) / p
