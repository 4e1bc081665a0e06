"""Regularized normal-force laws for a compliant unilateral contact.

The force is ``F_N(y, w) = eps^-1 [h(y / eps, w)]`` for ``y <= 0`` and zero
above the surface, where ``[x] = max(x, 0)``.  Stiffness is ``eps^-2`` and
damping ``eps^-1 delta``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable


@dataclass(frozen=True)
class ComplianceParams:
    epsilon: float = 1e-3
    delta: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.delta >= 0:
            raise ValueError(f"delta must be non-negative, got {self.delta}")


class ComplianceLaw:
    """The smooth pre-bracket function ``h(y_hat, w)`` of the scaled force.

    The default is the linear spring-damper ``h = -y_hat - delta * w``.
    Subclasses, or instances built with :meth:`from_function`, provide
    nonlinear laws that must agree with the linear one to first order at the
    origin; :meth:`check_linearization` enforces that on construction.
    """

    name = "linear"
    is_linear = True

    def h(self, y_hat: float, w: float, delta: float) -> float:
        return -y_hat - delta * w

    @staticmethod
    def from_function(name: str, fn: Callable[[float, float, float], float],
                      check_delta: float = 1.0) -> "ComplianceLaw":
        law = _FunctionLaw(name, fn)
        law.check_linearization(check_delta)
        return law

    def check_linearization(self, delta: float, step: float = 1e-6,
                            tol: float = 1e-4) -> None:
        """Central differences at the origin: h(0,0)=0, d_y h=-1, d_w h=-delta."""
        h0 = self.h(0.0, 0.0, delta)
        dy = (self.h(step, 0.0, delta) - self.h(-step, 0.0, delta)) / (2 * step)
        dw = (self.h(0.0, step, delta) - self.h(0.0, -step, delta)) / (2 * step)
        if abs(h0) > tol or abs(dy + 1.0) > tol or abs(dw + delta) > tol:
            raise ValueError(
                f"law {self.name!r} does not linearize to -y_hat - delta*w at the origin: "
                f"h(0,0)={h0:.3g}, d_y h={dy:.6g}, d_w h={dw:.6g}")


class _FunctionLaw(ComplianceLaw):
    is_linear = False

    def __init__(self, name, fn):
        self.name = name
        self._fn = fn

    def h(self, y_hat, w, delta):
        return self._fn(y_hat, w, delta)


LINEAR = ComplianceLaw()


def _cubic_stiffening(y_hat, w, delta):
    # hardening spring with the same linearization; d/dy_hat stays negative
    return -y_hat - delta * w - y_hat ** 3


LAWS: dict[str, ComplianceLaw] = {
    "linear": LINEAR,
    "cubic": ComplianceLaw.from_function("cubic", _cubic_stiffening),
}


def get_law(name: str) -> ComplianceLaw:
    try:
        return LAWS[name]
    except KeyError:
        raise ValueError(f"unknown compliance law {name!r}; known: {sorted(LAWS)}") from None


def bracket(x: float) -> float:
    return x if x > 0.0 else 0.0


def normal_force(y: float, w: float, params: ComplianceParams,
                 law: ComplianceLaw = LINEAR) -> float:
    if y > 0.0:
        return 0.0
    eps = params.epsilon
    return bracket(law.h(y / eps, w, params.delta)) / eps


def scaled_normal_force(y_hat: float, w: float, delta: float,
                        law: ComplianceLaw = LINEAR) -> float:
    """``eps * F_N(eps * y_hat, w)``; note that ``y_hat > 0`` gives zero force."""
    if y_hat > 0.0:
        return 0.0
    return bracket(law.h(y_hat, w, delta))
