"""Closed-form quantities of regularized impact without collision (IWC).

Everything here lives at the rigid-body limit ``eps = 0`` on the fast time
``tau = t / eps`` with the scaled penetration ``y_hat = y / eps``.  An IWC
consists of slipping compression along the unstable manifold of the contact
saddle, a sticking phase on ``v = 0`` and lift-off once the scaled force
``[-y_hat - delta * w]`` vanishes.  All maps are linear in the initial slip
velocity ``v0``; functions that do not take ``v0`` use ``v0 = 1``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .contact_model import BodyCoefficients, DomainError

DOUBLE_ROOT_BAND = 1e-10


class NoExitError(RuntimeError):
    """The stick-phase orbit did not reach the lift-off section in the time budget."""


@dataclass(frozen=True)
class EigenPair:
    lambda_plus: complex | float
    lambda_minus: complex | float
    saddle: bool

    def residuals(self, p_plus: float, delta: float) -> tuple[float, float]:
        return tuple(abs(lam * lam + p_plus * (1.0 + delta * lam))
                     for lam in (self.lambda_plus, self.lambda_minus))


@dataclass(frozen=True)
class StickSpectrum:
    xi_plus: complex
    xi_minus: complex
    delta_crit: float
    branch: str  # "real", "complex" or "double"


class CompressionEnd(NamedTuple):
    y_hat: float
    w: float
    theta: float
    phi: float


class PostIWCState(NamedTuple):
    w: float
    theta: float
    phi: float
    v: float


@dataclass
class IWCSummary:
    compression_end: CompressionEnd
    tau_s: float
    post_state: PostIWCState
    e: float
    durations: dict[str, float] = field(default_factory=dict)
    source: str = "closed_form"
    correction: dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"source": self.source, "e": self.e, "tau_s": self.tau_s}
        out.update({f"compression_{k}": v for k, v in self.compression_end._asdict().items()})
        out.update({f"post_{k}": v for k, v in self.post_state._asdict().items()})
        out.update({f"duration_{k}": v for k, v in self.durations.items()})
        out.update({f"correction_{k}": v for k, v in self.correction.items()})
        return out


def lambda_pm(p_plus: float, delta: float) -> EigenPair:
    """Non-zero eigenvalues of the slipping contact layer linearized on ``y_hat = w = 0``.

    The pair is real with ``lambda_- < 0 < lambda_+`` exactly when ``p_+ < 0``;
    otherwise complex values may be returned and ``saddle`` is False.
    """
    disc = delta * delta * p_plus * p_plus - 4.0 * p_plus
    if disc >= 0.0:
        root = math.sqrt(disc)
        lp = -0.5 * delta * p_plus + 0.5 * root
        lm = -0.5 * delta * p_plus - 0.5 * root
        # recover the cancelling root from the product lambda_+ lambda_- = p_+
        if p_plus < 0.0 and lp != 0.0:
            lm = p_plus / lp
        elif p_plus > 0.0 and lm != 0.0:
            lp = p_plus / lm
        return EigenPair(lp, lm, saddle=p_plus < 0.0)
    root = cmath.sqrt(disc)
    return EigenPair(-0.5 * delta * p_plus + 0.5 * root,
                     -0.5 * delta * p_plus - 0.5 * root, saddle=False)


def stick_spectrum(s_w: float, delta: float) -> StickSpectrum:
    if not s_w > 0:
        raise DomainError(f"S_w must be positive, got {s_w}")
    delta_crit = 2.0 / math.sqrt(s_w)
    disc = delta * delta * s_w * s_w - 4.0 * s_w
    if disc > 0.0:
        xi_m = -0.5 * delta * s_w - 0.5 * math.sqrt(disc)
        return StickSpectrum(complex(s_w / xi_m), complex(xi_m), delta_crit, "real")
    if disc < 0.0:
        om = 0.5 * math.sqrt(-disc)
        sig = -0.5 * delta * s_w
        return StickSpectrum(complex(sig, om), complex(sig, -om), delta_crit, "complex")
    xi = complex(-0.5 * delta * s_w)
    return StickSpectrum(xi, xi, delta_crit, "double")


class _StickData(NamedTuple):
    p: float
    q: float
    s_w: float
    s_phi: float
    lam: float
    spec: StickSpectrum


def _stick_data(theta0: float, delta: float, coeffs: BodyCoefficients) -> _StickData:
    if delta < 0:
        raise DomainError(f"delta must be non-negative, got {delta}")
    p = coeffs.p_plus(theta0)
    q = coeffs.q_plus(theta0)
    if not p < 0.0:
        raise DomainError(f"p_+({theta0}) = {p:.6g} >= 0: theta0 outside the paradox range")
    if not q < 0.0:
        raise DomainError(f"q_+({theta0}) = {q:.6g} >= 0")
    s_w, s_phi = coeffs.sliding(theta0)
    lam = lambda_pm(p, delta).lambda_plus
    return _StickData(p, q, s_w, s_phi, lam, stick_spectrum(s_w, delta))


def _near_double(d: _StickData, delta: float) -> bool:
    return abs(delta - d.spec.delta_crit) < DOUBLE_ROOT_BAND


def _tau_s(d: _StickData, delta: float) -> float:
    lam, spec = d.lam, d.spec
    if _near_double(d, delta):
        # confluent solution (A + B tau) exp(xi tau), xi = -sqrt(S_w)
        return delta - 1.0 / (lam + math.sqrt(d.s_w))
    if spec.branch == "real":
        xp, xm = spec.xi_plus.real, spec.xi_minus.real
        log_ratio = 2.0 * math.log(xm / xp) + math.log((lam - xp) / (lam - xm))
        return log_ratio / (xp - xm)
    om = spec.xi_plus.imag
    psi = cmath.phase((lam - spec.xi_plus) * spec.xi_minus ** 2)
    psi = math.fmod(psi, math.pi)
    if psi <= 0.0:
        psi += math.pi
    return psi / om


def tau_s(theta0: float, delta: float, coeffs: BodyCoefficients) -> float:
    """Duration of the sticking phase (fast time) from compression end to lift-off."""
    d = _stick_data(theta0, delta, coeffs)
    return _tau_s(d, delta)


def _e(d: _StickData, delta: float) -> float:
    lam, spec = d.lam, d.spec
    ts = _tau_s(d, delta)
    y0 = -d.p / (d.q * lam)
    if _near_double(d, delta):
        xi = -math.sqrt(d.s_w)
        return y0 * math.exp(xi * ts) * ((lam - xi) * (1.0 + xi * ts) + xi)
    xp, xm = spec.xi_plus, spec.xi_minus
    val = (xp / xm) * (lam - xm) * (d.p / (d.q * lam)) * cmath.exp(xp * ts)
    return val.real


def e_closed_form(theta0: float, delta: float, coeffs: BodyCoefficients) -> float:
    """Horizontal coefficient of restitution: post-IWC vertical velocity per unit ``v0``."""
    return _e(_stick_data(theta0, delta, coeffs), delta)


def _dominant_root(p: float, delta: float) -> float:
    # independent route to lambda_+: companion-matrix roots of x^2 + delta p x + p
    roots = np.roots([1.0, delta * p, p])
    return float(np.max(roots.real))


def stick_exit_numeric(theta0: float, delta: float, coeffs: BodyCoefficients,
                       v0: float = 1.0, phi0: float = 0.0, rtol: float = 1e-13,
                       atol: float = 1e-15, tau_max: float = 1e3):
    """Integrate the eps=0 stick equations to the section ``y_hat + delta w = 0``.

    Returns ``(tau_s, y_hat, w, phi)`` at the section.  This is a direct
    numerical route used as an oracle for the closed forms.
    """
    p, q = coeffs.p_plus(theta0), coeffs.q_plus(theta0)
    if not (p < 0.0 and q < 0.0):
        raise DomainError(f"need p_+ < 0 and q_+ < 0 at theta0={theta0}")
    s_w, s_phi = coeffs.sliding(theta0)
    lam = _dominant_root(p, delta)
    x0 = [-p / (q * lam) * v0, -p / q * v0, phi0 - coeffs.c_plus(theta0) / q * v0]

    def rhs(_t, x):
        force = max(-x[0] - delta * x[1], 0.0)
        return [x[1], s_w * force, s_phi * force]

    def exit_section(_t, x):
        return x[0] + delta * x[1]
    exit_section.terminal = True
    exit_section.direction = 1.0

    sol = solve_ivp(rhs, (0.0, tau_max), x0, method="DOP853", rtol=rtol, atol=atol,
                    events=exit_section)
    if sol.status != 1 or not len(sol.t_events[0]):
        raise NoExitError(f"no lift-off within tau={tau_max} (theta0={theta0}, delta={delta})")
    ts = float(sol.t_events[0][0])
    yh, w, phi = sol.y_events[0][0]
    return ts, float(yh), float(w), float(phi)


def e_numeric(theta0: float, delta: float, coeffs: BodyCoefficients,
              tol: float = 1e-13) -> float:
    return stick_exit_numeric(theta0, delta, coeffs, rtol=tol, atol=tol * 1e-2)[2]


def e_large_delta(theta0: float, delta: float, coeffs: BodyCoefficients) -> float:
    if not delta > 0:
        raise DomainError("the large-damping asymptote needs delta > 0")
    pp, pm = coeffs.p_plus(theta0), coeffs.p_minus(theta0)
    qp, qm = coeffs.q_plus(theta0), coeffs.q_minus(theta0)
    return (pm - pp) / (qm * pp - qp * pm) / (delta * delta)


def e_large_delta_rod(theta0: float, delta: float, alpha: float) -> float:
    """Rod specialization of :func:`e_large_delta`; note it does not depend on ``mu``."""
    return alpha / (2.0 * (1.0 + alpha)) * math.sin(2.0 * theta0) / (delta * delta)


def e_small_delta(theta0: float, delta: float, coeffs: BodyCoefficients) -> float:
    pp, pm = coeffs.p_plus(theta0), coeffs.p_minus(theta0)
    qp, qm = coeffs.q_plus(theta0), coeffs.q_minus(theta0)
    s_w, _ = coeffs.sliding(theta0)
    lead = math.sqrt(pp * (pm - pp) / (qp * (qm - qp)))
    slope = 0.5 * math.sqrt(s_w) * (math.pi - math.atan(math.sqrt(-s_w / pp)))
    return lead * (1.0 - slope * delta)


def e_zero_rod(theta0: float, alpha: float, mu: float) -> float:
    s, c = math.sin(theta0), math.cos(theta0)
    num = 1.0 + alpha * c * c - mu * alpha * s * c
    den = alpha * s * c - mu * (1.0 + alpha * s * s)
    return math.sqrt(num / den * alpha * s * c / (1.0 + alpha * s * s))


def compression_endpoint(theta0: float, phi0: float, v0: float, delta: float,
                         coeffs: BodyCoefficients) -> CompressionEnd:
    p, q = coeffs.p_plus(theta0), coeffs.q_plus(theta0)
    if not (p < 0.0 and q < 0.0):
        raise DomainError(f"need p_+ < 0 and q_+ < 0 at theta0={theta0}")
    lam = lambda_pm(p, delta).lambda_plus
    return CompressionEnd(-p / (q * lam) * v0, -p / q * v0, theta0,
                          phi0 - coeffs.c_plus(theta0) / q * v0)


def post_iwc_state(theta0: float, phi0: float, v0: float, delta: float,
                   coeffs: BodyCoefficients) -> PostIWCState:
    d = _stick_data(theta0, delta, coeffs)
    e = _e(d, delta)
    c = coeffs.c_plus(theta0)
    dphi = -c / d.q + d.s_phi / d.s_w * (e + d.p / d.q)
    return PostIWCState(e * v0, theta0, phi0 + dphi * v0, 0.0)


def predict_iwc(theta0: float, phi0: float, v0: float, delta: float,
                coeffs: BodyCoefficients) -> IWCSummary:
    d = _stick_data(theta0, delta, coeffs)
    ts = _tau_s(d, delta)
    return IWCSummary(
        compression_end=compression_endpoint(theta0, phi0, v0, delta, coeffs),
        tau_s=ts,
        post_state=post_iwc_state(theta0, phi0, v0, delta, coeffs),
        e=_e(d, delta),
        durations={"stick_tau": ts},
    )


def separatrix_w1star(theta0: float, phi0: float, coeffs: BodyCoefficients,
                      delta: float) -> float:
    """Grazing velocity ``w1 = w / eps`` dividing direct lift-off from IWC."""
    p, b = coeffs.p_plus(theta0), coeffs.b(theta0, phi0)
    if not (p < 0.0 and b > 0.0):
        raise DomainError(
            f"separatrix needs the indeterminate region (p_+={p:.4g}, b={b:.4g})")
    return -lambda_pm(p, delta).lambda_minus * b / p


MANIFOLDS = ("gamma_u", "gamma_s", "gamma1_u", "gamma1_s", "C1")


def manifold_points(kind: str, base: tuple[float, float, float], delta: float,
                    coeffs: BodyCoefficients, grid: Sequence[float] = ()) -> np.ndarray:
    """Exact parameterizations of the contact-layer invariant sets.

    ``gamma_u``/``gamma_s`` are stable/unstable sets of the saddle in the
    ``(y_hat, w, theta, phi, v)`` chart, parameterized by ``y_hat <= 0``.
    ``gamma1_u``/``gamma1_s`` live in the zoomed ``(y1_hat, w1, ...)`` chart
    and are parameterized by ``s <= -b/p_+``; ``C1`` is the single base point.
    Rows are ``(y, w, theta, phi, v)`` in the respective chart.
    """
    theta0, phi0, v0 = base
    p = coeffs.p_plus(theta0)
    if not p < 0.0:
        raise DomainError(f"p_+({theta0}) = {p:.6g} >= 0")
    pair = lambda_pm(p, delta)
    grid = np.asarray(grid, dtype=float)
    b = coeffs.b(theta0, phi0)
    if kind in ("gamma_u", "gamma_s"):
        if np.any(grid > 0):
            raise DomainError("gamma_u/gamma_s are parameterized by y_hat <= 0")
        lam = pair.lambda_plus if kind == "gamma_u" else pair.lambda_minus
        c, q = coeffs.c_plus(theta0), coeffs.q_plus(theta0)
        return np.column_stack([
            grid, lam * grid, np.full_like(grid, theta0),
            phi0 + c / p * lam * grid, v0 + q / p * lam * grid])
    if kind in ("gamma1_u", "gamma1_s"):
        s_max = -b / p
        if np.any(grid > s_max):
            raise DomainError(f"gamma1 parameter must satisfy s <= -b/p_+ = {s_max:.6g}")
        lam = pair.lambda_plus if kind == "gamma1_u" else pair.lambda_minus
        return np.column_stack([
            b / p + grid, lam * grid, np.full_like(grid, theta0),
            np.full_like(grid, phi0), np.full_like(grid, v0)])
    if kind == "C1":
        return np.array([[b / p, 0.0, theta0, phi0, v0]])
    raise ValueError(f"unknown manifold {kind!r}; expected one of {MANIFOLDS}")
