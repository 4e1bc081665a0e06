"""Event-driven integration of the compliant Painleve system.

The hybrid automaton has four modes: free flight, positive and negative
slip (both in contact), and sticking on ``v = 0`` (Filippov sliding).  Within
a mode the vector field is smooth: contact modes use the unbracketed force,
and every place where the bracket or the slip sign would switch is an event
function.  Steps are taken with the Dormand-Prince 5(4) pair from scipy; sign
changes of event functions between accepted steps are refined on the step's
dense output with Brent's method.

Contact phases can be integrated on the fast time ``tau = (t - t_seg) / eps``
with ``y_hat = y / eps`` (the "fast chart"), which keeps tolerances
meaningful when ``eps`` is small.
"""
from __future__ import annotations

import bisect
import csv
import enum
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq

from .compliance import LINEAR, ComplianceLaw, ComplianceParams, bracket, normal_force
from .contact_model import BodyCoefficients, BodyParams

STATE_FIELDS = ("y", "w", "theta", "phi", "v", "x")
IY, IW, ITH, IPHI, IV, IX = range(6)


class IntegrationError(RuntimeError):
    pass


class StepUnderflowError(IntegrationError):
    """Step size collapsed or the step budget ran out (stiffness beyond budget)."""


class EventLoopError(IntegrationError):
    """Too many events in a unit of time: chattering or a Zeno-like cascade."""


class NonFiniteError(IntegrationError):
    pass


class Mode(enum.Enum):
    FREE_FLIGHT = "free_flight"
    SLIP_POS = "slip_pos"
    SLIP_NEG = "slip_neg"
    STICK = "stick"

    @property
    def in_contact(self) -> bool:
        return self is not Mode.FREE_FLIGHT


class EventKind(enum.Enum):
    CONTACT_LOSS = "contact_loss"
    FOLD_EXIT = "fold_exit"
    STICK_ONSET = "stick_onset"
    SLIP_REVERSAL = "slip_reversal"
    CONTACT_ONSET = "contact_onset"
    USER_SECTION = "user_section"


# tie-break order for roots closer than the event tolerance
_PRIORITY = {k: i for i, k in enumerate(EventKind)}


@dataclass(frozen=True)
class HybridState:
    y: float
    w: float
    theta: float
    phi: float
    v: float
    x: float = 0.0
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.y, self.w, self.theta, self.phi, self.v, self.x])

    @classmethod
    def from_array(cls, arr, t: float = 0.0) -> "HybridState":
        return cls(*(float(a) for a in arr[:6]), t=float(t))

    def is_finite(self) -> bool:
        return all(math.isfinite(getattr(self, f)) for f in STATE_FIELDS + ("t",))


@dataclass(frozen=True)
class Event:
    kind: EventKind
    t: float
    state: HybridState
    mode_before: Mode
    mode_after: Mode | None
    error_bound: float
    name: str = ""


@dataclass(frozen=True)
class Section:
    """A user-defined section ``fn(state) = 0`` crossed in ``direction`` (0 = either)."""
    name: str
    fn: Callable[[HybridState], float]
    direction: float = 0.0
    terminal: bool = True


def _height(s: HybridState) -> float:
    return s.y


def surface_return(terminal: bool = True) -> Section:
    """Upward crossing of ``y = 0``: the body returns to the undeformed surface."""
    return Section("surface_return", _height, direction=1.0, terminal=terminal)


@dataclass(frozen=True)
class Tolerances:
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-12
    stick_band: float = 1e-10
    zero_tol: float = 1e-9
    fast_chart_below: float = 1e-3
    max_steps: int = 200_000
    max_events_per_unit_time: int = 1000
    exact_filippov: bool = True

    def __post_init__(self):
        for name in ("rtol", "atol", "event_tol", "stick_band", "zero_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")


# ---------------------------------------------------------------------------
# vector fields


def slip_field(state: HybridState, mode: Mode, coeffs: BodyCoefficients,
               compliance: ComplianceParams, law: ComplianceLaw = LINEAR) -> np.ndarray:
    """Time derivative of ``(y, w, theta, phi, v, x)`` on a slip branch, force bracketed."""
    th, ph = state.theta, state.phi
    fn = normal_force(state.y, state.w, compliance, law)
    if mode is Mode.SLIP_POS:
        p, c, q = coeffs.p_plus(th), coeffs.c_plus(th), coeffs.q_plus(th)
    elif mode is Mode.SLIP_NEG:
        p, c, q = coeffs.p_minus(th), coeffs.c_minus(th), coeffs.q_minus(th)
    else:
        raise ValueError(f"slip_field needs a slip mode, got {mode}")
    return np.array([state.w, coeffs.b(th, ph) + p * fn, ph, c * fn,
                     coeffs.a(th, ph) + q * fn, state.v])


def sticking_condition(state: HybridState, coeffs: BodyCoefficients,
                       compliance: ComplianceParams, law: ComplianceLaw = LINEAR) -> bool:
    """Whether both one-sided slip accelerations point back into ``v = 0``."""
    th, ph = state.theta, state.phi
    fn = normal_force(state.y, state.w, compliance, law)
    a = coeffs.a(th, ph)
    return a + coeffs.q_plus(th) * fn < 0.0 < a + coeffs.q_minus(th) * fn


def fold_function(state: HybridState, coeffs: BodyCoefficients,
                  compliance: ComplianceParams) -> float:
    """``y_hat + delta w - eps F(theta, phi)`` for the linear law: negative while sticking.

    The branch of ``F`` follows the sign of ``a``; ``a = 0`` falls back to the
    ``a > 0`` branch.
    """
    eps, delta = compliance.epsilon, compliance.delta
    th = state.theta
    a = coeffs.a(th, state.phi)
    if a == 0.0:
        warnings.warn("fold function at a = 0: degenerate case, using the a > 0 branch",
                      RuntimeWarning, stacklevel=2)
    big_f = a / (coeffs.q_plus(th) if a >= 0.0 else coeffs.q_minus(th))
    return state.y / eps + delta * state.w - eps * big_f


def stick_field(state: HybridState, coeffs: BodyCoefficients,
                compliance: ComplianceParams, law: ComplianceLaw = LINEAR,
                exact: bool = True) -> np.ndarray:
    """Filippov sliding field on ``v = 0``.

    ``exact=False`` drops the ``a``-dependent part of the convex weight, keeping
    only ``w' = b + S_w F_N`` and ``phi' = S_phi F_N``; the dropped terms are
    O(eps) on the fast time scale but without them ``v' = 0`` is not the exact
    combination and the mechanical energy can grow while sticking.
    """
    th, ph = state.theta, state.phi
    fn = normal_force(state.y, state.w, compliance, law)
    s_w, s_phi = coeffs.sliding(th)
    dw = coeffs.b(th, ph) + s_w * fn
    dphi = s_phi * fn
    if exact:
        r_w, r_phi = coeffs.sliding_drift(th)
        a = coeffs.a(th, ph)
        dw += a * r_w
        dphi += a * r_phi
    return np.array([state.w, dw, ph, dphi, 0.0, 0.0])


def scaled_field(z: Sequence[float], coeffs: BodyCoefficients, delta: float,
                 epsilon: float, branch: int = +1, law: ComplianceLaw = LINEAR) -> np.ndarray:
    """Fast-time field of ``(y_hat, w, theta, phi, v)``, with ``y = eps y_hat``, ``t = eps tau``."""
    yh, w, th, ph, v = z[:5]
    fh = 0.0 if yh > 0.0 else bracket(law.h(yh, w, delta))
    if branch > 0:
        p, c, q = coeffs.p_plus(th), coeffs.c_plus(th), coeffs.q_plus(th)
    else:
        p, c, q = coeffs.p_minus(th), coeffs.c_minus(th), coeffs.q_minus(th)
    return np.array([w, epsilon * coeffs.b(th, ph) + p * fh, epsilon * ph, c * fh,
                     epsilon * coeffs.a(th, ph) + q * fh])


def kappa1_field(z: Sequence[float], coeffs: BodyCoefficients, delta: float,
                 epsilon: float) -> np.ndarray:
    """Field of the zoomed chart ``y = eps^2 y1_hat``, ``w = eps w1`` on positive slip.

    ``epsilon = 0`` gives the layer problem with ``(theta, phi, v)`` frozen.
    """
    y1, w1, th, ph, _v = z[:5]
    f1 = 0.0 if y1 > 0.0 else bracket(-y1 - delta * w1)
    return np.array([w1, coeffs.b(th, ph) + coeffs.p_plus(th) * f1,
                     epsilon * ph, epsilon * coeffs.c_plus(th) * f1,
                     epsilon * (coeffs.a(th, ph) + coeffs.q_plus(th) * f1)])


def mechanical_energy(state: HybridState, params: BodyParams,
                      compliance: ComplianceParams) -> float:
    """Kinetic + gravitational + spring energy of the rod (units of ``m g l``)."""
    s, c = math.sin(state.theta), math.cos(state.theta)
    vx = state.v + state.phi * s
    vy = state.w + state.phi * c
    height = state.y + s
    pen = min(state.y, 0.0) / compliance.epsilon
    return 0.5 * (vx * vx + vy * vy) + 0.5 * state.phi ** 2 / params.alpha + height + 0.5 * pen * pen


def free_flight_flow(state: HybridState, dt: float) -> HybridState:
    """Exact rod motion for a time ``dt`` (either sign) with no contact force.

    ``phi`` is constant, so ``theta`` is linear in time and ``w``, ``v``, ``y``,
    ``x`` follow by quadrature of ``b = -1 + phi^2 sin(theta)`` and
    ``a = -phi^2 cos(theta)``.
    """
    th0, ph = state.theta, state.phi
    th1 = th0 + ph * dt
    s0, c0, s1, c1 = math.sin(th0), math.cos(th0), math.sin(th1), math.cos(th1)
    w = state.w - dt - ph * (c1 - c0)
    v = state.v - ph * (s1 - s0)
    y = state.y + state.w * dt - 0.5 * dt * dt - (s1 - s0) + ph * c0 * dt
    x = state.x + state.v * dt + (c1 - c0) + ph * s0 * dt
    return HybridState(y, w, th1, ph, v, x, state.t + dt)


# ---------------------------------------------------------------------------
# segment integration


@dataclass
class _EventFn:
    kind: EventKind
    fn: Callable[[float, np.ndarray], float]
    direction: float
    zero_tol: float
    guard: Callable[[np.ndarray], bool] | None = None
    terminal: bool = True
    name: str = ""
    # derivative of fn along the flow; lets a step that enters and leaves the
    # zero set between two accepted points (a tangential crossing) be caught
    dfn: Callable[[float, np.ndarray], float] | None = None


@dataclass
class Segment:
    """One smooth piece of a trajectory, integrated in a single chart."""
    mode: Mode
    chart: str  # "t" or "tau"
    t0: float
    scale: float  # dt/ds: 1 in the slow chart, eps in the fast chart
    epsilon: float
    s: list = field(default_factory=list)
    z: list = field(default_factory=list)
    dense: list = field(default_factory=list)

    def to_physical(self, s: float, z: np.ndarray) -> tuple[float, np.ndarray]:
        if self.chart == "t":
            return self.t0 + s, np.asarray(z, dtype=float)
        x = np.array(z, dtype=float)
        x[IY] *= self.epsilon
        return self.t0 + self.scale * s, x

    def from_physical(self, t: float, x: np.ndarray) -> tuple[float, np.ndarray]:
        if self.chart == "t":
            return t - self.t0, np.array(x, dtype=float)
        z = np.array(x, dtype=float)
        z[IY] /= self.epsilon
        return (t - self.t0) / self.scale, z

    @property
    def t_end(self) -> float:
        return self.to_physical(self.s[-1], self.z[-1])[0]

    def times(self) -> np.ndarray:
        return self.t0 + self.scale * np.asarray(self.s)

    def states(self) -> np.ndarray:
        z = np.array(self.z, dtype=float)
        if self.chart == "tau":
            z[:, IY] *= self.epsilon
        return z

    def sample(self, t: float) -> np.ndarray:
        s = (t - self.t0) / self.scale
        k = min(max(bisect.bisect_right(self.s, s) - 1, 0), len(self.dense) - 1)
        if not self.dense:
            return self.to_physical(self.s[0], self.z[0])[1]
        return self.to_physical(s, self.dense[k](s))[1]


def _find_root(g: Callable[[float], float], a: float, b: float, xtol: float) -> float:
    ga, gb = g(a), g(b)
    if ga == 0.0:
        return a
    if gb == 0.0:
        return b
    return brentq(g, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)


def _integrate_segment(rhs, s0: float, z0: np.ndarray, s_end: float, events: list[_EventFn],
                       rtol: float, atol, event_tol: float, max_steps: int, seg: Segment,
                       on_nonterminal=None):
    """Step ``rhs`` from ``s0`` until ``s_end`` or the first terminal event.

    Returns ``(s_event, z_event, event_fn)`` or ``None`` when ``s_end`` is reached.
    """
    seg.s.append(s0)
    seg.z.append(np.array(z0, dtype=float))
    if s_end <= s0:
        return None
    solver = RK45(rhs, s0, np.array(z0, dtype=float), s_end, rtol=rtol, atol=atol)
    # an event function starting inside its zero band is disarmed until it leaves it
    signs = []
    for ev in events:
        g0 = ev.fn(s0, solver.y)
        signs.append(0.0 if abs(g0) <= ev.zero_tol else math.copysign(1.0, g0))
    steps = 0
    while solver.status == "running":
        s_old = solver.t
        msg = solver.step()
        steps += 1
        if solver.status == "failed":
            raise StepUnderflowError(f"step failed at s={s_old:.6g}: {msg}")
        if steps > max_steps:
            raise StepUnderflowError(f"step budget of {max_steps} exhausted at s={solver.t:.6g}")
        if not np.all(np.isfinite(solver.y)):
            raise NonFiniteError(f"non-finite state at s={solver.t:.6g}")
        dense = solver.dense_output()
        s_new = solver.t
        hits = []
        for i, ev in enumerate(events):
            g_new = ev.fn(s_new, solver.y)
            new_sign = 0.0 if abs(g_new) <= ev.zero_tol else math.copysign(1.0, g_new)
            old_sign = signs[i]
            if old_sign != 0.0 and new_sign != 0.0 and new_sign != old_sign:
                if ev.direction == 0.0 or ev.direction * new_sign > 0:
                    root = _find_root(lambda s, ev=ev: ev.fn(s, dense(s)), s_old, s_new, event_tol)
                    z_root = dense(root)
                    if ev.guard is None or ev.guard(z_root):
                        hits.append((root, _PRIORITY[ev.kind], i, z_root))
            elif old_sign != 0.0 and new_sign == 0.0:
                # landed inside the zero band: treat as a crossing at the step end
                slope_sign = -old_sign
                if ev.direction == 0.0 or ev.direction * slope_sign > 0:
                    z_root = solver.y.copy()
                    if ev.guard is None or ev.guard(z_root):
                        hits.append((s_new, _PRIORITY[ev.kind], i, z_root))
            elif (old_sign != 0.0 and new_sign == old_sign and ev.dfn is not None
                  and (ev.direction == 0.0 or ev.direction * old_sign < 0)):
                d_old, d_new = ev.dfn(s_old, dense(s_old)), ev.dfn(s_new, solver.y)
                if d_old * d_new < 0.0:
                    s_ext = _find_root(lambda s, ev=ev: ev.dfn(s, dense(s)), s_old, s_new,
                                       event_tol)
                    if ev.fn(s_ext, dense(s_ext)) * old_sign < -ev.zero_tol:
                        root = _find_root(lambda s, ev=ev: ev.fn(s, dense(s)), s_old, s_ext,
                                          event_tol)
                        z_root = dense(root)
                        if ev.guard is None or ev.guard(z_root):
                            hits.append((root, _PRIORITY[ev.kind], i, z_root))
            if new_sign != 0.0:
                signs[i] = new_sign
        if hits:
            hits.sort(key=lambda h: h[0])
            term = [h for h in hits if events[h[2]].terminal]
            t_cut = term[0][0] if term else math.inf
            if on_nonterminal is not None:
                for root, _prio, i, z_root in hits:
                    if not events[i].terminal and root <= t_cut + event_tol:
                        on_nonterminal(root, z_root, events[i])
            if term:
                tied = [h for h in term if h[0] - t_cut <= event_tol]
                root, _prio, i, z_root = min(tied, key=lambda h: (h[1], h[0]))
                seg.s.append(root)
                seg.z.append(np.array(z_root))
                seg.dense.append(dense)
                return root, np.array(z_root), events[i]
        seg.s.append(s_new)
        seg.z.append(solver.y.copy())
        seg.dense.append(dense)
    return None


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Accepted steps with interpolants, located events and the mode history."""
    segments: list[Segment]
    events: list[Event]
    coeffs: BodyCoefficients
    compliance: ComplianceParams
    law: ComplianceLaw = LINEAR
    terminated_by: str = "t_end"

    @property
    def mode_history(self) -> list[tuple[float, float, Mode]]:
        return [(seg.t0, seg.t_end, seg.mode) for seg in self.segments]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, list[Mode]]:
        ts, xs, modes = [], [], []
        for seg in self.segments:
            ts.append(seg.times())
            xs.append(seg.states())
            modes.extend([seg.mode] * len(seg.s))
        return np.concatenate(ts), np.vstack(xs), modes

    @property
    def final_state(self) -> HybridState:
        seg = self.segments[-1]
        t, x = seg.to_physical(seg.s[-1], seg.z[-1])
        return HybridState.from_array(x, t)

    @property
    def final_mode(self) -> Mode:
        return self.segments[-1].mode

    def sample(self, t: float) -> HybridState:
        for seg in self.segments:
            if t <= seg.t_end or seg is self.segments[-1]:
                return HybridState.from_array(seg.sample(t), t)
        raise ValueError(t)

    def normal_forces(self) -> np.ndarray:
        _t, x, _m = self.arrays()
        return np.array([normal_force(r[IY], r[IW], self.compliance, self.law) for r in x])

    def applied_forces(self) -> np.ndarray:
        """The force the mode fields actually used: unbracketed in contact, zero in flight."""
        _t, x, modes = self.arrays()
        eps, delta = self.compliance.epsilon, self.compliance.delta
        return np.array([self.law.h(r[IY] / eps, r[IW], delta) / eps if m.in_contact else 0.0
                         for r, m in zip(x, modes)])

    def events_of(self, kind: EventKind) -> list[Event]:
        return [e for e in self.events if e.kind is kind]

    def to_csv(self, path) -> None:
        t, x, modes = self.arrays()
        fn = self.normal_forces()
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "y", "w", "theta", "phi", "v", "x", "mode", "F_N"])
            for ti, row, m, f in zip(t, x, modes, fn):
                wr.writerow([_fmt(ti), *(_fmt(r) for r in row), m.value, _fmt(f)])

    def events_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["kind", "name", "t", *STATE_FIELDS, "mode_before", "mode_after",
                         "error_bound"])
            for e in self.events:
                wr.writerow([e.kind.value, e.name, _fmt(e.t),
                             *(_fmt(getattr(e.state, f)) for f in STATE_FIELDS),
                             e.mode_before.value, e.mode_after.value if e.mode_after else "",
                             _fmt(e.error_bound)])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# the hybrid automaton


class _System:
    def __init__(self, coeffs, compliance, law, tol: Tolerances):
        self.coeffs = coeffs
        self.comp = compliance
        self.law = law
        self.tol = tol
        self.eps = compliance.epsilon
        self.delta = compliance.delta

    def chart_for(self, mode: Mode) -> str:
        if mode.in_contact and self.eps < self.tol.fast_chart_below:
            return "tau"
        return "t"

    def branch(self, mode, th):
        co = self.coeffs
        if mode is Mode.SLIP_POS:
            return co.p_plus(th), co.c_plus(th), co.q_plus(th)
        return co.p_minus(th), co.c_minus(th), co.q_minus(th)

    def force(self, z, chart):
        """Unbracketed force in chart units: ``F_N`` in t, ``eps F_N`` in tau."""
        if chart == "t":
            return self.law.h(z[IY] / self.eps, z[IW], self.delta) / self.eps
        return self.law.h(z[IY], z[IW], self.delta)

    def rhs(self, mode: Mode, chart: str):
        co, eps = self.coeffs, self.eps
        k = 1.0 if chart == "t" else eps  # multiplies the O(1) slow terms

        if mode is Mode.FREE_FLIGHT:
            def f(_s, z):
                th, ph = z[ITH], z[IPHI]
                return np.array([z[IW], co.b(th, ph), ph, 0.0, co.a(th, ph), z[IV]])
            return f
        if mode is Mode.STICK:
            def f(_s, z):
                th, ph = z[ITH], z[IPHI]
                fn = self.force(z, chart)
                s_w, s_phi = co.sliding(th)
                drift = k * co.a(th, ph) if self.tol.exact_filippov else 0.0
                r_w, r_phi = co.sliding_drift(th)
                return np.array([z[IW], k * co.b(th, ph) + s_w * fn + drift * r_w, k * ph,
                                 s_phi * fn + drift * r_phi, 0.0, 0.0])
            return f

        def f(_s, z):
            th, ph = z[ITH], z[IPHI]
            fn = self.force(z, chart)
            p, c, q = self.branch(mode, th)
            return np.array([z[IW], k * co.b(th, ph) + p * fn, k * ph, c * fn,
                             k * co.a(th, ph) + q * fn, k * z[IV]])
        return f

    def events(self, mode: Mode, chart: str, sections: Sequence[Section], seg_ref):
        co, eps, tol = self.coeffs, self.eps, self.tol
        ztol = tol.zero_tol
        y_scale = eps * eps if chart == "t" else eps
        f_scale = eps if chart == "tau" else 1.0
        out: list[_EventFn] = []
        h = lambda _s, z: self.law.h(z[IY] / (eps if chart == "t" else 1.0), z[IW], self.delta)
        if mode is Mode.FREE_FLIGHT:
            out.append(_EventFn(EventKind.CONTACT_ONSET, lambda _s, z: z[IY], -1.0, ztol * y_scale,
                                name="surface", dfn=lambda _s, z: z[IW]))
            out.append(_EventFn(EventKind.CONTACT_ONSET, h, +1.0, ztol * eps,
                                guard=lambda z: z[IY] < 0.0, name="bracket"))
        else:
            out.append(_EventFn(EventKind.CONTACT_LOSS, h, -1.0, ztol * eps, name="bracket"))
            out.append(_EventFn(EventKind.CONTACT_LOSS, lambda _s, z: z[IY], +1.0,
                                ztol * y_scale, name="surface"))
        if mode is Mode.SLIP_POS:
            out.append(_EventFn(EventKind.STICK_ONSET, lambda _s, z: z[IV], -1.0, tol.stick_band,
                                name="v"))
        elif mode is Mode.SLIP_NEG:
            out.append(_EventFn(EventKind.STICK_ONSET, lambda _s, z: z[IV], +1.0, tol.stick_band,
                                name="v"))
        elif mode is Mode.STICK:
            k = 1.0 if chart == "t" else eps
            out.append(_EventFn(
                EventKind.FOLD_EXIT,
                lambda _s, z: k * co.a(z[ITH], z[IPHI]) + co.q_plus(z[ITH]) * self.force(z, chart),
                +1.0, ztol * f_scale, name="pos"))
            out.append(_EventFn(
                EventKind.FOLD_EXIT,
                lambda _s, z: k * co.a(z[ITH], z[IPHI]) + co.q_minus(z[ITH]) * self.force(z, chart),
                -1.0, ztol * f_scale, name="neg"))
        for sec in sections:
            def g(s, z, sec=sec):
                seg = seg_ref[0]
                t, x = seg.to_physical(s, z)
                return sec.fn(HybridState.from_array(x, t))
            out.append(_EventFn(EventKind.USER_SECTION, g, sec.direction, ztol * y_scale,
                                terminal=sec.terminal, name=sec.name))
        return out

    # mode selection ------------------------------------------------------

    def contact_mode(self, x: np.ndarray) -> Mode:
        v = x[IV]
        if v > self.tol.stick_band:
            return Mode.SLIP_POS
        if v < -self.tol.stick_band:
            return Mode.SLIP_NEG
        st = HybridState.from_array(x)
        if sticking_condition(st, self.coeffs, self.comp, self.law):
            return Mode.STICK
        fn = normal_force(st.y, st.w, self.comp, self.law)
        a = self.coeffs.a(st.theta, st.phi)
        return Mode.SLIP_POS if a + self.coeffs.q_plus(st.theta) * fn > 0.0 else Mode.SLIP_NEG

    def initial_mode(self, x: np.ndarray) -> Mode:
        y, w = x[IY], x[IW]
        if y > 0.0:
            return Mode.FREE_FLIGHT
        hv = self.law.h(y / self.eps, w, self.delta)
        if hv < 0.0:
            return Mode.FREE_FLIGHT
        if hv == 0.0:
            # on the bracket boundary: contact iff the free-flight motion raises h
            b = self.coeffs.b(x[ITH], x[IPHI])
            dstep = 1e-7
            h_ahead = self.law.h((y + w * dstep + 0.5 * b * dstep ** 2) / self.eps,
                                 w + b * dstep, self.delta)
            if not h_ahead > 0.0:
                return Mode.FREE_FLIGHT
        return self.contact_mode(x)


def integrate(state0: HybridState, mode0: Mode | None, coeffs: BodyCoefficients,
              compliance: ComplianceParams, t_end: float,
              tolerances: Tolerances = Tolerances(), law: ComplianceLaw = LINEAR,
              sections: Iterable[Section] = ()) -> Trajectory:
    """Integrate the hybrid system from ``state0`` until ``t_end`` or a terminal section.

    ``mode0=None`` infers the mode from the state.  Raises
    :class:`StepUnderflowError`, :class:`EventLoopError` or :class:`NonFiniteError`.
    """
    if not state0.is_finite():
        raise NonFiniteError(f"initial state is not finite: {state0}")
    tol = tolerances
    sections = list(sections)
    sysm = _System(coeffs, compliance, law, tol)
    x = state0.as_array()
    t = state0.t
    mode = sysm.initial_mode(x) if mode0 is None else mode0
    if mode is Mode.STICK:
        x[IV] = 0.0
    segments: list[Segment] = []
    events: list[Event] = []
    recent: deque[float] = deque()
    terminated_by = "t_end"
    eps = compliance.epsilon

    while True:
        chart = sysm.chart_for(mode)
        seg = Segment(mode, chart, t, eps if chart == "tau" else 1.0, eps)
        seg_ref = [seg]
        segments.append(seg)
        s0, z0 = seg.from_physical(t, x)
        s_end = (t_end - t) / seg.scale
        evs = sysm.events(mode, chart, sections, seg_ref)
        atol = np.full(6, tol.atol)
        if chart == "t":
            atol[IY] = tol.atol * min(1.0, eps * eps)
            atol[IW] = tol.atol * min(1.0, eps)
        else:
            atol[IY] = tol.atol * min(1.0, eps)

        def record_nonterminal(s, z, ev, seg=seg, mode=mode):
            tt, xx = seg.to_physical(s, z)
            events.append(Event(EventKind.USER_SECTION, tt, HybridState.from_array(xx, tt),
                                mode, mode, tol.event_tol * seg.scale, ev.name))

        hit = _integrate_segment(sysm.rhs(mode, chart), s0, z0, s_end, evs, tol.rtol, atol,
                                 tol.event_tol, tol.max_steps, seg, record_nonterminal)
        if hit is None:
            break
        s_ev, z_ev, ev = hit
        t, x = seg.to_physical(s_ev, z_ev)
        err = tol.event_tol * seg.scale

        if ev.kind is EventKind.USER_SECTION:
            events.append(Event(ev.kind, t, HybridState.from_array(x, t), mode, None, err, ev.name))
            terminated_by = ev.name
            break

        kind = ev.kind
        if kind is EventKind.CONTACT_ONSET:
            if ev.name == "surface":
                x[IY] = 0.0
            new_mode = sysm.contact_mode(x)
            if new_mode is Mode.STICK:
                x[IV] = 0.0
        elif kind is EventKind.CONTACT_LOSS:
            new_mode = Mode.FREE_FLIGHT
        elif kind is EventKind.STICK_ONSET:
            x[IV] = 0.0
            st = HybridState.from_array(x, t)
            if sticking_condition(st, coeffs, compliance, law):
                new_mode = Mode.STICK
            else:
                kind = EventKind.SLIP_REVERSAL
                new_mode = Mode.SLIP_NEG if mode is Mode.SLIP_POS else Mode.SLIP_POS
        elif kind is EventKind.FOLD_EXIT:
            a = coeffs.a(x[ITH], x[IPHI])
            if abs(a) < 1e-12:
                warnings.warn("fold exit with a = 0: degenerate case, using the a > 0 branch",
                              RuntimeWarning, stacklevel=2)
            new_mode = Mode.SLIP_POS if ev.name == "pos" else Mode.SLIP_NEG
        else:  # pragma: no cover
            raise AssertionError(kind)

        events.append(Event(kind, t, HybridState.from_array(x, t), mode, new_mode, err, ev.name))
        recent.append(t)
        while recent and recent[0] < t - 1.0:
            recent.popleft()
        if len(recent) > tol.max_events_per_unit_time:
            raise EventLoopError(
                f"{len(recent)} events within one time unit before t={t:.6g}")
        mode = new_mode
        if t >= t_end:
            break

    return Trajectory(segments, events, coeffs, compliance, law, terminated_by)


# ---------------------------------------------------------------------------
# zoomed-chart integration for phase portraits and the separatrix


@dataclass
class Kappa1Orbit:
    s: np.ndarray
    z: np.ndarray
    outcome: str  # "lift_off", "compressed", "escaped", "time_limit"


def integrate_kappa1(z0: Sequence[float], coeffs: BodyCoefficients, delta: float,
                     epsilon: float = 0.0, s_end: float = 50.0, y_floor: float = -1e3,
                     y_ceiling: float = math.inf, backward: bool = False, rtol: float = 1e-10, atol: float = 1e-12,
                     max_steps: int = 100_000) -> Kappa1Orbit:
    """Integrate the zoomed chart from ``z0 = (y1, w1, theta, phi, v)``.

    Stops on an upward return to ``y1 = 0`` ("lift_off"), on reaching
    ``y1 = y_floor`` ("compressed", the orbit has left the zoom and undergoes
    IWC), on reaching ``y1 = y_ceiling`` ("escaped") or at ``s_end``.  The bracket switch is handled as a restart event.
    ``backward=True`` follows the reversed field.
    """
    sign = -1.0 if backward else 1.0

    def rhs(_s, z):
        return sign * kappa1_field(z, coeffs, delta, epsilon)

    s0, z = 0.0, np.array(z0, dtype=float)
    ss, zs = [s0], [z.copy()]
    first = True
    for _ in range(1000):
        evs = [
            _EventFn(EventKind.CONTACT_LOSS, lambda _s, z: -z[0] - delta * z[1], 0.0, 1e-13,
                     guard=lambda z: z[0] <= 0.0, name="bracket"),
            _EventFn(EventKind.USER_SECTION, lambda _s, z: z[0], 0.0, 1e-13, name="surface"),
            _EventFn(EventKind.USER_SECTION, lambda _s, z: z[0] - y_floor, -1.0, 1e-13,
                     name="floor"),
        ]
        if math.isfinite(y_ceiling):
            evs.append(_EventFn(EventKind.USER_SECTION, lambda _s, z: z[0] - y_ceiling, +1.0,
                                1e-13, name="ceiling"))
        seg = Segment(Mode.SLIP_POS, "t", 0.0, 1.0, 1.0)
        hit = _integrate_segment(rhs, s0, z, s_end, evs, rtol, atol, 1e-13, max_steps, seg)
        ss.extend(seg.s[1:])
        zs.extend(seg.z[1:])
        if hit is None:
            return Kappa1Orbit(np.array(ss), np.array(zs), "time_limit")
        s0, z, ev = hit
        if ev.name == "floor":
            return Kappa1Orbit(np.array(ss), np.array(zs), "compressed")
        if ev.name == "ceiling":
            return Kappa1Orbit(np.array(ss), np.array(zs), "escaped")
        if ev.name == "surface":
            rising = sign * z[1] > 0.0
            if rising and not (first and s0 == 0.0):
                return Kappa1Orbit(np.array(ss), np.array(zs), "lift_off")
        first = False
    raise EventLoopError("too many switching events in the zoomed chart")
