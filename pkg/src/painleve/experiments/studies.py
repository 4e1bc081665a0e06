"""Parameter sweeps and numerical studies behind the CLI subcommands.

Every study returns :class:`Table` objects, which are the authoritative
outputs; plots are drawn from the CSV files they write.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .. import iwc
from ..compliance import ComplianceParams, get_law
from ..contact_model import (BodyCoefficients, BodyParams, DomainError, RegimeLabel,
                             RodCoefficients, classify_regime, theta_range)
from ..integrator import (EventKind, HybridState, Mode, Tolerances, Trajectory,
                          free_flight_flow, integrate, integrate_kappa1, surface_return)
from .config import ConfigError, Scenario, SweepSpec

WORKERS_ENV = "PAINLEVE_MAX_WORKERS"


def max_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return max(1, min(os.cpu_count() or 1, 8))
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def ordered_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """``map`` over a process pool; results keep the order of ``items``."""
    workers = max_workers() if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# ---------------------------------------------------------------------------
# tables


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


@dataclass
class Table:
    """Named columns of equal length; string columns stay strings."""
    columns: dict[str, list]
    meta: dict[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def __getitem__(self, name: str) -> np.ndarray:
        col = self.columns[name]
        if col and isinstance(col[0], str):
            return np.array(col, dtype=object)
        return np.asarray(col, dtype=float)

    def to_csv(self, path) -> Path:
        path = Path(path)
        names = list(self.columns)
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(names)
            for row in zip(*(self.columns[n] for n in names)):
                wr.writerow([_fmt(v) for v in row])
        return path

    @classmethod
    def from_csv(cls, path) -> "Table":
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            names = next(rd)
            rows = list(rd)
        cols: dict[str, list] = {n: [] for n in names}
        for row in rows:
            for n, v in zip(names, row):
                cols[n].append(v)
        for n, vals in cols.items():
            try:
                cols[n] = [float(v) for v in vals]
            except ValueError:
                pass
        return cls(cols)


def key_value_table(d: dict) -> Table:
    return Table({"key": list(d), "value": [_fmt(v) if not isinstance(v, str) else v
                                            for v in d.values()]})


# ---------------------------------------------------------------------------
# restitution sweeps


def _e_point(args):
    theta0, delta, alpha, mu = args
    co = RodCoefficients(BodyParams(alpha, mu))
    try:
        closed = iwc.e_closed_form(theta0, delta, co)
        numeric = iwc.e_numeric(theta0, delta, co)
        small = iwc.e_small_delta(theta0, delta, co)
        large = iwc.e_large_delta(theta0, delta, co) if delta > 0 else math.nan
    except (DomainError, iwc.NoExitError) as exc:
        return (math.nan,) * 4, f"theta0={theta0}, delta={delta}: {exc}"
    return (closed, numeric, small, large), None


def sweep_e(spec: SweepSpec, workers: int | None = None) -> Table:
    """Restitution along a ``theta0`` or ``delta`` grid with both asymptotes."""
    if spec.parameter == "epsilon":
        raise ConfigError("e(delta, theta0) does not depend on epsilon; use the convergence study")
    if spec.parameter == "theta0":
        pts = [(x, spec.delta, spec.alpha, spec.mu) for x in spec.grid]
    else:
        pts = [(spec.theta0, x, spec.alpha, spec.mu) for x in spec.grid]
    results = ordered_map(_e_point, pts, workers)
    cols = {"abscissa": list(spec.grid), "e_closed_form": [], "e_numeric": [],
            "e_small_delta": [], "e_large_delta": []}
    for (vals, err) in results:
        if err is not None:
            warnings.warn(f"sweep point outside the domain, recorded as NaN ({err})",
                          RuntimeWarning, stacklevel=2)
        for name, v in zip(list(cols)[1:], vals):
            cols[name].append(v)
    meta = {"parameter": spec.parameter, "theta0": str(spec.theta0), "delta": str(spec.delta)}
    return Table(cols, meta)


def theta_grid(params: BodyParams, n: int, include_ends: bool = True) -> np.ndarray:
    """``n`` points across the inconsistent interval ``[theta_1, theta_2]``."""
    t1, t2 = theta_range(params)
    g = np.linspace(t1, t2, n if include_ends else n + 2)
    return g if include_ends else g[1:-1]


# ---------------------------------------------------------------------------
# regime map


def phase_map(params: BodyParams, thetas: Sequence[float], phis: Sequence[float]
              ) -> tuple[Table, Table]:
    """Regime raster over ``(theta, phi)`` and the overlay curves.

    The overlays are the vertical lines ``theta_1``, ``theta_2``, the two
    branches ``phi = +-sqrt(csc theta)`` of ``b = 0`` and the point ``P``.
    """
    t1, t2 = theta_range(params)
    co = RodCoefficients(params)
    raster = {"theta": [], "phi": [], "regime": []}
    for th in thetas:
        for ph in phis:
            raster["theta"].append(float(th))
            raster["phi"].append(float(ph))
            raster["regime"].append(classify_regime(co, float(th), float(ph)).value)
    over = {"curve": [], "theta": [], "phi": []}

    def add(name, th, ph):
        over["curve"].append(name)
        over["theta"].append(float(th))
        over["phi"].append(float(ph))

    lo, hi = float(min(phis)), float(max(phis))
    for name, th in (("theta_1", t1), ("theta_2", t2)):
        add(name, th, lo)
        add(name, th, hi)
    for th in thetas:
        if 0.0 < th < math.pi:
            r = 1.0 / math.sqrt(math.sin(th))
            add("b0_upper", th, r)
            add("b0_lower", th, -r)
    add("P", t1, 1.0 / math.sqrt(math.sin(t1)))
    return Table(raster), Table(over)


# ---------------------------------------------------------------------------
# zoomed-chart portraits and the separatrix


def kappa1_portrait(params: BodyParams, theta0: float, phi0: float, delta: float,
                    w1_values: Iterable[float], s_end: float = 20.0, y_floor: float = -1.5,
                    y_ceiling: float = 0.5, manifold_extent: float = 1.0) -> tuple[Table, Table]:
    """Forward and backward layer orbits from ``(y1, w1) = (0, w1_0)``."""
    co = RodCoefficients(params)
    if not co.p_plus(theta0) < 0.0:
        raise DomainError(f"p_+({theta0}) >= 0: no inconsistent/indeterminate layer")
    orbits = {"orbit": [], "direction": [], "s": [], "y1": [], "w1": []}
    for k, w10 in enumerate(w1_values):
        for direction, backward in (("forward", False), ("backward", True)):
            o = integrate_kappa1([0.0, float(w10), theta0, phi0, 1.0], co, delta, 0.0,
                                 s_end=s_end, y_floor=y_floor, y_ceiling=y_ceiling,
                                 backward=backward)
            for s, z in zip(o.s, o.z):
                orbits["orbit"].append(float(k))
                orbits["direction"].append(direction)
                orbits["s"].append(-s if backward else s)
                orbits["y1"].append(z[0])
                orbits["w1"].append(z[1])
    over = {"curve": [], "y1": [], "w1": []}
    b = co.b(theta0, phi0)
    if b > 0:
        base = (theta0, phi0, 1.0)
        s_max = -b / co.p_plus(theta0)
        grid = np.linspace(s_max - manifold_extent, s_max, 101)
        for kind in ("gamma1_u", "gamma1_s"):
            pts = iwc.manifold_points(kind, base, delta, co, grid)
            over["curve"].extend([kind] * len(pts))
            over["y1"].extend(pts[:, 0])
            over["w1"].extend(pts[:, 1])
        c1 = iwc.manifold_points("C1", base, delta, co)
        over["curve"].append("C1")
        over["y1"].append(c1[0, 0])
        over["w1"].append(0.0)
        over["curve"].append("w1_star")
        over["y1"].append(0.0)
        over["w1"].append(iwc.separatrix_w1star(theta0, phi0, co, delta))
    return Table(orbits), Table(over)


def classify_kappa1(w10: float, theta0: float, phi0: float, coeffs: BodyCoefficients,
                    delta: float, epsilon: float = 0.0, s_end: float = 200.0) -> str:
    """``"iwc"`` if the zoomed orbit from ``(0, w10)`` escapes the zoom downward."""
    o = integrate_kappa1([0.0, w10, theta0, phi0, 1.0], coeffs, delta, epsilon,
                         s_end=s_end, y_floor=-1e3)
    if o.outcome == "compressed":
        return "iwc"
    if o.outcome == "lift_off":
        return "lift_off"
    return "undecided"


def classify_full(w10: float, theta0: float, phi0: float, v0: float, coeffs: BodyCoefficients,
                  compliance: ComplianceParams, t_end: float = 0.5) -> tuple[str, float]:
    """Full simulation from the grazing state ``w = eps w10``; O(1) return velocity means IWC."""
    eps = compliance.epsilon
    tr = integrate(HybridState(0.0, eps * w10, theta0, phi0, v0), None, coeffs, compliance,
                   t_end, sections=[surface_return()])
    w_ret = tr.final_state.w
    label = "iwc" if tr.terminated_by == "surface_return" and w_ret > math.sqrt(eps) else "lift_off"
    return label, w_ret


def separatrix_bisect(theta0: float, phi0: float, coeffs: BodyCoefficients, delta: float,
                      epsilon: float = 0.0, lo: float | None = None, hi: float | None = None,
                      tol: float = 1e-10, max_iter: int = 200,
                      classify: Callable[[float], str] | None = None) -> dict:
    """Bisect the grazing velocity that divides IWC (below) from lift-off (above)."""
    w_star = iwc.separatrix_w1star(theta0, phi0, coeffs, delta)
    lo = 2.0 * w_star if lo is None else lo
    hi = 0.0 if hi is None else hi
    if classify is None:
        classify = lambda w: classify_kappa1(w, theta0, phi0, coeffs, delta, epsilon)
    if classify(lo) != "iwc" or classify(hi) == "iwc":
        raise DomainError(f"bracket [{lo}, {hi}] does not straddle the separatrix")
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if classify(mid) == "iwc":
            lo = mid
        else:
            hi = mid
        it += 1
    threshold = 0.5 * (lo + hi)
    return {"threshold": threshold, "w1_star": w_star, "relative_error": abs(threshold / w_star - 1.0),
            "iterations": it, "epsilon": epsilon}


# ---------------------------------------------------------------------------
# IWC summaries and convergence


def summarize_iwc(tr: Trajectory) -> dict:
    """Contact interval, return state and the closed-form comparison of one trajectory.

    The closed form only holds for the linear compliance law; for other laws
    ``closed_form_applicable`` is 0 and the predicted value is NaN.
    """
    co, comp = tr.coeffs, tr.compliance
    contact = [s for s in tr.segments if s.mode.in_contact]
    out: dict = {"n_events": len(tr.events), "iwc": 0, "law": tr.law.name,
                 "closed_form_applicable": int(tr.law.is_linear)}
    out["modes"] = "|".join(s.mode.value for s in tr.segments)
    if not contact:
        out.update(contact_t0=math.nan, return_t=math.nan, duration=math.nan, theta0=math.nan,
                   v0=math.nan, w_return=math.nan, e_measured=math.nan, e_predicted=math.nan)
        return out
    first = contact[0]
    t0, x0 = first.to_physical(first.s[0], first.z[0])
    # IWC: a slip phase that is brought to rest and then sticks
    modes = [s.mode for s in contact]
    out["iwc"] = int(any(a in (Mode.SLIP_POS, Mode.SLIP_NEG) and b is Mode.STICK
                         for a, b in zip(modes, modes[1:])))
    ret = [e for e in tr.events if e.kind is EventKind.USER_SECTION and e.name == "surface_return"]
    if not ret:
        ret = [e for e in tr.events if e.kind is EventKind.CONTACT_LOSS and e.t >= t0]
    st = ret[0].state if ret else tr.final_state
    th0, ph0, v0 = float(x0[2]), float(x0[3]), float(x0[4])
    out.update(contact_t0=t0, return_t=st.t, duration=st.t - t0, theta0=th0, phi0=ph0, v0=v0,
               w_return=st.w, theta_return=st.theta, phi_return=st.phi, v_return=st.v)
    out["e_measured"] = st.w / v0 if v0 != 0 else math.nan
    pred = math.nan
    if tr.law.is_linear and co.p_plus(th0) < 0.0 and co.q_plus(th0) < 0.0:
        try:
            pred = iwc.e_closed_form(th0, comp.delta, co)
        except DomainError:
            pass
    out["e_predicted"] = pred
    return out


def _convergence_point(args):
    theta0, phi0, v0, delta, eps, alpha, mu, w_scale, tol = args
    co = RodCoefficients(BodyParams(alpha, mu))
    tr = integrate(HybridState(0.0, w_scale * eps, theta0, phi0, v0), None, co,
                   ComplianceParams(eps, delta), 10.0, tol, sections=[surface_return()])
    if tr.terminated_by != "surface_return":
        return None
    f = tr.final_state
    return f.t, f.w, f.theta, f.v


def convergence_study(theta0: float, phi0: float, v0: float, delta: float,
                      epsilons: Sequence[float], params: BodyParams = BodyParams(),
                      w_scale: float = 0.0, tolerances: Tolerances = Tolerances(),
                      workers: int | None = None) -> tuple[Table, dict]:
    """Return to ``y = 0`` from ``(0, w_scale eps, theta0, phi0, v0)`` for each ``eps``.

    The duration is fitted by ``T = C eps ln(1/eps)`` through the origin; the
    fit coefficient and ``R^2`` are returned with the per-eps rows.
    """
    co = RodCoefficients(params)
    e = iwc.e_closed_form(theta0, delta, co)
    pts = [(theta0, phi0, v0, delta, float(eps), params.alpha, params.mu, w_scale, tolerances)
           for eps in epsilons]
    res = ordered_map(_convergence_point, pts, workers)
    cols = {k: [] for k in ("epsilon", "duration", "w_return", "e", "err_e", "err_theta", "abs_v")}
    for eps, r in zip(epsilons, res):
        if r is None:
            raise DomainError(f"no return to y = 0 at eps={eps}")
        t, w, th, v = r
        cols["epsilon"].append(float(eps))
        cols["duration"].append(t)
        cols["w_return"].append(w)
        cols["e"].append(e)
        cols["err_e"].append(abs(w / v0 - e))
        cols["err_theta"].append(abs(th - theta0))
        cols["abs_v"].append(abs(v))
    fit = fit_log_duration(np.array(cols["epsilon"]), np.array(cols["duration"]))
    return Table(cols), fit


def fit_log_duration(eps: np.ndarray, duration: np.ndarray) -> dict:
    x = eps * np.log(1.0 / eps)
    c = float(x @ duration / (x @ x))
    resid = duration - c * x
    ss_tot = float(((duration - duration.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else math.nan
    return {"C": c, "r2": r2, "max_abs_residual": float(np.abs(resid).max())}


# ---------------------------------------------------------------------------
# two rods


def two_rod_initial_states(scn: Scenario) -> dict[str, HybridState]:
    """Initial states reached by running the grazing targets backward in free flight."""
    cfg = scn.two_rod
    eps = scn.compliance.epsilon
    out = {}
    for name, w1 in (("green", cfg.w1_green), ("blue", cfg.w1_blue)):
        graze = HybridState(0.0, eps * w1, cfg.theta, cfg.phi, cfg.v, 0.0, cfg.t_graze)
        s0 = free_flight_flow(graze, -cfg.t_graze)
        # the backward arc must stay above the surface to be a free-flight arc
        ts = np.linspace(0.0, cfg.t_graze, 201)[1:-1]
        if min(free_flight_flow(s0, t).y for t in ts) <= 0.0:
            raise DomainError(f"{name} backward arc touches the surface before t={cfg.t_graze}")
        out[name] = HybridState(s0.y, s0.w, s0.theta, s0.phi, s0.v, s0.x, 0.0)
    return out


def two_rod(scn: Scenario) -> tuple[dict[str, Trajectory], dict]:
    starts = two_rod_initial_states(scn)
    co = scn.body.coeffs()
    comp = scn.compliance.params()
    law = get_law(scn.compliance.law)
    trs = {name: integrate(s, None, co, comp, scn.t_end, scn.tolerances.tolerances(), law,
                           [surface_return(terminal=False)])
           for name, s in starts.items()}
    g, bl = starts["green"], starts["blue"]
    summary = {"initial_separation": float(np.linalg.norm(g.as_array() - bl.as_array())),
               "initial_y_green": g.y, "initial_y_blue": bl.y}
    for name, tr in trs.items():
        s = summarize_iwc(tr)
        for k in ("iwc", "contact_t0", "w_return", "e_measured"):
            summary[f"{name}_{k}"] = s[k]
        onset = tr.events_of(EventKind.CONTACT_ONSET)
        if onset:
            st = onset[0].state
            summary[f"{name}_graze_theta"] = st.theta
            summary[f"{name}_graze_phi"] = st.phi
            summary[f"{name}_graze_v"] = st.v
            summary[f"{name}_graze_w"] = st.w
        fs = tr.final_state
        summary[f"{name}_final_y"] = fs.y
    summary["final_separation"] = float(np.linalg.norm(
        trs["green"].final_state.as_array() - trs["blue"].final_state.as_array()))
    return trs, summary


# ---------------------------------------------------------------------------
# single scenarios


@dataclass
class RunResult:
    trajectory: Trajectory
    summary: dict


def run_scenario(scn: Scenario) -> RunResult:
    scn.validate()
    if scn.kind != "simulate":
        raise ConfigError(f"run_scenario handles kind = 'simulate', got {scn.kind!r}")
    sections = [surface_return()] if scn.stop_on_return else []
    tr = integrate(scn.initial.state(), None, scn.body.coeffs(), scn.compliance.params(),
                   scn.t_end, scn.tolerances.tolerances(), get_law(scn.compliance.law), sections)
    return RunResult(tr, summarize_iwc(tr))
