"""1D Fokker-Planck solver for the slow variable in the effective potential.

    dW/dt = d/dQ ( W dU_b/dQ ) + D d2W/dQ2 ,   D = (kappa+gamma)/2 (n_T + 1/2)

Flux-conservative discretization with exponential-fitting (Chang-Cooper)
interface weights built from exact potential differences, so the
discrete stationary solution is exp(-U/D) on the nodes.  Implicit time
stepping, one tridiagonal solve per step: unconditionally stable,
positivity-preserving, probability-conserving to solver roundoff with
the zero-flux (reflecting) boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import (GridTooCoarse, NegativeDensity, NoBarrier,
                     NoExponentialRegime)
from .potential import OperatingPoint, PotentialProfile, extrema, potential


@dataclass
class DensityProfile:
    """Probability density W(Q) on a uniform grid at one time."""

    q_grid: np.ndarray
    w_values: np.ndarray
    time: float

    @property
    def spacing(self) -> float:
        return float(self.q_grid[1] - self.q_grid[0])

    def norm(self) -> float:
        return float(np.trapezoid(self.w_values, self.q_grid))

    def variance(self) -> float:
        w = self.w_values / self.norm()
        mean = np.trapezoid(self.q_grid * w, self.q_grid)
        return float(np.trapezoid((self.q_grid - mean) ** 2 * w, self.q_grid))


@dataclass(frozen=True)
class FPConfig:
    """Grid, timestep, switching threshold and diffusion constant."""

    n_points: int
    q_extent: float
    dt: float
    q_threshold: float
    diffusion: float

    def __post_init__(self):
        if self.q_threshold >= self.q_extent:
            raise ValueError("q_threshold must lie inside the grid")
        if self.diffusion <= 0.0:
            raise ValueError("diffusion must be positive")


def config_for(op: OperatingPoint, n_points: int = 2049, dt: float = 0.5e-9,
               q_threshold: float | None = None,
               extent_factor: float = 1.5) -> FPConfig:
    """Defaults anchored on the potential landscape of an operating point.

    Extent covers 1.5x the outer-minimum location (re-trapping wells
    stay on the grid); the default threshold is the barrier top, the
    natural separatrix.
    """
    ext = extrema(op)
    outer = [abs(q) for q, _, k in ext if k == "min" and q != 0.0]
    tops = [abs(q) for q, _, k in ext if k == "max" and q != 0.0]
    span = extent_factor * (max(outer) if outer else 10.0)
    if q_threshold is None:
        q_threshold = max(tops) if tops else 0.5 * span
    return FPConfig(n_points=n_points, q_extent=span, dt=dt,
                    q_threshold=q_threshold, diffusion=op.diffusion)


def initial_density(cfg: FPConfig, variance: float) -> DensityProfile:
    """Stationary Gaussian of the unpumped potential, centered at Q = 0."""
    q = np.linspace(-cfg.q_extent, cfg.q_extent, cfg.n_points)
    w = np.exp(-0.5 * q * q / variance)
    w /= np.trapezoid(w, q)
    return DensityProfile(q_grid=q, w_values=w, time=0.0)


def sample_potential(op: OperatingPoint, cfg: FPConfig,
                     probe_tilt: float = 0.0) -> PotentialProfile:
    """Potential sampled on the solver grid (keeps U and W co-located)."""
    q = np.linspace(-cfg.q_extent, cfg.q_extent, cfg.n_points)
    return PotentialProfile(q_grid=q, u_values=potential(q, op, probe_tilt),
                            extrema=extrema(op) if probe_tilt == 0.0 else [],
                            tilt=probe_tilt)


class _Stepper:
    """Prebuilt banded implicit operator for one (potential, dt) pair."""

    def __init__(self, u: np.ndarray, h: float, cfg: FPConfig):
        d = cfg.diffusion
        w_if = np.diff(u) / d                      # cell Peclet numbers
        pe = np.max(np.abs(w_if))
        if pe > 2.0:
            raise GridTooCoarse(
                f"cell Peclet number {pe:.2f} > 2; refine the grid or "
                f"shrink the extent")
        # Chang-Cooper interface weight: delta = 1/(1-e^-w) - 1/w  (w != 0)
        with np.errstate(over="ignore"):
            small = np.abs(w_if) < 1e-8
            delta = np.empty_like(w_if)
            ws = w_if[~small]
            delta[~small] = 1.0 / (1.0 - np.exp(-ws)) - 1.0 / ws
            delta[small] = 0.5 + w_if[small] / 12.0
        a_if = w_if * d / h                        # drift coefficient U' at interfaces

        n = len(u)
        doh = d / h
        lower = np.zeros(n)
        diag = np.zeros(n)
        upper = np.zeros(n)
        # interface i+1/2 contributes +G/h to row i and -G/h to row i+1
        g_self = (a_if * (1.0 - delta) - doh) / h      # dG_{i+1/2}/dW_i / h
        g_next = (a_if * delta + doh) / h              # dG_{i+1/2}/dW_{i+1} / h
        diag[:-1] += g_self
        upper[1:] = g_next                             # stored banded-style
        diag[1:] -= g_next
        lower[:-1] = -g_self                           # row i+1, column i
        # banded matrix for I - dt*M
        dt = cfg.dt
        self.ab = np.zeros((3, n))
        self.ab[0, 1:] = -dt * upper[1:]
        self.ab[1, :] = 1.0 - dt * diag
        self.ab[2, :-1] = -dt * lower[:-1]
        self.dt = dt

    def step(self, w: np.ndarray) -> np.ndarray:
        return solve_banded((1, 1), self.ab, w)


def evolve(w0: DensityProfile, potential_profile: PotentialProfile,
           cfg: FPConfig, t_final: float,
           snapshot_times=()) -> tuple[DensityProfile, list[DensityProfile]]:
    """Advance the density to ``t_final``; optionally keep snapshots.

    ``w0`` must be normalized and sampled on the same grid as the
    potential.  Returns (final density, snapshots at the requested
    times).  Raises :class:`NegativeDensity` if the scheme ever
    produces values below -1e-12 and :class:`GridTooCoarse` when any
    cell Peclet number exceeds 2.
    """
    if len(w0.q_grid) != len(potential_profile.q_grid):
        raise ValueError("density and potential grids differ")
    h = w0.spacing
    stepper = _Stepper(np.asarray(potential_profile.u_values, dtype=float),
                       h, cfg)
    n_steps = int(round((t_final - w0.time) / cfg.dt))
    snap_steps = {int(round((t - w0.time) / cfg.dt)): t for t in snapshot_times}
    w = w0.w_values.copy()
    snaps = []
    if 0 in snap_steps:
        snaps.append(DensityProfile(w0.q_grid, w.copy(), w0.time))
    for step in range(1, n_steps + 1):
        w = stepper.step(w)
        if step % 64 == 0 or step == n_steps:
            if w.min() < -1e-12:
                raise NegativeDensity(f"min W = {w.min():.3g} at step {step}")
        if step in snap_steps:
            snaps.append(DensityProfile(w0.q_grid, w.copy(),
                                        snap_steps[step]))
    return DensityProfile(w0.q_grid, w, w0.time + n_steps * cfg.dt), snaps


def _inside_mass(q: np.ndarray, w: np.ndarray, q_th: float) -> float:
    """Trapezoid of w over [-q_th, q_th] with linear edge interpolation."""
    lo, hi = -q_th, q_th
    inner = (q > lo) & (q < hi)
    qs = q[inner]
    ws = w[inner]
    # interpolated endpoint values
    w_lo = np.interp(lo, q, w)
    w_hi = np.interp(hi, q, w)
    qq = np.concatenate(([lo], qs, [hi]))
    ww = np.concatenate(([w_lo], ws, [w_hi]))
    return float(np.trapezoid(ww, qq))


def survival_probability(snapshots, q_th: float):
    """S(t) = integral of W over |Q| < q_th for each snapshot."""
    out = []
    for s in snapshots:
        if q_th > s.q_grid[-1]:
            raise ValueError("q_th outside grid")
        out.append((s.time, _inside_mass(s.q_grid, s.w_values, q_th)))
    return out


@dataclass
class EscapeRateFit:
    gamma: float          # 1/s
    intercept: float
    r_squared: float
    window: tuple         # (S_low, S_high) actually used


_CANDIDATE_WINDOWS = [(0.2, 0.9), (0.3, 0.9), (0.2, 0.8), (0.4, 0.9),
                      (0.3, 0.8), (0.5, 0.9), (0.2, 0.7)]


def escape_rate(survival, r2_min: float = 0.99) -> EscapeRateFit:
    """Exponential-decay rate from a survival curve.

    Linear least squares of ln S against t over the window where S is
    inside [0.2, 0.9]; narrower windows are tried if the primary one is
    not exponential enough.  Raises :class:`NoExponentialRegime` when no
    candidate window reaches R^2 >= ``r2_min`` with at least 10 points.
    """
    pts = np.asarray([(t, s) for t, s in survival if 0.0 < s <= 1.0])
    if len(pts) < 10:
        raise NoExponentialRegime("fewer than 10 usable survival points")
    t, s = pts[:, 0], pts[:, 1]
    best = None
    for lo, hi in _CANDIDATE_WINDOWS:
        sel = (s >= lo) & (s <= hi)
        if sel.sum() < 10:
            continue
        x, y = t[sel], np.log(s[sel])
        slope, icpt = np.polyfit(x, y, 1)
        resid = y - (slope * x + icpt)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 0.0
        fit = EscapeRateFit(gamma=-slope, intercept=icpt, r_squared=r2,
                            window=(lo, hi))
        if r2 >= r2_min:
            return fit
        if best is None or r2 > best.r_squared:
            best = fit
    if best is None:
        raise NoExponentialRegime("no candidate window had 10 points")
    raise NoExponentialRegime(
        f"best window {best.window} has R^2 = {best.r_squared:.4f} < {r2_min}")


@dataclass
class DetectionProbabilities:
    p_click: float
    p_dark: float
    p_ideal: float
    survival_on: list
    survival_off: list


def detection_probabilities(op: OperatingPoint, b_mag: float, tau_p: float,
                            cfg: FPConfig, probe_window=None,
                            n_snapshots: int = 60) -> DetectionProbabilities:
    """Click, dark and dark-corrected probabilities over the sensing window.

    Two evolutions of the same initial state: probe off, and probe on
    with the potential tilted by sqrt(2 kappa) |b| during
    ``probe_window`` (the whole pump interval when not given).  The
    sensing time is the pump duration ``tau_p``:

        P_click = 1 - int_{-qth}^{qth} W_b(Q, tau_p) dQ
        p_dark  = same with b = 0
        p_ideal = (P_click - p_dark) / (1 - p_dark)
    """
    tilt_mag = math.sqrt(2.0 * op.kappa) * b_mag
    if probe_window is None:
        probe_window = (0.0, tau_p)
    t_on, t_off = probe_window
    if not 0.0 <= t_on <= t_off <= tau_p:
        raise ValueError("probe window must lie inside the sensing interval")

    u_flat = sample_potential(op, cfg, 0.0)
    u_tilt = sample_potential(op, cfg, tilt_mag)
    w_init = initial_density(cfg, op.n_thermal + 0.5)

    def run(tilted: bool):
        snaps_all = []
        times = np.linspace(0.0, tau_p, n_snapshots + 1)
        w = w_init
        stages = [(u_flat, t_on), (u_tilt if tilted else u_flat, t_off),
                  (u_flat, tau_p)]
        for u_prof, t_end in stages:
            if t_end <= w.time:
                continue
            stage_snaps = [t for t in times if w.time < t <= t_end]
            w, snaps = evolve(w, u_prof, cfg, t_end, snapshot_times=stage_snaps)
            snaps_all.extend(snaps)
        return w, snaps_all

    w_on, snaps_on = run(tilted=b_mag > 0.0)
    w_off, snaps_off = run(tilted=False)
    p_click = 1.0 - _inside_mass(w_on.q_grid, w_on.w_values, cfg.q_threshold)
    p_dark = 1.0 - _inside_mass(w_off.q_grid, w_off.w_values, cfg.q_threshold)
    p_click = min(max(p_click, 0.0), 1.0)
    p_dark = min(max(p_dark, 0.0), 1.0)
    p_ideal = (p_click - p_dark) / (1.0 - p_dark) if p_dark < 1.0 else 0.0
    return DetectionProbabilities(
        p_click=p_click, p_dark=p_dark, p_ideal=p_ideal,
        survival_on=survival_probability(snaps_on, cfg.q_threshold),
        survival_off=survival_probability(snaps_off, cfg.q_threshold))


def detection_p0_surface(op: OperatingPoint, n_bars, q_thresholds,
                         tau_p: float, cfg: FPConfig, probe_window,
                         tau: float | None = None) -> dict:
    """No-click probability P_0(n_bar, q_th) over a photon-number grid.

    One pair of staged evolutions per n_bar value; the final density is
    integrated inside every requested threshold, so a full threshold
    sweep costs no extra solves.  Returns a map (n_bar, q_th) -> P_0.
    """
    t_on, t_off = probe_window
    if tau is None:
        tau = t_off - t_on
    u_flat = sample_potential(op, cfg, 0.0)
    w_init = initial_density(cfg, op.n_thermal + 0.5)
    out = {}
    for nb in n_bars:
        b = math.sqrt(nb / tau) if nb > 0.0 else 0.0
        tilt = math.sqrt(2.0 * op.kappa) * b
        u_tilt = sample_potential(op, cfg, tilt) if tilt > 0.0 else u_flat
        w = w_init
        for u_prof, t_end in ((u_flat, t_on), (u_tilt, t_off),
                              (u_flat, tau_p)):
            if t_end > w.time:
                w, _ = evolve(w, u_prof, cfg, t_end)
        for q_th in q_thresholds:
            out[(nb, q_th)] = _inside_mass(w.q_grid, w.w_values, q_th)
    return out


def kramers_rate(potential_profile: PotentialProfile, diffusion: float):
    """High-barrier escape rate from the central well, per Kramers.

        rate = (1/2pi) sqrt(U''(0) |U''(Q_top)|) exp(-[U(Q_top)-U(0)]/D)

    summed over both barriers of the sampled profile (each side uses its
    own barrier height, so a tilted profile gives asymmetric rates).
    Returns (total rate, per-side dict).  Valid asymptotically for
    barriers well above D; the low-barrier breakdown is documented in
    the tests.  Raises :class:`NoBarrier` without a flanking maximum.
    """
    q = np.asarray(potential_profile.q_grid, dtype=float)
    u = np.asarray(potential_profile.u_values, dtype=float)
    h = q[1] - q[0]
    du = np.gradient(u, h)
    d2u = np.gradient(du, h)

    i0 = int(np.argmin(np.abs(q)))
    # walk to the local minimum near the center
    while 0 < i0 < len(q) - 1 and u[i0 - 1] < u[i0]:
        i0 -= 1
    while 0 < i0 < len(q) - 1 and u[i0 + 1] < u[i0]:
        i0 += 1
    if d2u[i0] <= 0.0:
        raise NoBarrier("no central minimum in the profile")

    sides = {}
    for name, sl in (("right", range(i0 + 1, len(q) - 1)),
                     ("left", range(i0 - 1, 0, -1))):
        top = None
        for i in sl:
            if u[i] >= u[i - 1] and u[i] >= u[i + 1] and u[i] > u[i0]:
                top = i
                break
        if top is None:
            continue
        barrier = u[top] - u[i0]
        curv = abs(d2u[top])
        if curv == 0.0:
            continue
        sides[name] = (math.sqrt(d2u[i0] * curv) / (2.0 * math.pi)
                       * math.exp(-barrier / diffusion))
    if not sides:
        raise NoBarrier("no barrier maximum flanking the central well")
    return sum(sides.values()), sides
