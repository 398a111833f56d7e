"""Effective potential of the slow quadrature and the phase-region map.

After adiabatic elimination of the fast quadrature, the slow variable Q
relaxes in

    U(Q) = [2/(|a| + a_c(0))] [ (a_c(D)^2 - |a|^2) Q^2/4
                                + (3 D K / 2) Q^4 + 3 K^2 Q^6 ]

with a_c(D) = sqrt(D^2 + (kappa+gamma)^2/4); a coherent probe of
amplitude |b| adds the linear tilt sqrt(2 kappa) |b| Q.  The sextic
circuit coefficient is excluded (negligible against the Kerr-squared
term); the Q^6 term above comes from the Kerr structure itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class OperatingPoint:
    """Dynamical parameters of the rotating-frame model (all rad/s).

    ``kerr`` must be negative; ``n_thermal`` is the thermal occupation
    entering the noise as n_T + 1/2.
    """

    delta: float
    alpha_mag: float
    theta_p: float
    kappa: float
    gamma: float
    kerr: float
    n_thermal: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0.0 or self.gamma <= 0.0:
            raise ValueError("kappa and gamma must be positive")
        if self.alpha_mag < 0.0:
            raise ValueError("alpha_mag must be non-negative")
        if self.kerr >= 0.0:
            raise ValueError("kerr must be negative")
        if self.n_thermal < 0.0:
            raise ValueError("n_thermal must be non-negative")

    @property
    def alpha_c0(self) -> float:
        """Critical pump amplitude at zero detuning, (kappa+gamma)/2."""
        return 0.5 * (self.kappa + self.gamma)

    @property
    def diffusion(self) -> float:
        """Slow-variable diffusion constant (kappa+gamma)/2 (n_T + 1/2)."""
        return 0.5 * (self.kappa + self.gamma) * (self.n_thermal + 0.5)


def critical_amplitude(delta: float, kappa: float, gamma: float) -> float:
    """Critical pump amplitude sqrt(delta^2 + (kappa+gamma)^2/4) (rad/s)."""
    if kappa + gamma <= 0.0:
        raise ValueError("kappa + gamma must be positive")
    return math.hypot(delta, 0.5 * (kappa + gamma))


def _coefficients(op: OperatingPoint) -> tuple[float, float, float]:
    """Polynomial coefficients (c2, c4, c6) of U = c2 Q^2 + c4 Q^4 + c6 Q^6."""
    a_c = critical_amplitude(op.delta, op.kappa, op.gamma)
    pref = 2.0 / (op.alpha_mag + op.alpha_c0)
    c2 = pref * (a_c**2 - op.alpha_mag**2) / 4.0
    c4 = pref * 1.5 * op.delta * op.kerr
    c6 = pref * 3.0 * op.kerr**2
    return c2, c4, c6


def potential(q, op: OperatingPoint, probe_tilt: float = 0.0):
    """Effective potential U_b(Q) in rad/s; ``q`` may be scalar or array.

    ``probe_tilt`` is sqrt(2 kappa) |b| (rad/s per unit Q); positive
    tilt raises the right barrier and lowers the left one.
    """
    q = np.asarray(q, dtype=float)
    c2, c4, c6 = _coefficients(op)
    q2 = q * q
    u = (c2 + (c4 + c6 * q2) * q2) * q2 + probe_tilt * q
    return u if u.ndim else float(u)


def potential_gradient(q, op: OperatingPoint, probe_tilt: float = 0.0):
    """dU_b/dQ, used by the Fokker-Planck drift and extrema checks."""
    q = np.asarray(q, dtype=float)
    c2, c4, c6 = _coefficients(op)
    q2 = q * q
    g = (2.0 * c2 + (4.0 * c4 + 6.0 * c6 * q2) * q2) * q + probe_tilt
    return g if g.ndim else float(g)


def probe_tilt(kappa: float, b_mag: float) -> float:
    """Linear tilt coefficient sqrt(2 kappa) |b| of the probed potential."""
    return math.sqrt(2.0 * kappa) * b_mag


def extrema(op: OperatingPoint) -> list[tuple[float, float, str]]:
    """Extrema of the tilt-free potential as (Q, U(Q), kind) triples.

    Q = 0 always; when |a| exceeds a_c(0) the outer minima sit at

        Q_min = sqrt[(delta + sqrt(|a|^2 - a_c(0)^2)) / (6|K|)]

    and for delta > 0 with |a| < a_c(delta) the barrier maxima at

        Q_max = sqrt[(delta - sqrt(|a|^2 - a_c(0)^2)) / (6|K|)].

    Entries whose closed forms are undefined in a region are simply
    absent.  Each point is classified by the sign of U''.
    """
    c2, c4, c6 = _coefficients(op)

    def curvature(q):
        q2 = q * q
        return 2.0 * c2 + (12.0 * c4 + 30.0 * c6 * q2) * q2

    def kind(q):
        return "min" if curvature(q) > 0.0 else "max"

    out = [(0.0, 0.0, kind(0.0))]
    disc = op.alpha_mag**2 - op.alpha_c0**2
    if disc > 0.0:
        root = math.sqrt(disc)
        six_k = 6.0 * abs(op.kerr)
        for sgn, name in ((op.delta + root, "outer"), (op.delta - root, "inner")):
            if sgn > 0.0:
                q = math.sqrt(sgn / six_k)
                for s in (-1.0, 1.0):
                    out.append((s * q, potential(s * q, op), kind(q)))
    out.sort(key=lambda t: t[0])
    return out


def numeric_extrema(op: OperatingPoint, probe_tilt: float = 0.0,
                    q_span: float | None = None, n_scan: int = 20001) -> list[tuple[float, float, str]]:
    """Extrema by bracketed root-finding on U'; oracle for the closed forms."""
    if q_span is None:
        q_span = 1.5 * _default_span(op)
    qs = np.linspace(-q_span, q_span, n_scan)
    g = potential_gradient(qs, op, probe_tilt)
    out = []
    for i in range(len(qs) - 1):
        if g[i] == 0.0 and qs[i] == 0.0:
            out.append(0.0)
        elif g[i] * g[i + 1] < 0.0:
            out.append(brentq(lambda q: potential_gradient(q, op, probe_tilt),
                              qs[i], qs[i + 1], xtol=1e-14, rtol=8.9e-16))
    c2, c4, c6 = _coefficients(op)

    def curvature(q):
        q2 = q * q
        return 2.0 * c2 + (12.0 * c4 + 30.0 * c6 * q2) * q2

    return [(q, float(potential(q, op, probe_tilt)),
             "min" if curvature(q) > 0.0 else "max") for q in out]


def classify_region(alpha_mag: float, delta: float, kappa: float,
                    gamma: float) -> str:
    """Phase-region label from the extremal structure of the potential.

    Returns one of ``monostable``, ``bistable_secondorder`` (delta <= 0,
    above threshold), ``tristable_firstorder`` (delta > 0, between the
    two critical lines) or ``bistable_above`` (delta > 0, above
    a_c(delta)).
    """
    a_c = critical_amplitude(delta, kappa, gamma)
    a_c0 = 0.5 * (kappa + gamma)
    if delta <= 0.0:
        return "bistable_secondorder" if alpha_mag > a_c else "monostable"
    if alpha_mag > a_c:
        return "bistable_above"
    if alpha_mag > a_c0:
        return "tristable_firstorder"
    return "monostable"


def _default_span(op: OperatingPoint) -> float:
    """Q scale covering the outer wells with margin in every region."""
    six_k = 6.0 * abs(op.kerr)
    candidates = [10.0]
    disc = op.alpha_mag**2 - op.alpha_c0**2
    if disc > 0.0 and op.delta + math.sqrt(disc) > 0.0:
        candidates.append(math.sqrt((op.delta + math.sqrt(disc)) / six_k))
    if op.delta > 0.0:
        candidates.append(math.sqrt(op.delta / six_k))
    return max(candidates)


@dataclass
class PotentialProfile:
    """Sampled potential on a uniform Q grid, with extrema and tilt."""

    q_grid: np.ndarray
    u_values: np.ndarray       # rad/s
    extrema: list
    tilt: float                # rad/s per unit Q

    @property
    def spacing(self) -> float:
        return float(self.q_grid[1] - self.q_grid[0])


def build_profile(op: OperatingPoint, probe_tilt: float = 0.0,
                  n_points: int = 4001, span_factor: float = 1.5) -> PotentialProfile:
    """Sample U_b on 4001 uniform points over +-1.5x the well span."""
    span = span_factor * _default_span(op)
    q = np.linspace(-span, span, n_points)
    u = potential(q, op, probe_tilt)
    ext = extrema(op) if probe_tilt == 0.0 else numeric_extrema(op, probe_tilt)
    return PotentialProfile(q_grid=q, u_values=u, extrema=ext, tilt=probe_tilt)
