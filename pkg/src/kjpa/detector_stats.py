"""Threshold-detector statistics: POVM model, efficiency, ROC, NEP.

A non-number-resolving (bucket) detector is described by the no-click
operator sum_n (1-eta)^n |n><n|; dark counts compose independently.
The photon-number dependence of the efficiency is captured
phenomenologically by eta_eps(n) = eta^(1/(1 + eps (n-1))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.optimize import least_squares

from .errors import (DomainError, FitDiverged, InconsistentCounts,
                     InvalidDistribution, MissingCalibration, ScaleMismatch)


@dataclass(frozen=True)
class DetectorModel:
    """Figures of merit of the threshold detector."""

    eta: float                 # single-photon efficiency at n_bar ~ 1
    epsilon: float             # saturation constant, << 1
    p_dark: float              # dark-count probability per cycle
    gamma_dark: float          # dark rate, 1/s
    tau: float                 # probe pulse duration, s
    omega: float               # photon angular frequency, rad/s

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be in [0, 1)")
        if not 0.0 <= self.p_dark < 1.0:
            raise ValueError("p_dark must be in [0, 1)")


@dataclass(frozen=True)
class ROCPoint:
    threshold: float
    true_positive: float
    false_positive: float


def fock_truncation(n_bar: float) -> int:
    """Poisson-tail-safe truncation: max(60, n_bar + 10 sqrt(n_bar))."""
    return max(60, int(math.ceil(n_bar + 10.0 * math.sqrt(max(n_bar, 1.0)))))


def coherent_distribution(n_bar: float, n_max: int | None = None) -> np.ndarray:
    """Poisson photon-number probabilities of a coherent state."""
    if n_max is None:
        n_max = fock_truncation(n_bar)
    n = np.arange(n_max + 1)
    logp = n * math.log(n_bar) - n_bar - np.cumsum(
        np.concatenate(([0.0], np.log(np.arange(1, n_max + 1))))) \
        if n_bar > 0.0 else None
    if n_bar == 0.0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
        return p
    return np.exp(logp)


def povm_no_click(photon_distribution, eta: float) -> float:
    """No-click probability sum_n (1-eta)^n P_n of the bucket detector.

    For a coherent distribution this equals exp(-eta n_bar); for a
    single photon it is 1 - eta.
    """
    p = np.asarray(photon_distribution, dtype=float)
    if np.any(p < 0.0) or p.sum() > 1.0 + 1e-9:
        raise InvalidDistribution("P_n must be non-negative and sum to <= 1")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must be in (0, 1]")
    n = np.arange(len(p))
    return float(np.sum((1.0 - eta) ** n * p))


def compose_with_dark(p_ideal: float, p_dark: float) -> tuple[float, float]:
    """Compose ideal click and independent dark-count probabilities.

        P_click    = p_ideal + p_dark - p_ideal p_dark
        P_no_click = 1 - P_click   ( = (1 - p_dark)(1 - p_ideal) )
    """
    if not 0.0 <= p_ideal <= 1.0 or not 0.0 <= p_dark <= 1.0:
        raise ValueError("probabilities must be in [0, 1]")
    p_click = p_ideal + p_dark - p_ideal * p_dark
    return p_click, 1.0 - p_click


def efficiency_from_counts(p_click: float, p_dark: float, n_bar: float) -> float:
    """Efficiency from the measured true-positive and dark probabilities.

        eta = (1/n_bar) ln[(1 - p_dark) / (1 - P_click)]
    """
    if n_bar <= 0.0 or p_click >= 1.0:
        raise ValueError("need n_bar > 0 and P_click < 1")
    if p_click <= p_dark:
        raise InconsistentCounts(
            f"P_click = {p_click:.4g} <= p_dark = {p_dark:.4g}")
    return math.log((1.0 - p_dark) / (1.0 - p_click)) / n_bar


def eta_eff(eta: float, epsilon: float, n_bar: float) -> float:
    """Photon-number-dependent efficiency eta^(1/(1 + eps (n_bar - 1)))."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must be in (0, 1]")
    denom = 1.0 + epsilon * (n_bar - 1.0)
    if denom <= 0.0:
        raise DomainError(f"1 + eps (n_bar - 1) = {denom:.3g} <= 0")
    return eta ** (1.0 / denom)


def roc_curve(record_on, record_off, thresholds):
    """ROC points (true positive vs false positive) over a threshold sweep.

    Returns (points, area_under_curve).  The endpoints (0,0) and (1,1)
    are included in the area integration.
    """
    if abs(getattr(record_on, "scale", 1.0)
           - getattr(record_off, "scale", 1.0)) > 1e-12:
        raise ScaleMismatch("records carry different readout scales")
    pts = [ROCPoint(threshold=float(th),
                    true_positive=record_on.click_fraction_at(th),
                    false_positive=record_off.click_fraction_at(th))
           for th in thresholds]
    fp = np.array([p.false_positive for p in pts])
    tp = np.array([p.true_positive for p in pts])
    order = np.argsort(fp)
    fp_s = np.concatenate(([0.0], fp[order], [1.0]))
    tp_s = np.concatenate(([0.0], tp[order], [1.0]))
    auc = float(np.trapezoid(tp_s, fp_s))
    return pts, auc


def optimize_threshold(record_on, record_off, thresholds):
    """Threshold maximizing P_1+ (1 - p_dark); ties go to the larger value.

    Returns (best threshold, objective values aligned with thresholds).
    """
    if abs(getattr(record_on, "scale", 1.0)
           - getattr(record_off, "scale", 1.0)) > 1e-12:
        raise ScaleMismatch("records carry different readout scales")
    thresholds = np.asarray(list(thresholds), dtype=float)
    obj = np.array([record_on.click_fraction_at(th)
                    * (1.0 - record_off.click_fraction_at(th))
                    for th in thresholds])
    best = np.flatnonzero(obj == obj.max())[-1]
    return float(thresholds[best]), obj


def fit_efficiency_curve(points):
    """Fit (eta, epsilon) of p_ideal = 1 - exp(-eta_eps(n) n) to data.

    ``points`` is a sequence of (n_bar, p_ideal) with n_bar > 0.
    Returns (eta, epsilon, residuals, eta_restricted) where the last
    entry is the epsilon = 0 restricted fit.
    """
    pts = np.asarray(list(points), dtype=float)
    if len(pts) < 3:
        raise FitDiverged("need at least 3 points")
    n, p = pts[:, 0], pts[:, 1]
    if np.any(n <= 0.0):
        raise ValueError("n_bar values must be positive")

    def model(theta):
        eta, eps = theta
        return 1.0 - np.exp(-np.array([eta_eff(eta, eps, x) for x in n]) * n)

    def resid(theta):
        if not (0.0 < theta[0] <= 1.0 and 0.0 <= theta[1] < 1.0):
            return np.full(len(n), 1e3)
        return model(theta) - p

    sol = least_squares(resid, x0=[0.7, 0.05], bounds=([1e-6, 0.0], [1.0, 0.999]))
    if not sol.success:
        raise FitDiverged(sol.message)
    eta, eps = sol.x

    def resid0(theta):
        return (1.0 - np.exp(-theta[0] * n)) - p

    sol0 = least_squares(resid0, x0=[0.7], bounds=([1e-6], [10.0]))
    return float(eta), float(eps), sol.fun, float(sol0.x[0])


def responsivity(model: DetectorModel) -> float:
    """Low-photon-number power responsivity (1/W).

        dP_1+/dPower |_{n=0} = eta_eps(0) tau / (hbar omega) (1 - p_dark)
    """
    return (eta_eff(model.eta, model.epsilon, 0.0) * model.tau
            / (HBAR * model.omega) * (1.0 - model.p_dark))


def nep(model: DetectorModel) -> float:
    """Noise-equivalent power sqrt(2 Gamma_dark) hbar omega / eta_eps(0)."""
    if model.gamma_dark < 0.0:
        raise ValueError("gamma_dark must be non-negative")
    return (math.sqrt(2.0 * model.gamma_dark) * HBAR * model.omega
            / eta_eff(model.eta, model.epsilon, 0.0))


def poisson_check(measured_p0: dict, eta_by_threshold: dict,
                  p_dark_by_threshold: dict, epsilon: float):
    """Compare measured P_0(n_bar, threshold) against the Poisson model.

        P_0 = exp(-eta_eps(n_bar) n_bar) (1 - p_dark)

    with eta extracted per threshold at n_bar = 1.  ``measured_p0`` maps
    (n_bar, threshold) -> P_0.  Returns (model map, deviation map) with
    deviations |measured - model|.  Raises :class:`MissingCalibration`
    when a threshold lacks its extracted efficiency.
    """
    model = {}
    deviation = {}
    for (n_bar, th), meas in measured_p0.items():
        if th not in eta_by_threshold:
            raise MissingCalibration(f"no efficiency for threshold {th}")
        if th not in p_dark_by_threshold:
            raise MissingCalibration(f"no dark probability for threshold {th}")
        eta = eta_by_threshold[th]
        p_dark = p_dark_by_threshold[th]
        p0 = math.exp(-eta_eff(eta, epsilon, n_bar) * n_bar) * (1.0 - p_dark) \
            if n_bar > 0.0 else (1.0 - p_dark)
        model[(n_bar, th)] = p0
        deviation[(n_bar, th)] = abs(meas - p0)
    return model, deviation


def figures_of_merit_summary(model: DetectorModel) -> dict:
    """JSON-ready summary used by the CLI and demos."""
    return {"eta": model.eta, "epsilon": model.epsilon,
            "p_dark": model.p_dark,
            "gamma_dark_hz": model.gamma_dark,
            "tau_s": model.tau,
            "omega_hz": model.omega / (2.0 * math.pi),
            "eta_eff_0": eta_eff(model.eta, model.epsilon, 0.0),
            "nep_w_per_sqrthz": nep(model),
            "responsivity_per_w": responsivity(model)}
