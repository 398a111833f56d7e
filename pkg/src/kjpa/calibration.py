"""Photon-number calibration chain: gain, attenuation, error propagation.

The mean photon number of a probe pulse is fixed by three measurements:
the total system gain from a thermal-noise sweep of a hot load, the
input-line attenuation from a transmission measurement referenced to
that gain, and the pulse energy conversion n = tau P / (hbar omega).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar as HBAR, k as K_B

from .errors import InsufficientData


@dataclass
class CalibrationChain:
    """Gain/attenuation budget with per-component dB uncertainties."""

    gain_db: float
    t_preamp: float
    attenuation_db: float
    sigma_db_components: list = field(default_factory=list)

    def __post_init__(self):
        if db_to_linear(self.gain_db) <= 0.0:
            raise ValueError("gain must be positive")
        if not 0.0 < db_to_linear(self.attenuation_db) < 1.0:
            raise ValueError("attenuation must be a loss (linear value in (0, 1))")

    @property
    def sigma_db_total(self) -> float:
        return propagate_db_error(self.sigma_db_components)

    def to_json(self) -> dict:
        return {"gain_db": self.gain_db, "t_preamp_k": self.t_preamp,
                "attenuation_db": self.attenuation_db,
                "sigma_db_components": list(self.sigma_db_components),
                "sigma_db_total": self.sigma_db_total}


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass
class GainFit:
    gain_db: float
    gain_linear: float
    t_preamp: float              # K
    gain_db_err: float
    t_preamp_err: float          # K
    residuals: np.ndarray        # W/Hz


def fit_system_gain(points) -> GainFit:
    """System gain and amplifier noise temperature from a thermal sweep.

    ``points`` is a sequence of (temperature K, received PSD W/Hz) from
    a heated matched load.  The Rayleigh-Jeans noise model gives

        PSD / k_B = G (T + T_preamp)

    so a straight-line fit yields G from the slope and T_preamp from
    the intercept/slope ratio.  Standard errors come from the usual
    linear-regression formulas; with exactly two points the line is
    exact and the errors are reported as NaN.
    """
    pts = np.asarray(list(points), dtype=float)
    if len(pts) < 2:
        raise InsufficientData("need >= 2 (temperature, psd) points")
    t, psd = pts[:, 0], pts[:, 1]
    if np.ptp(t) <= 0.0:
        raise InsufficientData("temperature points have no spread")
    y = psd / K_B
    slope, intercept = np.polyfit(t, y, 1)
    if slope <= 0.0:
        raise ValueError("negative gain slope: check the input data")
    resid = y - (slope * t + intercept)
    n = len(t)
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        sxx = float(np.sum((t - t.mean()) ** 2))
        slope_err = math.sqrt(s2 / sxx)
        icpt_err = math.sqrt(s2 * (1.0 / n + t.mean() ** 2 / sxx))
        t_pre = intercept / slope
        t_pre_err = abs(t_pre) * math.sqrt((icpt_err / intercept) ** 2
                                           + (slope_err / slope) ** 2) \
            if intercept != 0.0 else icpt_err / slope
        gain_db_err = 10.0 * slope_err / (slope * math.log(10.0))
    else:
        t_pre = intercept / slope
        gain_db_err = float("nan")
        t_pre_err = float("nan")
    return GainFit(gain_db=linear_to_db(slope), gain_linear=float(slope),
                   t_preamp=float(t_pre), gain_db_err=gain_db_err,
                   t_preamp_err=t_pre_err, residuals=resid * K_B)


def attenuation(s21_db: float, gain_db: float) -> float:
    """Input-line attenuation A = S21 - G (dB), both referenced the same way."""
    return s21_db - gain_db


def photons_per_pulse(power_w: float, tau: float, omega: float) -> float:
    """Mean photon number n = tau P / (hbar omega) of a rectangular pulse."""
    if power_w < 0.0 or tau <= 0.0 or omega <= 0.0:
        raise ValueError("power must be >= 0, tau and omega positive")
    return tau * power_w / (HBAR * omega)


def probe_amplitude(power_w: float, omega: float) -> float:
    """Probe field amplitude |b| = sqrt(P / (hbar omega)) in sqrt(Hz)."""
    return math.sqrt(power_w / (HBAR * omega))


def propagate_db_error(components) -> float:
    """Combine independent dB uncertainties on multiplied quantities.

    Each dB sigma is converted to a relative error via the convention
    sigma_dB = 10 log10(1 + sigma/A) (the + branch; for small errors the
    sign does not matter), combined in quadrature, and converted back.
    """
    rel2 = 0.0
    for s in components:
        if s < 0.0:
            raise ValueError("dB sigmas must be non-negative")
        rel2 += (db_to_linear(s) - 1.0) ** 2
    return linear_to_db(1.0 + math.sqrt(rel2))
