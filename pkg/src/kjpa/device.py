"""Reference parameters of the measured device.

Two circuit parameter sets are provided: the values extracted from the
flux-sweep fit of the fabricated device, and the as-designed values.
The operating point used for photon detection (flux bias, detuning,
pump strength, linewidths) is collected here as well so that demos and
tests share one source of truth.
"""

import math

from .circuit import CircuitParams
from .potential import OperatingPoint

TWO_PI = 2.0 * math.pi

# Junction properties (single 1x1 um^2 Nb junction): critical current and
# plasma frequency; these fix the SQUID capacitance C_S ~ 192.4 fF.
I_C = 8e-6                      # A
OMEGA_PL = TWO_PI * 80e9        # rad/s
L_LOOP = 4.846e-12              # H, from electromagnetic simulation (input here)


def fitted_device() -> CircuitParams:
    """Circuit constants extracted from the DC flux-sweep fit."""
    return CircuitParams(L_cav=2.023e-9, C_cav=809.2e-15,
                         I_c=I_C, omega_pl=OMEGA_PL, L_loop=L_LOOP)


def designed_device() -> CircuitParams:
    """Circuit constants from the layout design values."""
    return CircuitParams(L_cav=1.917e-9, C_cav=744.6e-15,
                         I_c=I_C, omega_pl=OMEGA_PL, L_loop=L_LOOP)


# Operating point for detection.
FLUX_OP = 0.3618                  # Phi_DC / Phi_0
F_OP = 6.042e9                    # measured resonance at the operating flux, Hz
OMEGA_OP = TWO_PI * F_OP          # rad/s
KAPPA = TWO_PI * 4.44e6           # external coupling, rad/s
GAMMA = TWO_PI * 2.30e6           # internal loss, rad/s
DELTA_OP = TWO_PI * 0.7e6         # detuning at the operating point, rad/s
ALPHA_RATIO_OP = 0.51             # |alpha| / (kappa + gamma)
KERR_OP = -TWO_PI * 208.0         # Kerr coefficient at the operating flux, rad/s

# Measured detector figures used as cross-check targets.
GAMMA_DARK = 0.167e6              # dark-count rate, 1/s
ETA = 0.73                        # single-photon efficiency at n_bar ~ 1
EPSILON = 0.1                     # efficiency saturation constant


def operating_point(alpha_ratio: float = ALPHA_RATIO_OP,
                    n_thermal: float = 0.0,
                    delta: float = DELTA_OP,
                    kerr: float = KERR_OP) -> OperatingPoint:
    """Operating point of the detector, with the commonly swept knobs exposed."""
    return OperatingPoint(delta=delta,
                          alpha_mag=alpha_ratio * (KAPPA + GAMMA),
                          theta_p=0.0, kappa=KAPPA, gamma=GAMMA,
                          kerr=kerr, n_thermal=n_thermal)
