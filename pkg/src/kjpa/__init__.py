"""Simulation and analysis toolkit for a flux-pumped Kerr parametric
oscillator operated as a criticality-enhanced microwave photon detector.

Submodules
----------
circuit         circuit constants -> mode, frequencies, nonlinear coefficients
potential       effective potential of the slow quadrature, phase regions
langevin        stochastic quadrature dynamics, moments, phase diagram
fokker_planck   1D Fokker-Planck solver, survival, escape rates
detection       pulse sequence, readout results, threshold decisions
detector_stats  POVM model, efficiency, ROC, NEP, Poisson verification
calibration     gain/attenuation/photon-number calibration chain
device          reference parameters of the measured device
cli             command-line orchestration
"""

__version__ = "0.1.0"

from . import calibration, circuit, detection, detector_stats, device
from . import fokker_planck, langevin, potential
from .circuit import (CircuitParams, ModeSolution, fit_dc_sweep,
                      mode_from_inductance, mode_from_resonance,
                      nonlinear_coefficients, pump_amplitude,
                      resonance_frequency, solve_mode_constraint,
                      squid_inductance)
from .potential import (OperatingPoint, PotentialProfile, build_profile,
                        classify_region, critical_amplitude, extrema)
