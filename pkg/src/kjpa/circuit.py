"""Circuit model of a quarter-wave resonator terminated by a SQUID.

Derives the dynamical parameters of the flux-pumped Kerr parametric
oscillator (fundamental mode, resonance frequency, zero-point phase
amplitude, Kerr and sextic coefficients, pump amplitude) from the
physical circuit constants, and fits flux-sweep resonance data.

Unit conventions: every frequency is stored internally as *angular*
(rad/s); helper accessors and file formats use plain Hz with explicit
``_hz`` suffixes.  All other quantities are SI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import e as E_CHARGE, h as PLANCK_H, hbar as HBAR
from scipy.optimize import brentq, minimize

from .errors import FitDiverged, FluxAtFrustration, InsufficientData, NoBracket

PHI0 = PLANCK_H / (2.0 * E_CHARGE)  # magnetic flux quantum, Wb


@dataclass(frozen=True)
class CircuitParams:
    """Physical constants of the device.

    Parameters
    ----------
    L_cav, C_cav : float
        Total inductance (H) and capacitance (F) of the bare coplanar
        waveguide cavity.
    I_c : float
        Critical current of a single junction (A).
    omega_pl : float
        Junction plasma angular frequency (rad/s); together with ``I_c``
        it fixes the SQUID capacitance unless ``C_S`` is given.
    L_loop : float
        Geometric inductance of the SQUID loop (H).
    C_S : float, optional
        SQUID capacitance (F).  Derived from ``I_c`` and ``omega_pl``
        via ``omega_pl = sqrt(2e I_c / (hbar C_J))``, ``C_S = 2 C_J``
        when omitted.
    """

    L_cav: float
    C_cav: float
    I_c: float
    omega_pl: float
    L_loop: float = 0.0
    C_S: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.C_S is None:
            c_j = 2.0 * E_CHARGE * self.I_c / (HBAR * self.omega_pl**2)
            object.__setattr__(self, "C_S", 2.0 * c_j)
        for name in ("L_cav", "C_cav", "I_c", "omega_pl", "C_S"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.L_loop < 0.0:
            raise ValueError("L_loop must be non-negative")
        if self.beta_L >= 1.0:
            raise ValueError(f"screening parameter beta_L = {self.beta_L:.3f} >= 1")

    @property
    def E_J(self) -> float:
        """Josephson energy of a single junction (J)."""
        return (HBAR / (2.0 * E_CHARGE)) * self.I_c

    @property
    def E_L_cav(self) -> float:
        """Inductive energy scale (hbar/2e)^2 / L_cav of the cavity (J)."""
        return (HBAR / (2.0 * E_CHARGE)) ** 2 / self.L_cav

    @property
    def beta_L(self) -> float:
        """SQUID screening parameter 2 L_loop I_c / Phi_0."""
        return 2.0 * self.L_loop * self.I_c / PHI0

    @property
    def omega_quarter(self) -> float:
        """Bare quarter-wave angular resonance (pi/2)/sqrt(L_cav C_cav)."""
        return (math.pi / 2.0) / math.sqrt(self.L_cav * self.C_cav)

    def squid_energy(self, flux: float) -> float:
        """SQUID Josephson energy E_S = 2 E_J cos(pi flux) at a DC bias.

        ``flux`` is the dimensionless ratio Phi_DC / Phi_0, restricted
        to [0, 0.5); at or beyond the frustration point E_S is not
        positive and :class:`FluxAtFrustration` is raised.
        """
        if not 0.0 <= flux < 0.5:
            raise FluxAtFrustration(f"flux ratio {flux} outside [0, 0.5)")
        return 2.0 * self.E_J * math.cos(math.pi * flux)


@dataclass(frozen=True)
class ModeSolution:
    """Fundamental mode of the loaded cavity at one flux bias.

    ``kd`` is the dimensionless wavenumber-length product in (0, pi/2];
    ``kd_approx`` is the participation-ratio approximation
    (pi/2)/(1 + chi) reported for comparison.  ``e_s`` records the SQUID
    energy the solution was built from so that downstream nonlinear
    coefficients stay self-consistent.
    """

    kd: float
    omega_0: float          # rad/s
    C_k: float              # F
    phi_zpf: float          # dimensionless
    chi: float              # inductive participation ratio
    kd_approx: float
    e_s: float              # J

    @property
    def f0_hz(self) -> float:
        return self.omega_0 / (2.0 * math.pi)


def _mode_from_kd(kd: float, params: CircuitParams, e_s: float, chi: float,
                  kd_approx: float) -> ModeSolution:
    """Populate C_k and phi_zpf from a solved kd (shared by all entry points)."""
    omega_k = kd / math.sqrt(params.L_cav * params.C_cav)
    m_k = (1.0 + math.sin(2.0 * kd) / (2.0 * kd)
           + (2.0 * params.C_S / params.C_cav) * math.cos(kd) ** 2)
    c_k = 0.5 * params.C_cav * m_k
    phi_zpf = (2.0 * math.pi / PHI0) * math.sqrt(HBAR / (2.0 * omega_k * c_k))
    return ModeSolution(kd=kd, omega_0=omega_k, C_k=c_k, phi_zpf=phi_zpf,
                        chi=chi, kd_approx=kd_approx, e_s=e_s)


def solve_mode_constraint(params: CircuitParams, flux: float) -> ModeSolution:
    """Solve the eigenmode constraint for the fundamental mode.

    Finds kd in (0, pi/2) satisfying

        kd tan(kd) = E_S / E_L,cav - (C_S / C_cav) kd^2

    by bracketed Brent root-finding (relative tolerance 1e-12), with the
    bare SQUID energy E_S = 2 E_J cos(pi flux).  The approximate
    solution (pi/2)/(1 + chi), chi = E_L,cav / E_S, is reported
    alongside.  The chi = 0 limit returns kd = pi/2 exactly.
    """
    e_s = params.squid_energy(flux)
    chi = params.E_L_cav / e_s
    if chi == 0.0:
        return _mode_from_kd(math.pi / 2.0, params, e_s, 0.0, math.pi / 2.0)
    rhs_const = 1.0 / chi
    cap_ratio = params.C_S / params.C_cav
    kd_approx = (math.pi / 2.0) / (1.0 + chi)

    def f(kd):
        return kd * math.tan(kd) - rhs_const + cap_ratio * kd * kd

    lo, hi = _mode_bracket(chi)
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0.0:
        raise NoBracket(f"f({lo:.2g}) = {flo:.3g}, f({hi:.6f}) = {fhi:.3g}")
    kd = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16)
    return _mode_from_kd(kd, params, e_s, chi, kd_approx)


def _mode_bracket(chi: float) -> tuple[float, float]:
    """Bracket for the fundamental root: (1e-6, pi/2 - eps).

    The root sits roughly (pi/2) chi/(1+chi) below pi/2, so the upper
    edge tightens toward pi/2 when the participation ratio is tiny.
    """
    return 1e-6, math.pi / 2.0 - min(1e-6, 0.1 * chi)


def mode_from_inductance(params: CircuitParams, L_S: float) -> ModeSolution:
    """Mode solution with the SQUID entering as an inductance value.

    Uses the exact identity E_S = Phi_0^2 / (4 pi^2 L_S), so a fitted
    SQUID inductance (e.g. from a flux-sweep fit) can drive the same
    constraint solve as the bare junction parameters.
    """
    if L_S <= 0.0:
        return _mode_from_kd(math.pi / 2.0, params,
                             float("inf"), 0.0, math.pi / 2.0)
    e_s = PHI0**2 / (4.0 * math.pi**2 * L_S)
    chi = L_S / params.L_cav
    rhs_const = 1.0 / chi
    cap_ratio = params.C_S / params.C_cav

    def f(kd):
        return kd * math.tan(kd) - rhs_const + cap_ratio * kd * kd

    kd = brentq(f, *_mode_bracket(chi), xtol=1e-15, rtol=8.9e-16)
    return _mode_from_kd(kd, params, e_s, chi, (math.pi / 2.0) / (1.0 + chi))


def mode_from_resonance(params: CircuitParams, omega_0: float) -> ModeSolution:
    """Mode solution anchored on a measured resonance frequency.

    Inverts the mode definition kd = omega_0 sqrt(L_cav C_cav) and the
    participation relation kd = (pi/2)/(1 + chi) — the same relation the
    flux-sweep extraction uses — so that chi, L_S and E_S are the values
    the measured frequency implies.  This is the entry point for working
    at a characterized operating point where omega_0 is known to better
    precision than the junction critical current.
    """
    kd = omega_0 * math.sqrt(params.L_cav * params.C_cav)
    if not 0.0 < kd <= math.pi / 2.0:
        raise ValueError(f"omega_0 implies kd = {kd:.4f} outside (0, pi/2]")
    chi = (math.pi / 2.0) / kd - 1.0
    e_s = params.E_L_cav / chi if chi > 0.0 else float("inf")
    return _mode_from_kd(kd, params, e_s, chi, kd)


def _phi_minus_min(flux: float, beta_L: float) -> float:
    """Minimize the DC SQUID potential over the junction phase difference.

    The reduced potential at phi_S = 0 and zero bias current is

        u(phi) = (phi - pi flux)^2 / (pi beta_L) - cos(phi)

    Golden-section search on [pi flux - pi/2, pi flux + pi/2]; the
    potential is unimodal there for beta_L < 1.
    """
    x = math.pi * flux
    if beta_L == 0.0:
        return x

    def u(phi):
        return (phi - x) ** 2 / (math.pi * beta_L) - math.cos(phi)

    a, b = x - math.pi / 2.0, x + math.pi / 2.0
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = u(c), u(d)
    while b - a > 1e-10:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = u(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = u(d)
    # Newton polish on the stationarity condition: value-based search
    # cannot localize a quadratic minimum beyond sqrt(eps)
    phi = 0.5 * (a + b)
    for _ in range(5):
        slope = 2.0 * (phi - x) / (math.pi * beta_L) + math.sin(phi)
        curv = 2.0 / (math.pi * beta_L) + math.cos(phi)
        phi -= slope / curv
    return phi


def squid_inductance(params: CircuitParams, flux: float) -> float:
    """Flux-dependent SQUID inductance with loop-screening correction.

    Returns L_S = Phi_0 / (4 pi I_c cos(phi_min)) where phi_min
    minimizes the DC SQUID potential.  For L_loop = 0 this reduces to
    Phi_0 / (4 pi I_c cos(pi flux)).
    """
    if not 0.0 <= flux < 0.5:
        raise FluxAtFrustration(f"flux ratio {flux} outside [0, 0.5)")
    phi_min = _phi_minus_min(flux, params.beta_L)
    c = math.cos(phi_min)
    if c <= 0.0:
        raise FluxAtFrustration(f"cos(phi_min) = {c:.3g} <= 0 at flux {flux}")
    return PHI0 / (4.0 * math.pi * params.I_c * c)


def resonance_frequency(params: CircuitParams, flux: float) -> float:
    """Flux-tuned angular resonance omega_quarter / (1 + L_S(flux)/L_cav)."""
    return params.omega_quarter / (1.0 + squid_inductance(params, flux) / params.L_cav)


def nonlinear_coefficients(params: CircuitParams, flux: float,
                           mode: ModeSolution) -> tuple[float, float]:
    """Kerr and sextic coefficients of the fundamental mode (rad/s).

        K      = -(E_S / 24 hbar) cos^4(kd) phi_zpf^4   (< 0)
        Lambda = +(E_S / 720 hbar) cos^6(kd) phi_zpf^6  (> 0)

    E_S is taken from the mode solution so the coefficients stay
    consistent with however the mode was anchored (junction parameters,
    fitted inductance, or measured frequency).
    """
    e_s = mode.e_s if math.isfinite(mode.e_s) else params.squid_energy(flux)
    c4 = math.cos(mode.kd) ** 4
    kerr = -(e_s / (24.0 * HBAR)) * c4 * mode.phi_zpf**4
    lam = (e_s / (720.0 * HBAR)) * c4 * math.cos(mode.kd) ** 2 * mode.phi_zpf**6
    return kerr, lam


def pump_amplitude(params: CircuitParams, flux: float, pump_flux: float,
                   mode: ModeSolution) -> float:
    """Parametric pump amplitude |alpha| (rad/s), small-chi approximation.

        |alpha| ~ pi chi omega_0 (Phi_P/Phi_0) tan(pi Phi_DC/Phi_0)

    Warns when pi Phi_P/Phi_0 > 0.1 (expansion validity).  Returns 0 at
    zero flux where the tangent vanishes.
    """
    if not 0.0 <= flux < 0.5:
        raise FluxAtFrustration(f"flux ratio {flux} outside [0, 0.5)")
    if math.pi * pump_flux > 0.1:
        import warnings
        warnings.warn("pump flux beyond small-amplitude regime (pi Phi_P/Phi_0 > 0.1)")
    return abs(math.pi * mode.chi * mode.omega_0 * pump_flux * math.tan(math.pi * flux))


def pump_amplitude_exact(params: CircuitParams, flux: float, pump_flux: float,
                         mode: ModeSolution) -> float:
    """Pump amplitude from the unapproximated circuit expression.

        |alpha| = (pi Phi_P E_S / (hbar Phi_0)) tan(pi flux) cos^2(kd) phi_zpf^2

    Exposed for cross-checking the participation-ratio approximation;
    the two agree to O(chi) relative.
    """
    e_s = mode.e_s if math.isfinite(mode.e_s) else params.squid_energy(flux)
    return abs(math.pi * pump_flux * (e_s / HBAR) * math.tan(math.pi * flux)
               * math.cos(mode.kd) ** 2 * mode.phi_zpf**2)


def pump_flux_for_amplitude(params: CircuitParams, flux: float, alpha_mag: float,
                            mode: ModeSolution) -> float:
    """Invert the approximate pump formula for the flux drive Phi_P/Phi_0."""
    denom = math.pi * mode.chi * mode.omega_0 * abs(math.tan(math.pi * flux))
    if denom == 0.0:
        raise ValueError("pump amplitude cannot be reached at zero flux")
    return alpha_mag / denom


@dataclass
class DcSweepFit:
    """Result of a flux-sweep resonance fit."""

    params: CircuitParams
    omega_quarter: float          # rad/s
    I_c: float                    # A
    residuals_hz: np.ndarray      # per-point (model - data) in Hz
    covariance: np.ndarray        # 2x2, (omega_quarter, I_c) ordering
    rel_residual: float


def _sweep_model(flux: np.ndarray, omega_quarter: float, i_c: float,
                 base: CircuitParams) -> np.ndarray:
    l_cav = (math.pi / (2.0 * omega_quarter)) ** 2 / base.C_cav
    trial = replace(base, L_cav=l_cav, I_c=i_c)
    return np.array([resonance_frequency(trial, f) for f in flux])


def fit_dc_sweep(data, initial_guess: CircuitParams,
                 rel_residual_threshold: float = 1e-3) -> DcSweepFit:
    """Fit (omega_quarter, I_c) to a DC flux sweep of resonance frequencies.

    ``data`` is a sequence of (flux_ratio, omega_0 rad/s) pairs spanning
    a monotonic flux range in [0, 0.5).  The loop-screening correction
    is applied through :func:`squid_inductance`.  Derivative-free
    Nelder-Mead simplex, multi-started from the initial guess perturbed
    by +-10% in each parameter; the best run wins.

    Raises :class:`InsufficientData` below 4 points and
    :class:`FitDiverged` when the best relative residual norm stays
    above ``rel_residual_threshold``.
    """
    pts = np.asarray(list(data), dtype=float)
    if pts.ndim != 2 or len(pts) < 4:
        raise InsufficientData(f"need >= 4 (flux, omega) points, got {len(pts)}")
    flux, omega = pts[:, 0], pts[:, 1]

    def cost(theta):
        oq, ic = theta
        if oq <= 0 or ic <= 0:
            return 1e30
        try:
            model = _sweep_model(flux, oq, ic, initial_guess)
        except FluxAtFrustration:
            return 1e30
        return float(np.sum((model - omega) ** 2))

    x0 = np.array([initial_guess.omega_quarter, initial_guess.I_c])
    starts = [x0]
    for sa in (0.9, 1.1):
        for sb in (0.9, 1.1):
            starts.append(x0 * np.array([sa, sb]))
    best = None
    for s in starts:
        res = minimize(cost, s, method="Nelder-Mead",
                       options={"xatol": 1e-9 * s[0], "fatol": 1e-12 * cost(s) + 1e-30,
                                "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
    oq, ic = best.x
    model = _sweep_model(flux, oq, ic, initial_guess)
    resid = model - omega
    rel = float(np.linalg.norm(resid) / np.linalg.norm(omega))
    if rel > rel_residual_threshold:
        raise FitDiverged(f"relative residual {rel:.3g} above {rel_residual_threshold:.3g}")

    # Gauss-Newton covariance from a finite-difference Jacobian at the optimum.
    jac = np.empty((len(flux), 2))
    for j, (val, step) in enumerate(((oq, 1e-7 * oq), (ic, 1e-7 * ic))):
        theta_p = [oq, ic]
        theta_m = [oq, ic]
        theta_p[j] = val + step
        theta_m[j] = val - step
        jac[:, j] = (_sweep_model(flux, *theta_p, initial_guess)
                     - _sweep_model(flux, *theta_m, initial_guess)) / (2.0 * step)
    dof = max(len(flux) - 2, 1)
    sigma2 = float(resid @ resid) / dof
    jtj = jac.T @ jac
    try:
        cov = sigma2 * np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        cov = np.full((2, 2), np.nan)

    l_cav = (math.pi / (2.0 * oq)) ** 2 / initial_guess.C_cav
    fitted = replace(initial_guess, L_cav=l_cav, I_c=ic)
    return DcSweepFit(params=fitted, omega_quarter=oq, I_c=ic,
                      residuals_hz=resid / (2.0 * math.pi),
                      covariance=cov, rel_residual=rel)


def mode_summary_hz(params: CircuitParams, flux: float, mode: ModeSolution) -> dict:
    """Flat Hz-denominated JSON-ready summary of a mode solution."""
    kerr, lam = nonlinear_coefficients(params, flux, mode)
    return {
        "flux_ratio": flux,
        "kd": mode.kd,
        "kd_approx": mode.kd_approx,
        "f0_hz": mode.f0_hz,
        "c_mode_f": mode.C_k,
        "phi_zpf": mode.phi_zpf,
        "chi": mode.chi,
        "kerr_hz": kerr / (2.0 * math.pi),
        "sextic_hz": lam / (2.0 * math.pi),
    }
