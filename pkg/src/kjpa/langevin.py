"""Semiclassical stochastic dynamics of the pumped cavity quadratures.

Integrates the rotating-frame Heisenberg-Langevin equations for (Q, P)
with operators replaced by c-numbers and symmetric-ordering noise of
strength (kappa+gamma)(n_T + 1/2) per quadrature.  Explicit stochastic
Euler stepping (strong order 0.5); the noise is additive so this is
adequate at the rates involved, and a dt-halving convergence check is
part of the test suite.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (DegenerateCovariance, EmptyWindow, NonFinite,
                     UnstableStep)
from .potential import OperatingPoint, critical_amplitude, extrema


def stable_seed(*parts) -> int:
    """Deterministic 64-bit seed from arbitrary labeled parts.

    Hash-based so that (master seed, cell index) -> seed is stable
    across processes and Python versions.
    """
    h = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "little")


@dataclass(frozen=True)
class ProbeField:
    """Coherent probe b = |b| exp(-i phi) gated on [t_on, t_off).

    ``b_mag`` is in sqrt(Hz); the window carries b_mag^2 * (t_off -
    t_on) photons on average.
    """

    b_mag: float
    phase: float = 0.0
    t_on: float = 0.0
    t_off: float = 0.0

    def __post_init__(self):
        if self.b_mag < 0.0:
            raise ValueError("b_mag must be non-negative")

    @property
    def mean_photons(self) -> float:
        return self.b_mag**2 * max(self.t_off - self.t_on, 0.0)

    @staticmethod
    def off() -> "ProbeField":
        return ProbeField(b_mag=0.0)


@dataclass
class QuadratureTrace:
    """Time series of (Q, P) samples from one integration."""

    dt: float
    samples: np.ndarray            # (n, 2)
    seed: int
    op: OperatingPoint
    probe: ProbeField

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt

    def window_slice(self, t0: float, t1: float) -> np.ndarray:
        idx = (self.times >= t0) & (self.times <= t1)
        return self.samples[idx]

    def dump(self, path_prefix: str) -> None:
        """Binary little-endian float64 (Q, P) pairs plus a JSON sidecar."""
        self.samples.astype("<f8").tofile(path_prefix + ".f64")
        side = {"dt_s": self.dt, "seed": self.seed,
                "n_samples": int(len(self.samples)),
                "op": {"delta_hz": self.op.delta / (2 * math.pi),
                       "alpha_hz": self.op.alpha_mag / (2 * math.pi),
                       "theta_p_rad": self.op.theta_p,
                       "kappa_hz": self.op.kappa / (2 * math.pi),
                       "gamma_hz": self.op.gamma / (2 * math.pi),
                       "kerr_hz": self.op.kerr / (2 * math.pi),
                       "n_thermal": self.op.n_thermal},
                "probe": {"b_mag_sqrthz": self.probe.b_mag,
                          "phase_rad": self.probe.phase,
                          "t_on_s": self.probe.t_on,
                          "t_off_s": self.probe.t_off}}
        with open(path_prefix + ".json", "w") as fh:
            json.dump(side, fh, indent=1)


@dataclass
class StateMoments:
    """First and second moments of pooled (X, Y) samples."""

    mean_x: float
    mean_y: float
    var_x: float
    var_y: float
    n_samples: int


@dataclass(frozen=True)
class ClassifierConfig:
    """Thresholds for the four-state classification.

    The table of states gives only qualitative inequalities; these
    defaults are conservative and exposed in the run config.
    ``approx_band`` bounds how far var_y may sit above the vacuum value
    while still counting as "approximately vacuum": in the oscillating
    phases the minor-axis variance stays within tens of vacuum units
    (well width) while the major axis blows up by orders of magnitude,
    so the band is wide.
    """

    mean_sig: float = 5.0
    big_var: float = 10.0
    squeeze_factor: float = 0.9
    approx_band: float = 30.0


def drift(q, p, op: OperatingPoint, probe: ProbeField | None = None,
          t: float = 0.0):
    """Deterministic part of (dQ/dt, dP/dt) in 1/s.

    Symmetrized operator products become plain products in the
    semiclassical limit.  The probe enters through its projections on
    the two quadratures with the relative phase theta_p/2 + pi/4 - phi.
    """
    a_c0 = op.alpha_c0
    k6 = 6.0 * op.kerr
    dq = (op.alpha_mag - a_c0) * q + op.delta * p + k6 * (p * q * q + p**3)
    dp = -(op.alpha_mag + a_c0) * p - op.delta * q - k6 * (q * p * p + q**3)
    if probe is not None and probe.b_mag > 0.0 and probe.t_on <= t < probe.t_off:
        amp = math.sqrt(2.0 * op.kappa) * probe.b_mag
        rel = op.theta_p / 2.0 + math.pi / 4.0 - probe.phase
        dq = dq - amp * math.cos(rel)
        dp = dp - amp * math.sin(rel)
    return dq, dp


def optimal_probe_phase(op: OperatingPoint) -> float:
    """Probe phase theta_p/2 + pi/4 that maximizes the slow-variable push."""
    return op.theta_p / 2.0 + math.pi / 4.0


@dataclass
class BatchResult:
    times: np.ndarray              # recorded times
    snapshots: np.ndarray          # (len(times), n_traj, 2)
    readout: np.ndarray | None     # (n_traj,) time-averaged |X+iY|, or None
    switched_fraction: float | None = None


def _check_step(op: OperatingPoint, dt: float) -> None:
    guard = dt * (op.alpha_mag + op.alpha_c0)
    if guard >= 0.1:
        raise UnstableStep(f"dt*(|alpha|+alpha_c0) = {guard:.3f} >= 0.1")


def simulate_batch(op: OperatingPoint, probe: ProbeField, pulse, dt: float,
                   n_traj: int, seed: int, duration: float | None = None,
                   record_times=(), readout_window=None,
                   readout_noise_var: float = 0.0,
                   noise_scale: float = 1.0,
                   initial_state=None) -> BatchResult:
    """Integrate ``n_traj`` independent pulse cycles in lockstep.

    ``pulse`` provides the pump envelope through its ``pump_duration``
    (rectangular pump on [0, pump_duration)); the probe window lives in
    ``probe``.  Initial condition: Gaussian around (0, 0) with variance
    n_T + 1/2 per quadrature (stationary unpumped state).

    ``record_times`` lists times at which full (Q, P) snapshots are
    kept; ``readout_window = (t0, t1)`` accumulates the time average of
    |X + iY| with additive complex Gaussian readout noise of per-
    quadrature variance ``readout_noise_var``.  ``noise_scale``
    multiplies the thermal noise amplitude (0 turns noise off), and
    ``initial_state`` overrides the default Gaussian draw with a fixed
    (Q0, P0) for every trajectory.  Deterministic for a given seed.
    """
    _check_step(op, dt)
    pump_end = getattr(pulse, "pump_duration", duration)
    if duration is None:
        duration = pump_end
    n_steps = int(round(duration / dt))
    rng = np.random.default_rng(seed)

    if initial_state is None:
        sigma0 = math.sqrt(op.n_thermal + 0.5)
        state = rng.normal(0.0, sigma0, size=(2, n_traj))
    else:
        state = np.tile(np.asarray(initial_state, dtype=float)[:, None],
                        (1, n_traj))
    q, p = state[0], state[1]

    noise_sig = noise_scale * math.sqrt((op.kappa + op.gamma)
                                        * (op.n_thermal + 0.5) * dt)
    a_c0 = op.alpha_c0
    k6 = 6.0 * op.kerr
    amp = math.sqrt(2.0 * op.kappa) * probe.b_mag
    rel = op.theta_p / 2.0 + math.pi / 4.0 - probe.phase
    drive_q, drive_p = amp * math.cos(rel), amp * math.sin(rel)

    rec_steps = {int(round(t / dt)): i for i, t in enumerate(record_times)}
    snaps = np.empty((len(record_times), n_traj, 2))
    times = np.asarray(record_times, dtype=float)

    ro = None
    if readout_window is not None:
        i0 = int(round(readout_window[0] / dt))
        i1 = int(round(readout_window[1] / dt))
        ro = np.zeros(n_traj)
        ro_sigma = math.sqrt(readout_noise_var)

    if 0 in rec_steps:
        snaps[rec_steps[0], :, 0] = q
        snaps[rec_steps[0], :, 1] = p

    for step in range(n_steps):
        t = step * dt
        pump_on = t < pump_end
        alpha = op.alpha_mag if pump_on else 0.0
        probe_on = probe.b_mag > 0.0 and probe.t_on <= t < probe.t_off

        q2 = q * q
        p2 = p * p
        dq = (alpha - a_c0) * q + op.delta * p + k6 * (p * q2 + p * p2)
        dp = -(alpha + a_c0) * p - op.delta * q - k6 * (q * p2 + q * q2)
        if probe_on:
            dq = dq - drive_q
            dp = dp - drive_p
        if noise_sig > 0.0:
            noise = rng.standard_normal((2, n_traj))
            q = q + dq * dt + noise_sig * noise[0]
            p = p + dp * dt + noise_sig * noise[1]
        else:
            q = q + dq * dt
            p = p + dp * dt

        if ro is not None and i0 <= step < i1:
            if ro_sigma > 0.0:
                rn = rng.standard_normal((2, n_traj))
                ro += np.hypot(q + ro_sigma * rn[0], p + ro_sigma * rn[1])
            else:
                ro += np.hypot(q, p)

        if step % 256 == 0 and not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise NonFinite(step)

        nxt = step + 1
        if nxt in rec_steps:
            snaps[rec_steps[nxt], :, 0] = q
            snaps[rec_steps[nxt], :, 1] = p

    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
        raise NonFinite(n_steps)
    if ro is not None and i1 > i0:
        ro = ro / (i1 - i0)
    return BatchResult(times=times, snapshots=snaps, readout=ro)


class _Window:
    """Minimal pulse stand-in when only a pump duration is needed."""

    def __init__(self, pump_duration):
        self.pump_duration = pump_duration


def simulate_trajectory(op: OperatingPoint, probe: ProbeField, pulse,
                        dt: float, seed: int,
                        duration: float | None = None) -> QuadratureTrace:
    """Single stochastic trajectory recording every step.

    Deterministic given the seed; raises :class:`UnstableStep` when the
    stability guard dt (|alpha| + alpha_c0) < 0.1 fails and
    :class:`NonFinite` (with step index) if the state diverges.
    """
    pump_end = getattr(pulse, "pump_duration", duration)
    if duration is None:
        duration = pump_end
    n_steps = int(round(duration / dt))
    record = np.arange(n_steps + 1) * dt
    batch = simulate_batch(op, probe, pulse, dt, 1, seed, duration=duration,
                           record_times=record)
    return QuadratureTrace(dt=dt, samples=batch.snapshots[:, 0, :],
                           seed=seed, op=op, probe=probe)


def rotate_samples(samples: np.ndarray) -> tuple[np.ndarray, float]:
    """Rotate (X, Y) samples so the major principal axis lies along X.

    The global phase rotation aligns the largest-variance eigenvector
    of the covariance with X and flips by pi if needed so the mean X is
    non-negative.  For an isotropic cloud the angle is defined by the
    mean direction alone.  Returns (rotated samples, angle applied).
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        raise EmptyWindow("need >= 2 samples to define a rotation")
    mean = samples.mean(axis=0)
    cov = np.cov(samples.T)
    if not np.any(cov > 0.0) and not np.any(mean != 0.0):
        raise DegenerateCovariance("zero covariance and zero mean")
    evals, evecs = np.linalg.eigh(cov)
    if (evals[1] - evals[0]) <= 1e-12 * max(evals[1], 1e-300):
        # isotropic: orient along the mean
        angle = -math.atan2(mean[1], mean[0]) if np.any(mean != 0.0) else 0.0
    else:
        major = evecs[:, 1]
        angle = -math.atan2(major[1], major[0])
    c, s = math.cos(angle), math.sin(angle)
    rot = samples @ np.array([[c, -s], [s, c]])
    if rot[:, 0].mean() < 0.0:
        rot = -rot
        angle += math.pi
    return rot, angle


def moments_from_samples(samples: np.ndarray) -> StateMoments:
    samples = np.asarray(samples, dtype=float)
    return StateMoments(mean_x=float(samples[:, 0].mean()),
                        mean_y=float(samples[:, 1].mean()),
                        var_x=float(samples[:, 0].var()),
                        var_y=float(samples[:, 1].var()),
                        n_samples=len(samples))


def ensemble_moments(traces, window) -> StateMoments:
    """Pooled, rotated moments over all traces within a time window."""
    t0, t1 = window
    chunks = [tr.window_slice(t0, t1) for tr in traces]
    pooled = np.concatenate([c for c in chunks if len(c)], axis=0) \
        if any(len(c) for c in chunks) else np.empty((0, 2))
    if len(pooled) == 0:
        raise EmptyWindow(f"no samples in [{t0}, {t1}]")
    rotated, _ = rotate_samples(pooled)
    return moments_from_samples(rotated)


def classify_state(m: StateMoments, vacuum_ref: StateMoments,
                   cfg: ClassifierConfig = ClassifierConfig()) -> str:
    """Four-state classification against an unpumped reference.

    Coherent oscillation: the displacement stands ``mean_sig`` cloud
    standard deviations away from zero.  Unstable oscillation: major-
    axis variance blown up by ``big_var`` over vacuum while the minor
    axis stays within ``approx_band`` of vacuum.  Squeezed vacuum:
    minor-axis variance below ``squeeze_factor`` of vacuum.
    """
    sigma = math.sqrt(max(m.var_x, 1e-300))
    if abs(m.mean_x) > cfg.mean_sig * sigma:
        return "CoherentOscillation"
    if (m.var_x > cfg.big_var * vacuum_ref.var_x
            and m.var_y < cfg.approx_band * vacuum_ref.var_y):
        return "UnstableOscillation"
    if m.var_y < cfg.squeeze_factor * vacuum_ref.var_y:
        return "SqueezedVacuum"
    return "Vacuum"


@dataclass
class PhaseDiagramCell:
    alpha_ratio: float
    delta: float
    moments: StateMoments | None
    label: str
    switched_fraction: float | None
    failed: bool = False
    error: str = ""


def vacuum_reference(op_template: OperatingPoint, duration: float, dt: float,
                     n_traj: int, seed: int) -> StateMoments:
    """Moments of the unpumped stationary ensemble (alpha = 0)."""
    op0 = replace(op_template, alpha_mag=0.0)
    record = np.linspace(0.5 * duration, duration, 32)
    batch = simulate_batch(op0, ProbeField.off(), _Window(duration), dt,
                           n_traj, seed, duration=duration,
                           record_times=record)
    pooled = batch.snapshots.reshape(-1, 2)
    return moments_from_samples(pooled)


def map_phase_diagram(op_template: OperatingPoint, alpha_ratios, deltas,
                      ensemble_size: int = 48, duration: float = 40e-6,
                      dt: float = 1.25e-9, master_seed: int = 0,
                      cfg: ClassifierConfig = ClassifierConfig(),
                      fold_signs: bool = False) -> list[PhaseDiagramCell]:
    """Simulate and classify every (alpha ratio, detuning) grid cell.

    Cells are independent and seeded by (master seed, cell index); a
    failing cell is flagged without aborting the sweep.  The pooled
    per-cell ensemble treats the trajectory signs symmetrically, so
    above-threshold cells at positive detuning read as unstable
    oscillation; ``fold_signs=True`` flips each well-trapped trajectory
    to positive mean first, recovering the single-acquisition view in
    which those cells classify as coherent oscillation.
    """
    kpg = op_template.kappa + op_template.gamma
    record = np.linspace(0.5 * duration, duration, 24)
    vac = vacuum_reference(op_template, min(duration, 10e-6), dt,
                           max(ensemble_size, 128),
                           stable_seed(master_seed, "vacuum"))
    cells = []
    idx = 0
    for delta in deltas:
        for ratio in alpha_ratios:
            seed = stable_seed(master_seed, idx)
            idx += 1
            op = replace(op_template, alpha_mag=ratio * kpg, delta=delta)
            try:
                batch = simulate_batch(op, ProbeField.off(), _Window(duration),
                                       dt, ensemble_size, seed,
                                       duration=duration, record_times=record)
                snaps = batch.snapshots          # (n_rec, n_traj, 2)
                q_mean = snaps[:, :, 0].mean(axis=0)
                q_std = snaps[:, :, 0].std(axis=0)

                ext = extrema(op)
                outer = [abs(q) for q, _, kind in ext if kind == "min" and q != 0.0]
                if outer:
                    q_switch = 0.5 * max(outer)
                    switched = float(np.mean(np.abs(q_mean) > q_switch))
                else:
                    switched = 0.0

                pooled = snaps
                if fold_signs:
                    flip = np.where((np.abs(q_mean) > 3.0 * q_std)
                                    & (q_mean < 0.0), -1.0, 1.0)
                    pooled = snaps * flip[None, :, None]
                pooled = pooled.reshape(-1, 2)
                rotated, _ = rotate_samples(pooled)
                m = moments_from_samples(rotated)
                label = classify_state(m, vac, cfg)
                cells.append(PhaseDiagramCell(ratio, delta, m, label, switched))
            except Exception as exc:  # flagged, sweep continues
                cells.append(PhaseDiagramCell(ratio, delta, None, "failed",
                                              None, failed=True, error=str(exc)))
    return cells
