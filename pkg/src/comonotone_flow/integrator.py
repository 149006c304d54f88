"""Dormand-Prince 5(4) integrator with dense output.

An explicit embedded Runge-Kutta pair with PI step-size control and the
standard fourth-order continuous extension. Only the pieces the experiments
need are implemented: no event location, no stiffness detection.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NonFiniteDerivative, StepSizeUnderflow

# Butcher tableau
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
# difference between the 5th and the embedded 4th order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense output: y(t + theta h) = y + h * K^T (P @ [theta, theta^2, theta^3, theta^4])
P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

ORDER = 5
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI controller exponents (Hairer, Norsett & Wanner, II.4)
BETA = 0.04
ALPHA = 1.0 / ORDER - 0.75 * BETA


@dataclass
class IntegratorConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = np.inf
    initial_step: Optional[float] = None
    sample_times: Optional[Sequence[float]] = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if not self.max_step > 0:
            raise DomainError("max_step must be positive")


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0
    min_step: float = np.inf
    max_step: float = 0.0


@dataclass
class Solution:
    """States at the requested sample times plus step statistics."""

    t: np.ndarray
    y: np.ndarray  # shape (len(t), n)
    stats: StepStats = field(default_factory=StepStats)


def _rms(v):
    return float(np.sqrt(np.mean(v * v)))


def _initial_step(f, t0, y0, f0, tf, rtol, atol):
    # Hairer, Norsett & Wanner, II.4, starting step size algorithm
    scale = atol + np.abs(y0) * rtol
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, tf - t0)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / ORDER)
    return min(100 * h0, h1)


def _dense(y_old, h, k, theta):
    powers = np.array([theta, theta ** 2, theta ** 3, theta ** 4])
    return y_old + h * (k.T @ (P @ powers))


def integrate(field, t0, y0, tf, cfg=None):
    """Integrate ``y' = field(t, y)`` from ``t0`` to ``tf``.

    Parameters
    ----------
    field : callable
        ``field(t, y) -> ndarray`` with the shape of ``y``.
    t0, tf : float
    y0 : array_like
    cfg : IntegratorConfig, optional
        ``sample_times`` defaults to ``[t0, tf]``.

    Returns
    -------
    Solution

    Raises
    ------
    StepSizeUnderflow
        When the controller asks for a step below ``1e-14 * |t|``.
    NonFiniteDerivative
        When ``field`` returns NaN or Inf.
    """
    cfg = cfg or IntegratorConfig()
    if not tf > t0:
        raise DomainError(f"tf={tf} must exceed t0={t0}")
    samples = np.array([t0, tf] if cfg.sample_times is None else cfg.sample_times, dtype=float)
    if np.any(np.diff(samples) <= 0) or samples[0] < t0 or samples[-1] > tf:
        raise DomainError("sample_times must be strictly increasing inside [t0, tf]")

    stats = StepStats()

    def f(t, y):
        stats.evaluations += 1
        out = np.asarray(field(t, y), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteDerivative(f"field returned non-finite values at t={t}")
        return out

    rtol, atol = cfg.rel_tol, cfg.abs_tol
    y = np.array(y0, dtype=float)
    t = float(t0)
    out = np.empty((samples.size, y.size))
    i = 0
    while i < samples.size and samples[i] == t:
        out[i] = y
        i += 1

    f0 = f(t, y)
    h = cfg.initial_step or _initial_step(f, t, y, f0, tf, rtol, atol)
    h = min(h, cfg.max_step)
    err_prev = 1e-4
    k = np.empty((7, y.size))

    while t < tf:
        h_floor = 1e-14 * max(abs(t), 1e-300)
        if h < h_floor:
            raise StepSizeUnderflow(f"step {h:.3e} below {h_floor:.3e} at t={t}")
        last = t + h >= tf
        if last:
            h = tf - t

        k[0] = f0
        for s in range(1, 7):
            k[s] = f(t + C[s] * h, y + h * (np.asarray(A[s]) @ k[:s]))
        y_new = y + h * (B[:6] @ k[:6])
        # FSAL: stage 7 is evaluated at the new point
        err = h * (E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = _rms(err / scale)

        if err_norm <= 1.0:
            t_new = tf if last else t + h
            while i < samples.size and samples[i] <= t_new:
                if samples[i] == t_new:
                    out[i] = y_new
                else:
                    out[i] = _dense(y, h, k, (samples[i] - t) / h)
                i += 1
            stats.accepted += 1
            stats.min_step = min(stats.min_step, h)
            stats.max_step = max(stats.max_step, h)
            err_norm = max(err_norm, 1e-10)
            factor = SAFETY * err_norm ** -ALPHA * err_prev ** BETA
            factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            err_prev = err_norm
            t, y, f0 = t_new, y_new, k[6].copy()
            h = min(h * factor, cfg.max_step)
        else:
            stats.rejected += 1
            factor = max(MIN_FACTOR, SAFETY * err_norm ** -ALPHA)
            h *= factor

    return Solution(samples, out, stats)


def dense_eval(y_old, h, stages, theta):
    """Evaluate the continuous extension of one step (exposed for testing)."""
    return _dense(np.asarray(y_old, float), h, np.asarray(stages, float), theta)
