"""Phase-space vector fields for the regularized system and the baseline.

The regularized system

    x'' + delta sqrt(eps) x' + (1 / (gamma sqrt(eps))) d/dt(A_eta x + eps x)
        + A_eta x + eps x = 0

is integrated in first-order form with ``g = A_eta x + eps x``::

    x' = -y - g / (gamma sqrt(eps))
    y' = -delta sqrt(eps) y + kappa(t) g
    kappa(t) = (gamma - delta) / gamma - (1 / gamma) d/dt(eps**-0.5)

so the operator is never differentiated along the trajectory. The
vanishing-damping baseline

    x'' + (alpha / t) x' + (beta / t) A_eta x + d/dt(A_eta x) = 0

uses ``y = x' + A_eta x``.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, DomainError
from .integrator import IntegratorConfig, integrate
from .operators import yosida
from .schedules import eval_schedule


class SystemKind(str, Enum):
    DS = "DS"
    TDS = "TDS"


@dataclass(frozen=True)
class PhaseState:
    t: float
    x: np.ndarray
    y: np.ndarray

    def pack(self):
        return np.concatenate([self.x, self.y])


def ds_vector_field(state, p, s, op):
    """Return ``(x', y')`` of the regularized system at ``state``."""
    e, _, _, dinv = eval_schedule(s, state.t)
    root = np.sqrt(e)
    g = yosida(op, state.x) + e * state.x
    kappa = (p.gamma - p.delta) / p.gamma - dinv / p.gamma
    xdot = -state.y - g / (p.gamma * root)
    ydot = -p.delta * root * state.y + kappa * g
    return xdot, ydot


def tds_vector_field(state, p, op):
    """Return ``(x', y')`` of the vanishing-damping baseline."""
    if not state.t > 0:
        raise DomainError("baseline field needs t > 0")
    ax = yosida(op, state.x)
    xdot = state.y - ax
    ydot = -(p.alpha / state.t) * xdot - (p.beta / state.t) * ax
    return xdot, ydot


def initial_phase_state(kind, x0, v0, t0, p, s, op):
    """Translate Cauchy data ``x(t0) = x0, x'(t0) = v0`` into phase space."""
    kind = SystemKind(kind)
    if not t0 > 0:
        raise DomainError(f"t0 must be positive, got {t0}")
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (op.dim,) or v0.shape != (op.dim,):
        raise DimensionMismatch("x0 and v0 must match the operator dimension")
    if kind is SystemKind.DS:
        e = eval_schedule(s, t0)[0]
        y0 = -v0 - (yosida(op, x0) + e * x0) / (p.gamma * np.sqrt(e))
    else:
        y0 = v0 + yosida(op, x0)
    return PhaseState(float(t0), x0.copy(), y0)


def make_field(kind, p, s, op):
    """Flatten a phase-space field into ``f(t, z)`` for the integrator."""
    kind = SystemKind(kind)
    n = op.dim

    if kind is SystemKind.DS:
        def field(t, z):
            xd, yd = ds_vector_field(PhaseState(t, z[:n], z[n:]), p, s, op)
            return np.concatenate([xd, yd])
    else:
        def field(t, z):
            xd, yd = tds_vector_field(PhaseState(t, z[:n], z[n:]), p, op)
            return np.concatenate([xd, yd])
    return field


@dataclass
class Trajectory:
    """Sampled trajectory. Arrays are indexed ``[sample, component]``."""

    kind: SystemKind
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xdot: np.ndarray
    stats: object = None

    def __len__(self):
        return self.t.size


def recover_velocity(kind, t, x, y, p, s, op):
    """Compute ``x'`` from the first field equation at each sample."""
    field = make_field(kind, p, s, op)
    n = op.dim
    return np.array([field(ti, np.concatenate([xi, yi]))[:n] for ti, xi, yi in zip(t, x, y)])


def simulate(kind, x0, v0, tf, p, s, op, cfg=None, t0=None):
    """Integrate a system from Cauchy data and return the sampled trajectory.

    ``t0`` defaults to the schedule start. Sample times come from
    ``cfg.sample_times`` (default: 400 log-spaced points on ``[t0, tf]``).
    """
    kind = SystemKind(kind)
    t0 = s.t0 if t0 is None else t0
    cfg = cfg or IntegratorConfig()
    if cfg.sample_times is None:
        cfg = IntegratorConfig(cfg.rel_tol, cfg.abs_tol, cfg.max_step, cfg.initial_step,
                               np.geomspace(t0, tf, 400))
    state0 = initial_phase_state(kind, x0, v0, t0, p, s, op)
    sol = integrate(make_field(kind, p, s, op), t0, state0.pack(), tf, cfg)
    n = op.dim
    x, y = sol.y[:, :n], sol.y[:, n:]
    xdot = recover_velocity(kind, sol.t, x, y, p, s, op)
    return Trajectory(kind, sol.t, x, y, xdot, sol.stats)
