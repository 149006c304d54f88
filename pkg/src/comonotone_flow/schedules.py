"""Tikhonov schedules eps(t), dynamics parameters and hypothesis checks."""

from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

TREND_THRESHOLD = 1e-3


@dataclass(frozen=True)
class TikhonovSchedule:
    """Vanishing regularization ``eps(t)`` on ``[t0, inf)``.

    Use :meth:`power` for ``eps(t) = t**-q`` or :meth:`custom` to supply
    ``eps``, its first and its second derivative as callables.
    """

    kind: str
    t0: float
    q: Optional[float] = None
    eps_fn: Optional[Callable] = field(default=None, repr=False)
    deps_fn: Optional[Callable] = field(default=None, repr=False)
    ddeps_fn: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.t0 > 0:
            raise DomainError(f"t0 must be positive, got {self.t0}")
        if self.kind == "power":
            if self.q is None or not 0.0 < self.q < 1.0:
                raise DomainError(f"power schedule needs 0 < q < 1, got {self.q}")
        elif self.kind == "custom":
            if None in (self.eps_fn, self.deps_fn, self.ddeps_fn):
                raise ValueError("custom schedule needs eps, first and second derivative")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def power(cls, q, t0=0.1):
        return cls("power", float(t0), q=float(q))

    @classmethod
    def custom(cls, eps, deps, ddeps, t0):
        return cls("custom", float(t0), eps_fn=eps, deps_fn=deps, ddeps_fn=ddeps)

    @classmethod
    def constant(cls, c, t0):
        """``eps(t) = c``. Violates every vanishing hypothesis; handy as a negative control."""
        return cls.custom(lambda t: c, lambda t: 0.0, lambda t: 0.0, t0)


@dataclass(frozen=True)
class DynamicsParams:
    """Coefficients of the inertial systems.

    ``gamma`` and ``delta`` drive the regularized system, ``alpha`` and
    ``beta`` the vanishing-damping baseline.
    """

    gamma: float = 1.0
    delta: float = 4.0 / 3.0
    alpha: float = 4.0 / 3.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "delta", "alpha", "beta"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


def eval_schedule(s, t):
    """Return ``(eps, eps', eps'', d/dt eps**-0.5)`` at time ``t``."""
    if t < s.t0:
        raise DomainError(f"t={t} precedes schedule start t0={s.t0}")
    if s.kind == "power":
        q = s.q
        e = t ** -q
        de = -q * t ** (-q - 1.0)
        dde = q * (q + 1.0) * t ** (-q - 2.0)
        dinv = 0.5 * q * t ** (0.5 * q - 1.0)
        return e, de, dde, dinv
    e = float(s.eps_fn(t))
    de = float(s.deps_fn(t))
    dde = float(s.ddeps_fn(t))
    if e <= 0:
        raise DomainError(f"eps({t}) = {e} is not positive")
    return e, de, dde, -de / (2.0 * e ** 1.5)


def delta_window(gamma):
    """Open interval of admissible ``delta`` for a given ``gamma``."""
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    return gamma, gamma + gamma / (0.5 * gamma * gamma + 1.0)


def default_grid(t0, t_end=100.0, n=200):
    """Logarithmic grid on ``[t0, t_end]``; ``t_end`` is pushed past ``t0`` if needed."""
    return np.geomspace(t0, max(t_end, 10.0 * t0), n)


@dataclass
class HypothesisEntry:
    name: str
    satisfied: object  # True, False, "asymptotic-trend" or "indeterminate"
    t1_estimate: Optional[float] = None
    evidence: dict = field(default_factory=dict)


@dataclass
class HypothesisReport:
    entries: list

    def __getitem__(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def names(self):
        return [e.name for e in self.entries]

    def ok(self, names=None):
        """True when every selected entry is satisfied or trending correctly."""
        sel = self.entries if names is None else [self[n] for n in names]
        return all(e.satisfied is True or e.satisfied == "asymptotic-trend" for e in sel)

    def failed(self):
        return [e.name for e in self.entries if e.satisfied is False]

    def to_dict(self):
        return {"entries": [asdict(e) for e in self.entries], "failed": self.failed()}


CONDITIONS = (
    "eps_vanishing",
    "eta_admissible",
    "delta_window",
    "inv_sqrt_eps_rate_vanishing",
    "second_derivative_bound",
    "eps_derivative_ratio_vanishing",
    "sqrt_eps_integral_divergent",
)
DECAY_CONDITIONS = CONDITIONS[:4]


def _tail(values, frac=0.25):
    k = max(2, int(np.ceil(frac * len(values))))
    return np.asarray(values[-k:])


def _vanishing_trend(values):
    """Grid verdict for ``values -> 0``: monotone tail shrinking toward zero."""
    tail = np.abs(_tail(values))
    if np.max(tail) <= 1e-12:
        return True
    if np.all(np.diff(tail) < 0):
        return True if tail[-1] <= TREND_THRESHOLD else "asymptotic-trend"
    return False


def _sample(values):
    """A short, JSON-friendly view of a grid series."""
    v = np.asarray(values, dtype=float)
    idx = sorted({0, len(v) // 2, len(v) - 1})
    return [float(v[i]) for i in idx]


def check_hypotheses(s, p, op, t_grid=None):
    """Evaluate every standing and convergence hypothesis on a time grid.

    Pointwise conditions are decided exactly on the grid. Limit conditions
    are decided in closed form for power schedules and reported as grid
    trends for custom schedules; a trend is evidence, not a proof.
    """
    t_grid = default_grid(s.t0) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0) or t_grid[0] < s.t0:
        raise DomainError("t_grid must be ascending and start at or after t0")
    g, d = p.gamma, p.delta
    vals = np.array([eval_schedule(s, t) for t in t_grid])
    e, de, dde, dinv = vals.T
    power = s.kind == "power"
    entries = []

    # eps positive, nonincreasing, vanishing
    nonincreasing = bool(np.all(e > 0) and np.all(de <= 0) and np.all(np.diff(e) <= 0))
    if power:
        verdict = nonincreasing
    else:
        verdict = _vanishing_trend(e) if nonincreasing else False
    entries.append(HypothesisEntry(CONDITIONS[0], verdict,
                                   evidence={"eps": _sample(e), "nonincreasing": nonincreasing}))

    bound = max(-2.0 * op.rho, 0.0)
    entries.append(HypothesisEntry(CONDITIONS[1], bool(op.eta > bound),
                                   evidence={"eta": op.eta, "lower_bound": bound}))

    lo, hi = delta_window(g)
    entries.append(HypothesisEntry(CONDITIONS[2], bool(lo < d < hi),
                                   evidence={"delta": d, "window": [lo, hi]}))

    # d/dt eps^-1/2 = (q/2) t^(q/2 - 1) -> 0 iff q < 2
    verdict = bool(s.q < 2.0) if power else _vanishing_trend(dinv)
    entries.append(HypothesisEntry(CONDITIONS[3], verdict, evidence={"values": _sample(dinv)}))

    # eps^-1/2 eps'' <= -(delta - gamma)/4 eps', from some t1 onward
    lhs = dde / np.sqrt(e)
    rhs = -0.25 * (d - g) * de
    holds = lhs <= rhs
    t1 = None
    if holds[-1]:
        bad = np.nonzero(~holds)[0]
        t1 = float(t_grid[0] if bad.size == 0 else t_grid[bad[-1] + 1])
    entries.append(HypothesisEntry(CONDITIONS[4], bool(holds[-1]), t1_estimate=t1,
                                   evidence={"margin": _sample(rhs - lhs),
                                             "holds_fraction": float(np.mean(holds))}))

    # eps^(-2 - 1/gamma^2) eps' -> 0; for t^-q the exponent is q(1 + 1/gamma^2) - 1
    ratio = e ** (-2.0 - 1.0 / g ** 2) * de
    if power:
        exponent = s.q * (1.0 + 1.0 / g ** 2) - 1.0
        verdict = bool(exponent < 0)
        ev = {"values": _sample(ratio), "exponent": exponent}
    else:
        verdict = _vanishing_trend(ratio)
        ev = {"values": _sample(ratio)}
    entries.append(HypothesisEntry(CONDITIONS[5], verdict, evidence=ev))

    # int sqrt(eps) -> infinity
    root = np.sqrt(e)
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (root[1:] + root[:-1]) * np.diff(t_grid))])
    if power:
        verdict = bool(s.q <= 2.0)
    else:
        inc = np.diff(_tail(cumulative))
        verdict = "asymptotic-trend" if np.all(inc > 0) else False
    entries.append(HypothesisEntry(CONDITIONS[6], verdict,
                                   evidence={"cumulative_integral": _sample(cumulative)}))
    return HypothesisReport(entries)
