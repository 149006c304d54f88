"""Diagnostics along trajectories of the regularized system.

Covers the viscosity curve ``x_eps`` (unique zero of ``A_eta + eps Id``),
the Lyapunov energy, its three a-priori bounds, the exponential decay
certificate and empirical power-law rate fits.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (DomainError, InsufficientData, MissingReference, NoConvergence,
                     NonPositiveValue)
from .linalg import solve_dense
from .operators import yosida
from .schedules import CONDITIONS, check_hypotheses, eval_schedule

VISCOSITY_TOL = 1e-11
MAX_ITER = 1_000_000


def viscosity_point(op, eps, method="auto", tol=VISCOSITY_TOL, max_iter=MAX_ITER, x_init=None):
    """Unique zero of ``A_eta + eps Id``.

    Linear and affine operators are solved directly. Custom operators (or
    ``method="iterate"``) use the damped fixed-point iteration
    ``x <- x - tau (A_eta x + eps x)`` with ``tau = eps / L**2`` and
    ``L = 1 / (rho + eta) + eps``, which contracts for this strongly monotone,
    Lipschitz map.
    """
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if method == "auto":
        method = "iterate" if op.kind == "custom" else "direct"
    if method == "direct":
        y, c = op.yosida_affine_form()
        return solve_dense(y + eps * np.eye(op.dim), c)
    if method != "iterate":
        raise ValueError(f"unknown method {method!r}")

    lip = 1.0 / op.cocoercivity + eps
    tau = eps / lip ** 2
    x = np.zeros(op.dim) if x_init is None else np.array(x_init, dtype=float)
    for _ in range(max_iter):
        r = yosida(op, x) + eps * x
        if np.linalg.norm(r) <= tol:
            return x
        x = x - tau * r
    raise NoConvergence(f"viscosity iteration did not reach {tol} in {max_iter} steps")


@dataclass
class EnergyRecord:
    t: float
    energy: float
    x_eps: np.ndarray
    bound_residuals: tuple  # (position, velocity, operator): bound minus quantity


def energy(t, x, xdot, p, s, op, x_eps=None):
    """Energy ``E(t)`` and the residuals of its three a-priori bounds.

    ``E = 1/2 |gamma sqrt(eps) (x - x_eps) + x'|^2 + <A_eta x + eps x, x - x_eps>``

    Residuals (all nonnegative in exact arithmetic):

    * ``E / eps - |x - x_eps|^2``
    * ``(4 + 2 gamma^2) E - |x'|^2``
    * ``E / (rho + eta) - |A_eta x + eps x_eps|^2``
    """
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    e = eval_schedule(s, t)[0]
    xe = viscosity_point(op, e) if x_eps is None else x_eps
    ax = yosida(op, x)
    d = x - xe
    w = p.gamma * np.sqrt(e) * d + xdot
    en = 0.5 * (w @ w) + (ax + e * x) @ d
    op_res = ax + e * xe
    residuals = (
        en / e - d @ d,
        (4.0 + 2.0 * p.gamma ** 2) * en - xdot @ xdot,
        en / op.cocoercivity - op_res @ op_res,
    )
    return EnergyRecord(float(t), float(en), xe, tuple(float(r) for r in residuals))


def energy_series(traj, p, s, op):
    """EnergyRecord at every trajectory sample."""
    return [energy(t, x, v, p, s, op) for t, x, v in zip(traj.t, traj.x, traj.xdot)]


def lemma_ineq_check(op, s, t_grid):
    """Finite-difference check of ``|d/dt x_eps| <= (-eps'/eps) |x_eps|``.

    The derivative is the forward difference between adjacent grid points and
    the right-hand side is evaluated at the interval midpoint. Returns the
    largest ``lhs - rhs``; nonpositive means the inequality held everywhere.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    pts = [viscosity_point(op, eval_schedule(s, t)[0]) for t in t_grid]
    worst = -np.inf
    for i in range(t_grid.size - 1):
        dt = t_grid[i + 1] - t_grid[i]
        lhs = np.linalg.norm(pts[i + 1] - pts[i]) / dt
        tm = 0.5 * (t_grid[i] + t_grid[i + 1])
        e, de, _, _ = eval_schedule(s, tm)
        rhs = (-de / e) * np.linalg.norm(viscosity_point(op, e))
        worst = max(worst, lhs - rhs)
    return float(worst)


def viscosity_norm_check(op, s, t_grid, x_star):
    """Largest ``|x_eps(t)| - |x_star|`` over the grid (nonpositive expected)."""
    ref = np.linalg.norm(x_star)
    return float(max(np.linalg.norm(viscosity_point(op, eval_schedule(s, t)[0])) - ref
                     for t in t_grid))


def strong_monotonicity_sample(op, eps, trials=1000, seed=0, box=10.0):
    """Smallest ``<Tx - Ty, x - y> - eps |x - y|^2`` for ``T = A_eta + eps Id``."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(trials):
        x, y = rng.uniform(-box, box, size=(2, op.dim))
        d = x - y
        tx_ty = yosida(op, x) - yosida(op, y) + eps * d
        worst = min(worst, float(tx_ty @ d - eps * (d @ d)))
    return worst


# -- decay certificate -------------------------------------------------------

def mu(s, p, t):
    """Exponential rate ``mu(t) = sqrt(eps) [(1 - 2/gamma^2) d/dt eps^-1/2 + delta - gamma]``."""
    e, _, _, dinv = eval_schedule(s, t)
    return np.sqrt(e) * ((1.0 - 2.0 / p.gamma ** 2) * dinv + p.delta - p.gamma)


def _refined(t_grid, substeps):
    t_grid = np.asarray(t_grid, dtype=float)
    pieces = [np.linspace(a, b, substeps + 1)[:-1] for a, b in zip(t_grid[:-1], t_grid[1:])]
    return np.concatenate(pieces + [t_grid[-1:]])


def _cumtrapz(y, t):
    return np.concatenate([[0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))])


def omega_quadrature(s, p, t_grid, substeps=64):
    """``omega(t) = exp(int_{t_grid[0]}^t mu)`` by refined trapezoidal quadrature."""
    fine = _refined(t_grid, substeps)
    log_w = _cumtrapz(np.array([mu(s, p, t) for t in fine]), fine)
    return np.exp(log_w[::substeps])


def omega_closed_form(s, p, t_grid):
    """Closed form of ``omega`` for ``eps = t**-q``, normalised to 1 at ``t_grid[0]``."""
    if s.kind != "power":
        raise DomainError("closed-form omega needs a power schedule")
    q, g = s.q, p.gamma
    t = np.asarray(t_grid, dtype=float)
    t1 = t[0]
    d0 = 2.0 * (p.delta - g) / (2.0 - q)
    k = 1.0 - 0.5 * q
    return (t / t1) ** ((0.5 - 1.0 / g ** 2) * q) * np.exp(d0 * (t ** k - t1 ** k))


@dataclass
class DecayCertificate:
    t1: float
    a_choice: float
    t: np.ndarray
    mu_samples: np.ndarray
    omega_samples: np.ndarray
    energy: np.ndarray
    bound_curve: np.ndarray
    satisfied: bool
    omega_closed_form_rel_err: Optional[float] = None

    @property
    def worst_ratio(self):
        """Largest ``E / B`` over the certified window."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.energy / self.bound_curve
        return float(np.nanmax(r))


def decay_certificate(traj, p, s, op, t1, x_star=None, substeps=64, energies=None):
    """Check the exponential-weight energy bound from ``t1`` on.

    With ``a = (2 gamma - delta)(rho + eta)``, the midpoint of the admissible
    interval ``(0, 2 (2 gamma - delta)(rho + eta))``, verifies at every sample
    ``t >= t1``::

        E(t) <= |x*|^2 / a * int_{t1}^t (eps^-5/2 eps'^2 - eps') omega ds / omega(t)
                + omega(t1) E(t1) / omega(t)

    Raises
    ------
    MissingReference
        If ``x_star`` is not supplied.
    DomainError
        If the schedule or parameters violate the premises of the bound.
    """
    if x_star is None:
        raise MissingReference("decay certificate needs the reference solution x_star")
    report = check_hypotheses(s, p, op)
    premises = [CONDITIONS[0], CONDITIONS[1], CONDITIONS[2], CONDITIONS[3]]
    if not report.ok(premises):
        raise DomainError("decay certificate premises fail: "
                          + ", ".join(n for n in premises if n in report.failed()
                                      or report[n].satisfied == "indeterminate"))
    idx = np.nonzero(traj.t >= t1)[0]
    if idx.size < 2:
        raise InsufficientData("fewer than two samples after t1")
    t = traj.t[idx]
    t1 = float(t[0])
    if energies is None:
        en = np.array([energy(ti, traj.x[i], traj.xdot[i], p, s, op).energy
                       for ti, i in zip(t, idx)])
    else:
        en = np.asarray(energies, dtype=float)[idx]

    a = (2.0 * p.gamma - p.delta) * op.cocoercivity
    fine = _refined(t, substeps)
    mu_fine = np.array([mu(s, p, ti) for ti in fine])
    w_fine = np.exp(_cumtrapz(mu_fine, fine))
    sched = np.array([eval_schedule(s, ti)[:2] for ti in fine])
    forcing = (sched[:, 0] ** -2.5 * sched[:, 1] ** 2 - sched[:, 1]) * w_fine
    integral = _cumtrapz(forcing, fine)[::substeps]
    w = w_fine[::substeps]
    xs2 = float(np.dot(x_star, x_star))
    bound = xs2 / a * integral / w + en[0] / w
    satisfied = bool(np.all(en <= bound * (1.0 + 1e-6) + 1e-9))

    rel = None
    if s.kind == "power":
        closed = omega_closed_form(s, p, t)
        rel = float(np.max(np.abs(closed - w) / closed))
    return DecayCertificate(t1, a, t, mu_fine[::substeps], w, en, bound, satisfied, rel)


# -- rate fitting ------------------------------------------------------------

@dataclass
class RateFit:
    quantity: str
    window: tuple
    slope: float
    r_squared: float
    theory_exponent: Optional[float] = None
    points: int = 0

    @property
    def deviation(self):
        return None if self.theory_exponent is None else self.slope - self.theory_exponent


def fit_rate(t, values, window_fraction=0.5, quantity="value", theory_exponent=None,
             min_points=10):
    """Least-squares slope of ``log(value)`` against ``log(t)``.

    Only the trailing ``window_fraction`` of the log-time range is used.
    """
    if not 0.0 < window_fraction <= 1.0:
        raise DomainError("window_fraction must lie in (0, 1]")
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    lt = np.log(t)
    lo = lt[-1] - window_fraction * (lt[-1] - lt[0])
    mask = lt >= lo - 1e-12
    if mask.sum() < min_points:
        raise InsufficientData(f"{mask.sum()} points in window, need {min_points}")
    if np.any(v[mask] <= 0):
        raise NonPositiveValue(f"{quantity} has nonpositive values in the fit window")
    xs, ys = lt[mask], np.log(v[mask])
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot <= 1e-300 * max(1, len(ys)) or ss_res <= 1e-24 * ss_tot else 1.0 - ss_res / ss_tot
    return RateFit(quantity, (float(t[mask][0]), float(t[mask][-1])), float(slope),
                   float(min(max(r2, 0.0), 1.0)), theory_exponent, int(mask.sum()))


def rate_exponents(q):
    """Power-law exponents bounding the decay for ``eps = t**-q``.

    Returns two readings: ``"proof"`` (what the derivation establishes) and
    ``"statement"`` (an alternative reading in which the velocity and
    operator exponents swap between the two regimes). The position exponent is
    the same in both.
    """
    if not 0.0 < q < 1.0:
        raise DomainError("rates are established for 0 < q < 1")
    slow, fast = q - 2.0, -0.5 * q - 1.0
    if q < 2.0 / 3.0:
        energy_exp, position = fast, 0.5 * q - 1.0
        proof_v, statement_v = fast, slow
    else:
        energy_exp, position = slow, 2.0 * q - 2.0
        proof_v, statement_v = slow, fast
    proof = {"energy": energy_exp, "position": position, "velocity": proof_v, "operator": proof_v}
    statement = {"energy": energy_exp, "position": position,
                 "velocity": statement_v, "operator": statement_v}
    return {"proof": proof, "statement": statement}
