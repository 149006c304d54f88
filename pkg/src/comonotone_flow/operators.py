"""Operators presented through their resolvent.

A point-to-set operator ``A`` enters the dynamics only through its Yosida
regularization ``A_eta = (Id - J_eta) / eta`` where ``J_eta = (Id + eta A)^-1``
is the resolvent. Three presentations are supported:

* ``linear``: ``A x = M x``
* ``affine``: ``A x = M x - b`` (zeros solve ``M x = b``)
* ``custom``: a user callable ``resolvent(eta, z)``

Linear and affine operators precompute ``(I + eta M)^-1`` once, so every
resolvent evaluation is a single matrix-vector product.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, DomainError
from .linalg import as_mat, as_vec, inverse, sym_eigen

KINDS = ("linear", "affine", "custom")


@dataclass(frozen=True)
class OperatorSpec:
    """A maximally rho-comonotone operator with its Yosida index.

    Parameters
    ----------
    kind : {"linear", "affine", "custom"}
    rho : float
        Comonotonicity modulus. Negative values describe cohypomonotone,
        possibly nonmonotone operators.
    eta : float
        Yosida index, required to satisfy ``eta > max(-2 rho, 0)``.
    dim : int
    matrix, offset : ndarray, optional
        Data for the linear and affine kinds.
    resolvent_fn : callable, optional
        ``resolvent_fn(eta, z) -> ndarray`` for the custom kind.
    """

    kind: str
    rho: float
    eta: float
    dim: int
    matrix: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    resolvent_fn: Optional[Callable] = None
    _res_matrix: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if not self.eta > max(-2.0 * self.rho, 0.0):
            raise DomainError(
                f"eta={self.eta} must exceed max(-2*rho, 0) = {max(-2.0 * self.rho, 0.0)}"
            )
        if self.kind == "custom":
            if self.resolvent_fn is None:
                raise ValueError("custom operator needs resolvent_fn")
            return
        m = as_mat(self.matrix, "matrix")
        if m.shape[0] != self.dim:
            raise DimensionMismatch(f"matrix is {m.shape[0]}x{m.shape[0]}, dim={self.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.kind == "affine":
            b = as_vec(self.offset, "offset")
            if b.size != self.dim:
                raise DimensionMismatch(f"offset has length {b.size}, dim={self.dim}")
            b.setflags(write=False)
            object.__setattr__(self, "offset", b)
        # raises SingularMatrix when I + eta M is not invertible
        r = inverse(np.eye(self.dim) + self.eta * m)
        r.setflags(write=False)
        object.__setattr__(self, "_res_matrix", r)

    @classmethod
    def linear(cls, matrix, rho, eta):
        m = as_mat(matrix)
        return cls("linear", float(rho), float(eta), m.shape[0], matrix=m)

    @classmethod
    def affine(cls, matrix, offset, rho, eta):
        m = as_mat(matrix)
        return cls("affine", float(rho), float(eta), m.shape[0], matrix=m, offset=offset)

    @classmethod
    def custom(cls, resolvent_fn, dim, rho, eta):
        return cls("custom", float(rho), float(eta), int(dim), resolvent_fn=resolvent_fn)

    @property
    def cocoercivity(self):
        """Cocoercivity modulus ``rho + eta`` of the Yosida regularization."""
        return self.rho + self.eta

    def yosida_affine_form(self):
        """Return ``(Y, c)`` with ``A_eta z = Y z - c`` for linear/affine kinds."""
        if self.kind == "custom":
            raise TypeError("custom operators have no closed affine form")
        r = self._res_matrix
        y = (np.eye(self.dim) - r) / self.eta
        if self.kind == "linear":
            return y, np.zeros(self.dim)
        return y, r @ self.offset


def diagonal_example(rho=-1.0, eta=3.0):
    """The 3x3 diagonal operator ``diag(1, 0, -1)`` used as the reference problem.

    It is maximally (-1)-comonotone but not monotone; its zeros are the line
    ``(0, b, 0)`` and the minimum-norm zero is the origin.
    """
    return OperatorSpec.linear(np.diag([1.0, 0.0, -1.0]), rho, eta)


def _check_dim(op, z):
    z = np.asarray(z, dtype=float)
    if z.shape != (op.dim,):
        raise DimensionMismatch(f"vector has shape {z.shape}, operator dim is {op.dim}")
    return z


def resolvent(op, z):
    """Evaluate ``J = (Id + eta A)^-1 z``."""
    z = _check_dim(op, z)
    if op.kind == "linear":
        return op._res_matrix @ z
    if op.kind == "affine":
        return op._res_matrix @ (z + op.eta * op.offset)
    out = np.asarray(op.resolvent_fn(op.eta, z), dtype=float)
    if out.shape != (op.dim,):
        raise DimensionMismatch(f"custom resolvent returned shape {out.shape}")
    return out


def yosida(op, z):
    """Evaluate the Yosida regularization ``(z - J z) / eta``."""
    z = _check_dim(op, z)
    return (z - resolvent(op, z)) / op.eta


@dataclass
class ComonotonicityCertificate:
    rho: float
    holds: bool
    witness_min_eigen: float
    counterexample: Optional[np.ndarray] = None


def certify_comonotone(m, rho, tol=1e-10):
    """Decide ``<u, M u> >= rho |M u|^2`` for all ``u`` via a PSD test.

    For a linear operator the comonotonicity inequality is the quadratic form
    of ``sym(M) - rho M^T M``; it holds iff that matrix is positive
    semidefinite. When it fails, the eigenvector of the most negative
    eigenvalue is returned as a violating direction.
    """
    m = as_mat(m)
    s = 0.5 * (m + m.T) - rho * (m.T @ m)
    values, vectors = sym_eigen(s)
    lam = float(values[0])
    holds = lam >= -tol
    counter = None if holds else vectors[:, 0].copy()
    return ComonotonicityCertificate(float(rho), bool(holds), lam, counter)


def sample_comonotone(m, rho, trials=10_000, seed=0, box=10.0):
    """Brute-force check of ``<u, M u> >= rho |M u|^2`` on random ``u``.

    Returns the smallest observed margin ``<u, M u> - rho |M u|^2``,
    normalised by ``|u|^2`` so it is comparable with an eigenvalue.
    """
    m = as_mat(m)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-box, box, size=(trials, m.shape[0]))
    mu = u @ m.T
    margin = np.einsum("ij,ij->i", u, mu) - rho * np.einsum("ij,ij->i", mu, mu)
    return float(np.min(margin / np.einsum("ij,ij->i", u, u)))


def _sample_pairs(op, trials, seed, box):
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-box, box, size=(trials, op.dim))
    ys = rng.uniform(-box, box, size=(trials, op.dim))
    return xs, ys


def check_cocoercivity_sample(op, beta, trials=1000, seed=0, box=10.0, slack=1e-9, pairs=None):
    """Sample ``<A_eta x - A_eta y, x - y> >= beta |A_eta x - A_eta y|^2``.

    Returns
    -------
    passed : bool
    worst_margin : float
        Minimum over the samples of ``lhs - beta * rhs``.
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    xs, ys = pairs if pairs is not None else _sample_pairs(op, trials, seed, box)
    worst = np.inf
    for x, y in zip(xs, ys):
        d = yosida(op, x) - yosida(op, y)
        margin = float(d @ (x - y) - beta * (d @ d))
        worst = min(worst, margin)
    return bool(worst >= -slack), float(worst)


def check_averaged_sample(op, trials=1000, seed=0, box=10.0, slack=1e-9):
    """Sample the averagedness inequality of the resolvent.

    With ``theta = eta / (2 (rho + eta))`` checks
    ``(1 - theta)|(I-J)x - (I-J)y|^2 <= theta (|x - y|^2 - |Jx - Jy|^2)``.
    Returns ``(passed, worst_margin)`` with margin = rhs - lhs.
    """
    theta = op.eta / (2.0 * (op.rho + op.eta))
    xs, ys = _sample_pairs(op, trials, seed, box)
    worst = np.inf
    for x, y in zip(xs, ys):
        jx, jy = resolvent(op, x), resolvent(op, y)
        r = (x - jx) - (y - jy)
        lhs = (1.0 - theta) * (r @ r)
        rhs = theta * ((x - y) @ (x - y) - (jx - jy) @ (jx - jy))
        worst = min(worst, float(rhs - lhs))
    return bool(worst >= -slack), float(worst)


def check_lipschitz_sample(op, trials=1000, seed=0, box=10.0, rel_slack=1e-9):
    """Sample ``|A_eta x - A_eta y| <= |x - y| / (rho + eta)``.

    Returns ``(passed, worst_ratio)`` where the ratio is the observed
    ``|A_eta x - A_eta y| (rho + eta) / |x - y|`` (must stay below 1).
    """
    xs, ys = _sample_pairs(op, trials, seed, box)
    worst = 0.0
    for x, y in zip(xs, ys):
        dist = np.linalg.norm(x - y)
        if dist == 0.0:
            continue
        ratio = np.linalg.norm(yosida(op, x) - yosida(op, y)) * op.cocoercivity / dist
        worst = max(worst, float(ratio))
    return bool(worst <= 1.0 + rel_slack), worst
