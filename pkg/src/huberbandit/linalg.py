"""Dense small-dimension SPD matrices with incrementally maintained inverses.

Everything downstream (design matrices, confidence ellipsoids, V-norm
projections) goes through this module.  Matrices are plain numpy arrays
wrapped in :class:`SpdMatrix`, which keeps the inverse in sync through
rank-one updates so that no O(d^3) solve is needed in the per-round path.
"""

from __future__ import annotations

import math

import numpy as np


class NumericalDegeneracyError(RuntimeError):
    """A quadratic form came out negative beyond roundoff tolerance."""


class ConvergenceError(RuntimeError):
    """An iterative routine exhausted its iteration budget."""


class SpdMatrix:
    """Symmetric positive-definite matrix with a maintained inverse.

    ``m`` and ``m_inv`` are kept consistent under rank-one updates via the
    Sherman-Morrison identity.  ``log_det_ratio`` accumulates
    log(det(m)/det(m_0)) as a cheap diagnostic of how much the matrix has
    grown since construction.

    Instances are single-writer values: mutation happens only through
    ``rank1_update`` (and the optional periodic refresh), never shared
    between concurrent owners.
    """

    __slots__ = ("m", "m_inv", "log_det_ratio", "refresh_every", "_updates")

    def __init__(self, m, m_inv, refresh_every=0):
        self.m = np.asarray(m, dtype=float)
        self.m_inv = np.asarray(m_inv, dtype=float)
        self.log_det_ratio = 0.0
        # refresh_every > 0 recomputes the inverse from scratch every N
        # updates; off by default (maintained inverse stays within 1e-8 at
        # the horizon lengths this library targets).
        self.refresh_every = int(refresh_every)
        self._updates = 0

    @property
    def dim(self):
        return self.m.shape[0]

    def copy(self):
        out = SpdMatrix(self.m.copy(), self.m_inv.copy(), self.refresh_every)
        out.log_det_ratio = self.log_det_ratio
        out._updates = self._updates
        return out

    def rank1_update(self, x, c):
        """Add ``c * outer(x, x)`` and update the inverse in closed form.

        c must be >= 0 so positive definiteness is preserved; c == 0 is a
        no-op.  Returns self.
        """
        if c < 0.0:
            raise ValueError(f"rank-one weight must be nonnegative, got {c}")
        if c == 0.0:
            return self
        x = np.asarray(x, dtype=float)
        u = self.m_inv @ x
        q = float(x @ u)
        denom = 1.0 + c * q
        self.m += c * (x[:, None] * x)
        self.m_inv -= (c / denom) * (u[:, None] * u)
        # Re-symmetrize to suppress drift over long update sequences.
        m_inv_t = self.m_inv.T.copy()
        self.m_inv += m_inv_t
        self.m_inv *= 0.5
        self.log_det_ratio += math.log(denom)
        self._updates += 1
        if self.refresh_every > 0 and self._updates % self.refresh_every == 0:
            self.refresh_inverse()
        return self

    def refresh_inverse(self):
        """Recompute the inverse from scratch (O(d^3))."""
        inv = np.linalg.inv(self.m)
        self.m_inv = (inv + inv.T) * 0.5

    def vnorm(self, x):
        """sqrt(x' m x)."""
        return vnorm(x, self.m)

    def vnorm_inv(self, x):
        """sqrt(x' m_inv x), i.e. the norm in the inverse geometry."""
        return vnorm(x, self.m_inv)


def spd_identity(lam, d, refresh_every=0):
    """lam * I_d with its inverse, the standard ridge initialization."""
    if not lam > 0.0:
        raise ValueError(f"ridge weight must be positive, got {lam}")
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ValueError(f"dimension must be a positive integer, got {d}")
    m = np.eye(d) * float(lam)
    m_inv = np.eye(d) / float(lam)
    return SpdMatrix(m, m_inv, refresh_every)


def smw_rank1_update(V, x, c):
    """Functional wrapper around :meth:`SpdMatrix.rank1_update`."""
    return V.rank1_update(x, c)


def vnorm(x, M):
    """Norm induced by an SPD matrix: sqrt(x' M x).

    Small negative radicands (roundoff) are clamped to zero; anything below
    -1e-12 indicates a genuinely indefinite matrix and raises.
    """
    x = np.asarray(x, dtype=float)
    r = float(x @ (M @ x))
    if r < -1e-12:
        raise NumericalDegeneracyError(
            f"quadratic form is negative ({r}); matrix is not positive definite"
        )
    return math.sqrt(r) if r > 0.0 else 0.0


_FEASIBLE_SLACK = 1.0 + 1e-12  # makes repeated projection an exact no-op


def project_ball_vnorm(theta, V, S, max_iter=200, tol=1e-12):
    """Minimize ||u - theta||_V over the Euclidean ball ||u||_2 <= S.

    The optimality system is u(mu) = (V + mu*I)^{-1} V theta with mu >= 0
    chosen so that ||u(mu)||_2 = S when theta is infeasible.  V is
    eigendecomposed once, then mu is found by bisection on the monotone
    scalar equation; the result is rescaled onto the boundary so the output
    satisfies ||u||_2 <= S + 1e-10 and projecting twice equals projecting
    once.
    """
    if not S > 0.0:
        raise ValueError(f"ball radius must be positive, got {S}")
    theta = np.asarray(theta, dtype=float)
    norm = float(np.linalg.norm(theta))
    if norm <= S * _FEASIBLE_SLACK:
        return theta

    evals, Q = np.linalg.eigh(V.m)
    y = Q.T @ theta

    def boundary_gap(mu):
        scaled = evals * y / (evals + mu)
        return float(scaled @ scaled) - S * S

    lo = 0.0
    hi = float(evals.max()) * (norm / S)
    expand = 0
    while boundary_gap(hi) > 0.0:
        hi *= 2.0
        expand += 1
        if expand > max_iter:
            raise ConvergenceError("could not bracket the projection dual variable")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if boundary_gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    else:
        raise ConvergenceError(
            f"projection bisection did not converge within {max_iter} iterations"
        )
    mu = 0.5 * (lo + hi)
    u = Q @ (evals * y / (evals + mu))
    u *= S / float(np.linalg.norm(u))
    return u
