"""Water-filling transmit covariances that maximize the deterministic rate.

The optimal covariance of user k aligns with the eigenvectors of its
transmit correlation T_k; the eigenvalue powers follow a per-user
water-filling rule coupled to the fundamental equations through g_k.  The
coupling is resolved by alternating fixed-point solves and water-filling
updates until the allocation stops moving.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import is_diagonal
from .detequiv import mi_det
from .errors import NonConvergenceError
from .fixedpoint import solve_fundamental
from .model import ChannelSpec

DEFAULT_EPS = 1e-8
DEFAULT_MAX_OUTER = 500


@dataclass(frozen=True)
class PowerAllocation:
    """Water-filling result for one user.

    `U` is the eigenbasis of the transmit correlation, `t` its eigenvalues,
    `p` the per-stream powers with (1/n) sum_j p_j equal to the budget, and
    `mu` the water level.  The covariance itself is `U diag(p) U^H`.
    """

    U: np.ndarray
    p: np.ndarray
    mu: float
    t: np.ndarray

    @property
    def Q(self):
        return (self.U * self.p) @ self.U.conj().T


def waterfill_step(t, g, P):
    """Single water-filling update p_j = max(mu - 1/(g t_j), 0).

    The water level mu is chosen so that (1/n) sum_j p_j = P exactly, via
    the closed-form prefix formula over the sorted inverse gains (exact in
    finitely many steps, no bisection tolerance).  Streams with t_j = 0 are
    excluded a priori and receive zero power.

    Parameters
    ----------
    t : array_like
        Non-negative per-stream gains (eigenvalues of the transmit
        correlation), at least one strictly positive.
    g : float
        Positive coupling coefficient from the fundamental equations.
    P : float
        Per-antenna average power budget (> 0).

    Returns
    -------
    (p, mu) : (ndarray, float)
        Non-negative powers meeting the budget with equality, and the
        water level.
    """
    t = np.asarray(t, dtype=float)
    if not g > 0:
        raise ValueError(f"g must be > 0, got {g}")
    if not P > 0:
        raise ValueError(f"P must be > 0, got {P}")
    n = t.size
    active = t > 0.0
    if not np.any(active):
        raise ValueError("all stream gains are zero; no channel to fill")
    a = 1.0 / (g * t[active])
    order = np.argsort(a)
    a_sorted = a[order]
    prefix = np.cumsum(a_sorted)
    m_range = np.arange(1, a_sorted.size + 1)
    levels = (n * P + prefix) / m_range
    # largest active set whose water level clears its worst stream
    valid = np.nonzero(levels > a_sorted)[0]
    m = valid[-1] + 1
    mu = float(levels[m - 1])
    p_act = np.zeros(a_sorted.size)
    p_act[:m] = mu - a_sorted[:m]
    p_sub = np.empty(a_sorted.size)
    p_sub[order] = p_act
    p = np.zeros(n)
    p[active] = p_sub
    return p, mu


def mi_gradient(spec, sol, k, j):
    """Derivative of the aggregate deterministic rate in the power p_kj.

    For a spec in eigenbasis form (T_k and Q_k both diagonal, so that
    t_kj = T_k[j,j] and p_kj = Q_k[j,j]) the derivative of the
    unnormalized rate N * mi_det is

        g_k t_kj / (1 + g_k t_kj p_kj)

    with g_k held at the solution; the envelope property of the
    fundamental equations makes this equal the total derivative.
    """
    u = spec.users[k]
    if not (is_diagonal(u.T) and is_diagonal(u.Q)):
        raise ValueError(
            "mi_gradient requires user matrices in eigenbasis form "
            "(T and Q both diagonal)")
    t = u.T[j, j].real
    p = u.Q[j, j].real
    g = sol.g[k]
    return g * t / (1.0 + g * t * p)


def _respec(spec, allocations):
    users = [u.with_covariance((a.U * a.p) @ a.U.conj().T)
             for u, a in zip(spec.users, allocations)]
    return ChannelSpec(users, spec.rho)


def iterative_waterfilling(spec, eps=DEFAULT_EPS, max_outer=DEFAULT_MAX_OUTER,
                           solver_tol=1e-10):
    """Alternate fixed-point solves and water-filling to the optimal powers.

    Starting from uniform powers p_kj = P_k, each outer sweep solves the
    fundamental equations at the current covariances Q_k = U_k diag(p) U_k^H
    and re-fills every user's powers with the resulting g_k, until the max
    power displacement drops to `eps`.

    Returns `(allocations, solution)` where `allocations[k]` is the
    `PowerAllocation` of user k and `solution` is the fixed-point solution
    whose g_k produced the returned powers, so that
    p_kj = max(mu_k - 1/(g_k t_kj), 0) holds exactly.

    Every user must declare a power budget.  The deterministic rate is
    tracked across sweeps and a warning is emitted if it ever decreases
    (not an error: monotonicity of the alternation is not guaranteed in
    general).
    """
    for k, u in enumerate(spec.users):
        if u.P is None:
            raise ValueError(f"user {k} declares no power budget P")
        if not u.P > 0:
            raise ValueError(f"user {k} budget must be > 0, got {u.P}")
        if not np.any(u.t_eigs > 0):
            raise ValueError(f"user {k} has zero transmit correlation")

    ps = [np.full(u.n, u.P) for u in spec.users]
    allocations = [PowerAllocation(u.t_basis, np.asarray(p), np.nan, u.t_eigs)
                   for u, p in zip(spec.users, ps)]
    mi_prev = None
    disp_trace = []
    for _ in range(max_outer):
        cur = _respec(spec, allocations)
        sol = solve_fundamental(cur, tol=solver_tol)
        mi_cur = mi_det(cur, sol)
        if mi_prev is not None and mi_cur < mi_prev - 1e-12:
            warnings.warn(
                f"deterministic rate decreased across water-filling sweeps "
                f"({mi_prev:.12g} -> {mi_cur:.12g})", RuntimeWarning)
        mi_prev = mi_cur
        new_alloc = []
        for k, u in enumerate(spec.users):
            p, mu = waterfill_step(u.t_eigs, sol.g[k], u.P)
            new_alloc.append(PowerAllocation(u.t_basis, p, mu, u.t_eigs))
        disp = max(float(np.max(np.abs(a.p - b.p)))
                   for a, b in zip(new_alloc, allocations))
        disp_trace.append(disp)
        allocations = new_alloc
        if disp <= eps:
            return allocations, sol
    raise NonConvergenceError(
        f"water-filling: max power displacement {disp_trace[-1]:.3e} above "
        f"eps {eps:.1e} after {max_outer} sweeps",
        last=allocations, trace=disp_trace)
