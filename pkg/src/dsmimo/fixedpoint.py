"""Damped fixed-point solvers for the coupled large-system equations.

`solve_fundamental` solves the 3K-equation system whose unique positive
solution (gbar_k, g_k, delta_k) parameterizes every deterministic
approximation in this package.  `solve_kronecker` solves the 2K-equation
system of the conditional model with fixed receive-side matrices Z_k; it
is used as an independent verification oracle for the claim that its
random-Z solutions concentrate around the fundamental ones.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, NumericDomainError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
_ALPHA_FLOOR = 1.0 / 16.0
_GROW_AFTER = 5  # consecutive residual decreases before damping relaxes


@dataclass(frozen=True)
class FixedPointSolution:
    """Solution (gbar_k, g_k, delta_k) of the 3K fundamental equations.

    All entries are non-negative; they are strictly positive whenever the
    corresponding effective transmit matrix T^(1/2) Q T^(1/2) is non-zero.
    `residual` is the max over the 3K equations of |lhs - rhs|.
    """

    gbar: np.ndarray
    g: np.ndarray
    delta: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class KroneckerSolution:
    """Solution (ebar_k, e_k) of the 2K conditional-model equations."""

    ebar: np.ndarray
    e: np.ndarray
    iterations: int
    residual: float


def _coupling_inverse(spec, gbar, g, delta):
    """Inverse of sum_i (n_i/Ns_i) (gbar_i g_i / delta_i) R_i + rho I."""
    M = spec.rho * np.eye(spec.N, dtype=complex)
    for i, u in enumerate(spec.users):
        num = gbar[i] * g[i]
        if num > 0.0:
            M += (u.n / u.Ns) * (num / delta[i]) * u.R
    return np.linalg.inv(M)


def _sweep(spec, gbar, g, delta):
    """One Gauss-Seidel sweep: all delta_k first, then g_k, then gbar_k.

    The delta equation couples every user, so refreshing it first
    stabilizes the iteration.
    """
    K = spec.K
    Minv = _coupling_inverse(spec, gbar, g, delta)
    d_new = np.empty(K)
    g_new = np.empty(K)
    gb_new = np.empty(K)
    for k, u in enumerate(spec.users):
        d_new[k] = np.einsum("ab,ba->", u.R, Minv).real / u.Ns
    for k, u in enumerate(spec.users):
        sd = u.s * d_new[k]
        g_new[k] = np.sum(sd / (1.0 + gbar[k] * sd)) / u.n
    for k, u in enumerate(spec.users):
        gb_new[k] = np.sum(u.tq_eigs / (1.0 + g_new[k] * u.tq_eigs)) / u.n
    return gb_new, g_new, d_new


def residuals(spec, gbar, g, delta):
    """Per-equation residuals |lhs - rhs| of the 3K fundamental equations.

    Pure evaluation at the candidate point; returns a vector of length 3K
    ordered (gbar_1, g_1, delta_1, gbar_2, g_2, delta_2, ...).
    """
    gbar = np.asarray(gbar, dtype=float)
    g = np.asarray(g, dtype=float)
    delta = np.asarray(delta, dtype=float)
    Minv = _coupling_inverse(spec, gbar, g, delta)
    out = np.empty(3 * spec.K)
    for k, u in enumerate(spec.users):
        rhs_gb = np.sum(u.tq_eigs / (1.0 + g[k] * u.tq_eigs)) / u.n
        sd = u.s * delta[k]
        rhs_g = np.sum(sd / (1.0 + gbar[k] * sd)) / u.n
        rhs_d = np.einsum("ab,ba->", u.R, Minv).real / u.Ns
        out[3 * k] = abs(gbar[k] - rhs_gb)
        out[3 * k + 1] = abs(g[k] - rhs_g)
        out[3 * k + 2] = abs(delta[k] - rhs_d)
    return out


def _damped_iteration(state, sweep, resid, tol, max_iter, what):
    """Shared damping loop: halve the step on residual increase, relax it
    back toward 1 after a streak of decreases."""
    res = resid(*state)
    if res <= tol:
        return state, 0, res
    alpha, streak = 1.0, 0
    trace = [res]
    for it in range(1, max_iter + 1):
        new = sweep(*state)
        state = tuple((1.0 - alpha) * old + alpha * nxt
                      for old, nxt in zip(state, new))
        for part in state:
            if not np.all(np.isfinite(part)) or np.any(part < 0.0):
                raise NumericDomainError(
                    f"{what}: iterate left the non-negative orthant at "
                    f"iteration {it}; this indicates a bug or invalid inputs")
        res_new = resid(*state)
        trace.append(res_new)
        if res_new <= tol:
            return state, it, res_new
        if res_new > res:
            alpha = max(alpha / 2.0, _ALPHA_FLOOR)
            streak = 0
        else:
            streak += 1
            if streak >= _GROW_AFTER:
                alpha = min(1.0, 2.0 * alpha)
                streak = 0
        res = res_new
    raise NonConvergenceError(
        f"{what}: residual {res:.3e} above tol {tol:.1e} after "
        f"{max_iter} iterations", last=state, trace=trace)


def _expand_init(init, K):
    if init is None:
        return np.ones(K), np.ones(K), np.ones(K)
    a, b, c = init
    return (np.broadcast_to(np.asarray(a, dtype=float), (K,)).copy(),
            np.broadcast_to(np.asarray(b, dtype=float), (K,)).copy(),
            np.broadcast_to(np.asarray(c, dtype=float), (K,)).copy())


def solve_fundamental(spec, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                      init=None):
    """Solve the 3K fundamental equations by damped fixed-point iteration.

    The system, for k = 1..K with Ttil_k = T_k^(1/2) Q_k T_k^(1/2):

        gbar_k  = (1/n_k) tr Ttil_k (g_k Ttil_k + I)^(-1)
        g_k     = (1/n_k) sum_j s_kj delta_k / (1 + gbar_k s_kj delta_k)
        delta_k = (1/Ns_k) tr R_k (sum_i (n_i/Ns_i)(gbar_i g_i/delta_i) R_i
                                   + rho I)^(-1)

    has a unique solution with all entries > 0 for rho > 0 (entries sit at
    0 only in degenerate cases such as Q = 0).  Iteration starts from all
    ones unless `init` supplies a per-user (gbar, g, delta) triple, and is
    deterministic given its inputs.

    Returns a `FixedPointSolution` whose residual is at most `tol`.

    Raises
    ------
    NonConvergenceError
        If `max_iter` sweeps do not reach the tolerance; carries the last
        iterate and the residual trace.
    NumericDomainError
        If an iterate leaves the non-negative orthant (bug signal).
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    state = _expand_init(init, spec.K)
    (gbar, g, delta), its, res = _damped_iteration(
        state,
        lambda gb, gg, dd: _sweep(spec, gb, gg, dd),
        lambda gb, gg, dd: float(np.max(residuals(spec, gb, gg, dd))),
        tol, max_iter, "fundamental equations")
    return FixedPointSolution(gbar, g, delta, its, res)


def _kron_residuals(spec, ZZH, ebar, e, rho):
    K = spec.K
    M = rho * np.eye(spec.N, dtype=complex)
    for i in range(K):
        M += ebar[i] * ZZH[i]
    Minv = np.linalg.inv(M)
    out = np.empty(2 * K)
    for k, u in enumerate(spec.users):
        rhs_eb = np.sum(u.tq_eigs / (1.0 + e[k] * u.tq_eigs)) / u.n
        rhs_e = np.einsum("ab,ba->", ZZH[k], Minv).real / u.n
        out[2 * k] = abs(ebar[k] - rhs_eb)
        out[2 * k + 1] = abs(e[k] - rhs_e)
    return out


def solve_kronecker(Z, spec, rho=None, tol=DEFAULT_TOL,
                    max_iter=DEFAULT_MAX_ITER, init=None):
    """Solve the 2K conditional-model equations for fixed matrices Z_k.

        ebar_k = (1/n_k) tr Ttil_k (e_k Ttil_k + I)^(-1)
        e_k    = (1/n_k) tr Z_k Z_k^H (sum_i ebar_i Z_i Z_i^H + rho I)^(-1)

    `Z` is a list of K deterministic N x Ns_k matrices; T_k and Q_k are
    taken from `spec`, and `rho` defaults to `spec.rho`.  Used as the
    verification oracle for the concentration of e_k around g_k when Z_k
    is sampled from the receive-side model.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    rho = spec.rho if rho is None else float(rho)
    if rho <= 0:
        raise ValueError("rho must be > 0")
    Z = [np.asarray(Zk, dtype=complex) for Zk in Z]
    if len(Z) != spec.K:
        raise ValueError(f"need {spec.K} Z matrices, got {len(Z)}")
    ZZH = [Zk @ Zk.conj().T for Zk in Z]

    def sweep(ebar, e):
        M = rho * np.eye(spec.N, dtype=complex)
        for i in range(spec.K):
            M += ebar[i] * ZZH[i]
        Minv = np.linalg.inv(M)
        e_new = np.array([np.einsum("ab,ba->", ZZH[k], Minv).real / u.n
                          for k, u in enumerate(spec.users)])
        eb_new = np.array([np.sum(u.tq_eigs / (1.0 + e_new[k] * u.tq_eigs)) / u.n
                           for k, u in enumerate(spec.users)])
        return eb_new, e_new

    if init is None:
        state = (np.ones(spec.K), np.ones(spec.K))
    else:
        a, b = init
        state = (np.broadcast_to(np.asarray(a, dtype=float), (spec.K,)).copy(),
                 np.broadcast_to(np.asarray(b, dtype=float), (spec.K,)).copy())
    (ebar, e), its, res = _damped_iteration(
        state, sweep,
        lambda eb, ee: float(np.max(_kron_residuals(spec, ZZH, eb, ee, rho))),
        tol, max_iter, "conditional-model equations")
    return KroneckerSolution(ebar, e, its, res)
