"""Independent verification routes used by the tests.

Everything here is deliberately dumb and slow: bisection instead of
closed forms, finite differences instead of analytic gradients, literal
formula evaluation instead of algebraic shortcuts.  None of it shares
code with the package paths it checks.
"""

import numpy as np


def bisect(f, lo, hi, tol=1e-14, max_iter=300):
    """Sign-change bisection; requires f(lo) and f(hi) of opposite sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    assert flo * fhi < 0.0, f"no sign change on [{lo}, {hi}]"
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo < tol:
            return mid
        if flo * fm < 0.0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def product_channel_cubic(K, N, S, rho):
    """Coefficient tuple (b, c, d) of the monic characteristic cubic."""
    ratio = S / N
    b = -(2.0 - ratio - 1.0 / K)
    c = 1.0 - ratio - 1.0 / K + ratio / K * (1.0 + rho)
    d = -ratio / K * rho
    return b, c, d


def product_channel_gbar_bisect(K, N, S, rho):
    """Admissible cubic root located by grid scan plus bisection."""
    b, c, d = product_channel_cubic(K, N, S, rho)

    def f(x):
        return ((x + b) * x + c) * x + d

    lo = max(0.0, 1.0 - S / N) + 1e-12
    grid = np.linspace(lo, 1.0, 4001)
    vals = [f(x) for x in grid]
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            return grid[i]
        if vals[i] * vals[i + 1] < 0.0:
            return bisect(f, grid[i], grid[i + 1])
    raise AssertionError("no admissible sign change found")


def waterfill_bisect(t, g, P, tol=1e-13):
    """Water level by bisection on the monotone filled-power function."""
    t = np.asarray(t, dtype=float)
    n = t.size
    a = np.where(t > 0, 1.0 / (g * np.where(t > 0, t, 1.0)), np.inf)

    def filled(mu):
        return np.sum(np.maximum(mu - a[np.isfinite(a)], 0.0)) / n - P

    lo = float(np.min(a[np.isfinite(a)]))
    hi = lo + n * P + 1.0
    while filled(hi) < 0:
        hi *= 2.0
    mu = bisect(filled, lo, hi, tol=tol)
    p = np.where(np.isfinite(a), np.maximum(mu - a, 0.0), 0.0)
    return p, mu


def mmse_sinr_definition(H_list, rho):
    """Literal MMSE output SINR: apply the MMSE filter for each stream and
    form |signal|^2 / (filter^H (interference + noise) filter)."""
    N = H_list[0].shape[0]
    A = rho * np.eye(N, dtype=complex)
    for H in H_list:
        A += H @ H.conj().T
    out = []
    for H in H_list:
        gam = np.empty(H.shape[1])
        for j in range(H.shape[1]):
            h = H[:, j]
            w = np.linalg.solve(A, h)  # MMSE filter direction
            sig = abs(w.conj() @ h) ** 2
            cov_int = A - np.outer(h, h.conj())
            noise = (w.conj() @ cov_int @ w).real
            gam[j] = sig / noise
        out.append(gam)
    return out
