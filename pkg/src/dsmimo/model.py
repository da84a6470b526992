"""Problem-instance types and correlation-matrix constructors.

A double-scattering link is described by three correlation matrices
(receive side R, scatterer side S, transmit side T), a transmit covariance
Q and an optional per-antenna power budget P.  A `ChannelSpec` collects K
such links together with the receiver dimension N and the noise power rho.

All types are immutable after construction and all operations are pure
functions, so everything here is safe for unrestricted concurrent use.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import (
    as_complex_matrix,
    eigh_psd,
    hermitian_deviation,
    hermitian_sqrt,
    is_diagonal,
    readonly,
    spectral_norm_hermitian,
    symmetrize,
)
from .errors import NotDiagonalizableTogetherError

# Global validation tolerances (override per call in `validate`).
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
BUDGET_TOL = 1e-9


def make_g_correlation(phi, d, n):
    """Uniform-linear-array correlation matrix for a given angular spread.

    Entry (k, l) is the average of exp(i*2*pi*d*(k-l)*sin(theta_j)) over n
    equispaced angles theta_j = j*phi/(1-n), j = (1-n)/2, ..., (n-1)/2, so
    the angles sweep [-phi/2, phi/2].  `phi` is the angular spread in
    radians and `d` the element spacing in wavelengths.

    The result is Hermitian with unit diagonal and positive semidefinite
    (it is an average of rank-one steering outer products).  For n = 1 the
    degenerate limit is the 1x1 identity.

    Parameters
    ----------
    phi : float
        Angular spread in radians.
    d : float
        Element spacing in multiples of the signal wavelength.
    n : int
        Matrix size (number of elements).

    Returns
    -------
    ndarray
        n x n complex Hermitian PSD matrix.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"invalid dimension n={n}, need n >= 1")
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    j = np.arange(n) + (1.0 - n) / 2.0
    sines = np.sin(j * phi / (1.0 - n))
    # steering matrix A[k, j] = exp(i 2 pi d k sin(theta_j)); G = A A^H / n
    A = np.exp(1j * 2.0 * np.pi * d * np.arange(n)[:, None] * sines[None, :])
    G = (A @ A.conj().T) / n
    return symmetrize(G)


@dataclass(frozen=True)
class MatrixCheck:
    """Validation record for one stored matrix."""

    user: int
    name: str
    hermitian_dev: float
    min_eigenvalue: float
    spectral_norm: float
    hermitian_ok: bool
    psd_ok: bool


@dataclass(frozen=True)
class BudgetCheck:
    """Validation record for one declared power budget."""

    user: int
    trace_average: float
    limit: float
    ok: bool


@dataclass(frozen=True)
class ValidationReport:
    """Report-only result of `validate`; callers decide whether to abort."""

    matrices: tuple
    budgets: tuple
    violations: tuple

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        lines = ["matrix checks (user, name, herm_dev, min_eig, spec_norm):"]
        for c in self.matrices:
            flag = "" if (c.hermitian_ok and c.psd_ok) else "  <-- VIOLATION"
            lines.append(
                f"  u{c.user} {c.name}: herm={c.hermitian_dev:.2e} "
                f"min_eig={c.min_eigenvalue:.2e} norm={c.spectral_norm:.4g}{flag}")
        for b in self.budgets:
            flag = "" if b.ok else "  <-- VIOLATION"
            lines.append(f"  u{b.user} budget: tr(Q)/n={b.trace_average:.6g} "
                         f"<= P={b.limit:.6g}?{flag}")
        if self.violations:
            lines.append("violations:")
            lines.extend(f"  - {v}" for v in self.violations)
        else:
            lines.append("all checks passed")
        return "\n".join(lines)


class UserLink:
    """One transmitter of the multiple-access channel.

    The link realizes H = R^(1/2) W1 S^(1/2) W2 T^(1/2) / sqrt(Ns*n) with
    independent standard complex Gaussian W1 (N x Ns) and W2 (Ns x n).

    S enters every downstream formula only through its eigenvalues, so it
    is stored as the (clamped, ascending) eigenvalue vector `s`; a dense
    Hermitian S is eigendecomposed on ingestion.  The eigenbasis of S is
    immaterial because the Gaussian factors are unitarily invariant.

    Construction is permissive: inputs are symmetrized and eigenvalue
    clamped for computation while the raw deviations are recorded for
    `validate`, which is the place where quality problems are flagged.

    Parameters
    ----------
    R : array_like
        Receive correlation, N x N Hermitian PSD.
    S : array_like
        Scatterer correlation, Ns x Ns Hermitian PSD, or directly its
        eigenvalue vector (1-D).
    T : array_like
        Transmit correlation, n x n Hermitian PSD.
    Q : array_like
        Transmit covariance, n x n Hermitian PSD.
    P : float, optional
        Per-antenna average power budget; the constraint is tr(Q)/n <= P.
    """

    __slots__ = ("R", "s", "T", "Q", "P", "n", "Ns", "N",
                 "R_sqrt", "T_sqrt", "t_eigs", "t_basis", "tq_eigs",
                 "_diagnostics")

    def __init__(self, R, S, T, Q, P=None):
        R = as_complex_matrix(R, "R")
        T = as_complex_matrix(T, "T")
        Q = as_complex_matrix(Q, "Q")
        S_in = np.asarray(S)
        diagnostics = {}

        if S_in.ndim == 1:
            s_raw = np.array(S_in, dtype=float)
            diagnostics["S"] = (0.0, float(s_raw.min()) if s_raw.size else 0.0,
                                float(np.max(np.abs(s_raw), initial=0.0)))
            s = np.maximum(s_raw, 0.0)
        else:
            S_m = as_complex_matrix(S_in, "S")
            s_raw = np.linalg.eigvalsh(symmetrize(S_m)).real
            diagnostics["S"] = (hermitian_deviation(S_m), float(s_raw.min()),
                                spectral_norm_hermitian(S_m))
            s = np.maximum(s_raw, 0.0)

        if T.shape != Q.shape:
            raise ValueError(f"T {T.shape} and Q {Q.shape} must have equal shape")

        for name, M in (("R", R), ("T", T), ("Q", Q)):
            w = np.linalg.eigvalsh(symmetrize(M)).real
            diagnostics[name] = (hermitian_deviation(M), float(w.min()),
                                 float(np.max(np.abs(w))))

        self.R = readonly(symmetrize(R))
        self.s = readonly(np.sort(s))
        self.T = readonly(symmetrize(T))
        self.Q = readonly(symmetrize(Q))
        self.P = None if P is None else float(P)
        self.N = R.shape[0]
        self.Ns = self.s.size
        self.n = T.shape[0]
        if self.Ns < 1:
            raise ValueError("scatterer count Ns must be >= 1")

        self.R_sqrt = readonly(hermitian_sqrt(self.R))
        t, U = eigh_psd(self.T)
        self.t_eigs = readonly(t)
        self.t_basis = readonly(U)
        self.T_sqrt = readonly((U * np.sqrt(t)) @ U.conj().T)
        tq = self.T_sqrt @ self.Q @ self.T_sqrt
        self.tq_eigs = readonly(eigh_psd(tq)[0])
        self._diagnostics = diagnostics

    def with_covariance(self, Q, P=None):
        """Copy of this link with a new transmit covariance (same budget by default)."""
        return UserLink(self.R, self.s, self.T, Q, self.P if P is None else P)

    def __repr__(self):
        return (f"UserLink(N={self.N}, Ns={self.Ns}, n={self.n}, "
                f"P={self.P})")


class ChannelSpec:
    """A complete problem instance: K transmitter links, N receive antennas, noise power rho."""

    __slots__ = ("users", "N", "rho")

    def __init__(self, users, rho):
        users = tuple(users)
        if not users:
            raise ValueError("need at least one user")
        N = users[0].N
        for k, u in enumerate(users):
            if u.N != N:
                raise ValueError(
                    f"user {k} has receive dimension {u.N}, expected {N}")
        if not (np.isfinite(rho) and rho > 0):
            raise ValueError(f"noise power rho must be > 0, got {rho}")
        self.users = users
        self.N = N
        self.rho = float(rho)

    @property
    def K(self):
        return len(self.users)

    def with_rho(self, rho):
        """Same users, different noise power (cheap; links are shared)."""
        new = ChannelSpec.__new__(ChannelSpec)
        if not (np.isfinite(rho) and rho > 0):
            raise ValueError(f"noise power rho must be > 0, got {rho}")
        new.users = self.users
        new.N = self.N
        new.rho = float(rho)
        return new

    def __repr__(self):
        return f"ChannelSpec(K={self.K}, N={self.N}, rho={self.rho})"


def validate(spec, hermitian_tol=HERMITIAN_TOL, psd_tol=PSD_TOL,
             budget_tol=BUDGET_TOL):
    """Check structural assumptions of a `ChannelSpec` and report findings.

    Lists, per stored matrix, the Hermitian deviation of the raw input, its
    minimum eigenvalue and its spectral norm, plus the trace budget check
    for every declared power budget.  This never raises; callers decide
    what to do with flagged violations.
    """
    matrices, budgets, violations = [], [], []
    for k, u in enumerate(spec.users):
        for name in ("R", "S", "T", "Q"):
            herm_dev, min_eig, norm = u._diagnostics[name]
            h_ok = herm_dev <= hermitian_tol
            p_ok = min_eig >= -psd_tol
            matrices.append(MatrixCheck(k, name, herm_dev, min_eig, norm,
                                        h_ok, p_ok))
            if not h_ok:
                violations.append(
                    f"user {k} {name}: Hermitian deviation {herm_dev:.3e} "
                    f"exceeds {hermitian_tol:.1e}")
            if not p_ok:
                violations.append(
                    f"user {k} {name}: eigenvalue {min_eig:.3e} below "
                    f"-{psd_tol:.1e}")
        if u.P is not None:
            tr_avg = float(np.trace(u.Q).real) / u.n
            ok = tr_avg <= u.P + budget_tol
            budgets.append(BudgetCheck(k, tr_avg, u.P, ok))
            if not ok:
                violations.append(
                    f"user {k}: tr(Q)/n = {tr_avg:.6g} exceeds budget "
                    f"P = {u.P:.6g}")
    return ValidationReport(tuple(matrices), tuple(budgets), tuple(violations))


def _group_degenerate(w, scale):
    """Split sorted eigenvalues into groups of (near-)equal values."""
    groups, start = [], 0
    tol = 1e-8 * max(1.0, scale)
    for i in range(1, w.size):
        if w[i] - w[i - 1] > tol:
            groups.append(slice(start, i))
            start = i
    groups.append(slice(start, w.size))
    return groups


def fold_transmit(T, Q, tol=1e-9):
    """Fold a commuting (T, Q) pair into per-stream gains and a shared basis.

    Finds a unitary U that diagonalizes both T and Q (rotating inside
    degenerate eigenspaces of T as needed) and returns the element-wise
    products t_j * q_j together with U.  Downstream per-stream formulas
    then apply with covariance I and the diagonal gains `t_eff`, since
    U diag(t_eff) U^H = T^(1/2) Q T^(1/2).

    Raises
    ------
    NotDiagonalizableTogetherError
        If no shared eigenbasis exists within `tol` (T and Q do not
        commute).
    """
    T = as_complex_matrix(T, "T")
    Q = as_complex_matrix(Q, "Q")
    if T.shape != Q.shape:
        raise ValueError(f"T {T.shape} and Q {Q.shape} must have equal shape")
    t, U = eigh_psd(T)
    U = U.copy()
    # rotate inside degenerate eigenspaces so that Q becomes diagonal there
    for grp in _group_degenerate(t, float(t.max(initial=0.0))):
        if grp.stop - grp.start > 1:
            block = U[:, grp].conj().T @ Q @ U[:, grp]
            _, V = np.linalg.eigh(symmetrize(block))
            U[:, grp] = U[:, grp] @ V
    D = U.conj().T @ Q @ U
    off = float(np.max(np.abs(D - np.diag(np.diag(D))), initial=0.0))
    if off > tol:
        raise NotDiagonalizableTogetherError(
            f"T and Q are not simultaneously diagonalizable: off-diagonal "
            f"residual {off:.3e} exceeds {tol:.1e}")
    q = np.maximum(np.diag(D).real, 0.0)
    return t * q, U


def fold_spec(spec, tol=1e-9):
    """Fold every user of a spec to covariance I and diagonal transmit gains.

    Returns `(folded, bases)` where `folded` is a new `ChannelSpec` whose
    users have T = diag(t_eff) and Q = I, and `bases[k]` is the unitary
    that was factored out of user k.  The folded spec generates the same
    channel statistics as the original (the basis is absorbed by the
    unitarily invariant Gaussian factor).
    """
    users, bases = [], []
    for u in spec.users:
        t_eff, U = fold_transmit(u.T, u.Q, tol=tol)
        users.append(UserLink(u.R, u.s, np.diag(t_eff).astype(complex),
                              np.eye(u.n, dtype=complex), u.P))
        bases.append(U)
    return ChannelSpec(users, spec.rho), bases


def is_folded(spec, tol=1e-12):
    """True if every user has identity covariance and diagonal transmit correlation."""
    for u in spec.users:
        if not is_diagonal(u.T, tol):
            return False
        if float(np.max(np.abs(u.Q - np.eye(u.n)), initial=0.0)) > tol:
            return False
    return True
