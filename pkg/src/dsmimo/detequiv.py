"""Deterministic equivalents of mutual information, MMSE SINR and sum-rate.

Every function here evaluates a closed-form expression at a solved
`FixedPointSolution`; nothing iterates.  Rates are in nats/s/Hz per
receive antenna (natural logarithm throughout).
"""

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import logdet_hpd
from .errors import NumericDomainError
from .fixedpoint import FixedPointSolution
from .model import is_folded


@dataclass(frozen=True)
class DetEquivalents:
    """Bundle of all deterministic equivalents at one operating point."""

    mi: float
    sinr: tuple
    sumrate: float
    solution: FixedPointSolution


@dataclass(frozen=True)
class RayleighProductParams:
    """Uncorrelated product channel: K users, N antennas, S scatterers each.

    Models the special case Ns_k = S, n_k = N with all correlation and
    covariance matrices equal to the identity.
    """

    K: int
    N: int
    S: int
    rho: float

    def __post_init__(self):
        if self.K < 1 or self.N < 1 or self.S < 1:
            raise ValueError("K, N, S must be positive")
        if not self.rho > 0:
            raise ValueError("rho must be > 0")


def mi_det(spec, sol):
    """Deterministic approximation of the normalized mutual information.

    With (gbar, g, delta) solving the fundamental equations,

        I(rho) = (1/N) logdet(I_N + (1/rho) sum_k (n_k/Ns_k)
                              (gbar_k g_k / delta_k) R_k)
               + (1/N) sum_k [ sum_j log(1 + gbar_k delta_k s_kj)
                             + logdet(I + g_k T_k^(1/2) Q_k T_k^(1/2))
                             - 2 n_k g_k gbar_k ].

    Returns a finite non-negative scalar in nats/s/Hz per receive antenna.
    """
    gbar, g, delta = sol.gbar, sol.g, sol.delta
    M = np.eye(spec.N, dtype=complex)
    for k, u in enumerate(spec.users):
        num = gbar[k] * g[k]
        if num > 0.0:
            M += (u.n / u.Ns) * (num / delta[k]) / spec.rho * u.R
    total = logdet_hpd(M, method="eigh")
    for k, u in enumerate(spec.users):
        args_s = 1.0 + gbar[k] * delta[k] * u.s
        args_t = 1.0 + g[k] * u.tq_eigs
        if np.any(args_s <= 0.0) or np.any(args_t <= 0.0):
            raise NumericDomainError(
                "non-positive log argument; the supplied solution does not "
                "solve the fundamental equations for this spec")
        total += float(np.sum(np.log(args_s)) + np.sum(np.log(args_t)))
        total -= 2.0 * u.n * g[k] * gbar[k]
    return total / spec.N


def _require_folded(spec, op):
    if not is_folded(spec):
        raise ValueError(
            f"{op} requires the folded form (Q = I, T diagonal); "
            f"apply model.fold_spec first")


def sinr_det(spec, sol):
    """Deterministic per-stream SINR of the linear MMSE detector.

    Requires the folded form (Q_k = I, T_k diagonal); stream (k, j) then
    has SINR t_kj * g_k.  Returns one array of n_k values per user.
    """
    _require_folded(spec, "sinr_det")
    return tuple(np.diag(u.T).real * sol.g[k]
                 for k, u in enumerate(spec.users))


def sumrate_det(spec, sol):
    """Deterministic sum-rate with per-stream MMSE detection:
    (1/N) sum_k sum_j log(1 + t_kj g_k)."""
    _require_folded(spec, "sumrate_det")
    total = 0.0
    for k, u in enumerate(spec.users):
        total += float(np.sum(np.log1p(np.diag(u.T).real * sol.g[k])))
    return total / spec.N


def det_equivalents(spec, sol):
    """All deterministic equivalents of a folded spec in one record."""
    return DetEquivalents(mi=mi_det(spec, sol), sinr=sinr_det(spec, sol),
                          sumrate=sumrate_det(spec, sol), solution=sol)


def _cubic_roots(b, c, d):
    """All three roots of x^3 + b x^2 + c x + d (Cardano, trig branch for
    three real roots), each polished with a Newton step."""
    p = c - b * b / 3.0
    q = 2.0 * b ** 3 / 27.0 - b * c / 3.0 + d
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    shift = b / 3.0
    if disc > 0.0:
        sq = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + sq) ** (1.0 / 3.0), -q / 2.0 + sq)
        v = math.copysign(abs(-q / 2.0 - sq) ** (1.0 / 3.0), -q / 2.0 - sq)
        x0 = u + v
        # remaining pair is complex conjugate
        re = -x0 / 2.0
        im = math.sqrt(3.0) / 2.0 * abs(u - v)
        roots = [complex(x0 - shift, 0.0),
                 complex(re - shift, im), complex(re - shift, -im)]
    elif p == 0.0:  # triple root
        roots = [complex(-shift, 0.0)] * 3
    else:
        r = math.sqrt(-p / 3.0)
        arg = min(1.0, max(-1.0, 3.0 * q / (2.0 * p * r)))
        theta = math.acos(arg)
        roots = [complex(2.0 * r * math.cos((theta - 2.0 * math.pi * m) / 3.0)
                         - shift, 0.0) for m in range(3)]

    def poly(x):
        return ((x + b) * x + c) * x + d

    def dpoly(x):
        return (3.0 * x + 2.0 * b) * x + c

    polished = []
    for z in roots:
        if z.imag == 0.0:
            x = z.real
            for _ in range(2):
                fp = dpoly(x)
                if fp != 0.0:
                    x -= poly(x) / fp
            polished.append(complex(x, 0.0))
        else:
            polished.append(z)
    return polished


def rayleigh_cubic(params):
    """Root gbar of the product-channel characteristic cubic.

    Solves

        gbar^3 - gbar^2 (2 - S/N - 1/K)
        + gbar (1 - S/N - 1/K + S (1 + rho) / (N K)) - S rho / (N K) = 0

    and selects the unique admissible root, i.e. the real root with
    g = (1 - gbar)/gbar > 0 and delta = (1 - gbar)/(gbar (gbar + S/N - 1))
    strictly positive.  Raises `NumericDomainError` listing all three
    roots if no root (or more than one) passes the filter.
    """
    K, ratio, rho = params.K, params.S / params.N, params.rho
    b = -(2.0 - ratio - 1.0 / K)
    c = 1.0 - ratio - 1.0 / K + ratio / K * (1.0 + rho)
    d = -ratio / K * rho
    roots = _cubic_roots(b, c, d)
    admissible = []
    for z in roots:
        if abs(z.imag) > 1e-9:
            continue
        x = z.real
        if 0.0 < x < 1.0 and x + ratio - 1.0 > 0.0:
            admissible.append(x)
    if len(admissible) != 1:
        raise NumericDomainError(
            f"expected exactly one admissible root, found {len(admissible)}; "
            f"all roots: {roots}")
    gbar = admissible[0]
    residual = abs(((gbar + b) * gbar + c) * gbar + d)
    if residual > 1e-12:
        raise NumericDomainError(
            f"cubic residual {residual:.3e} exceeds 1e-12 at gbar={gbar}")
    return gbar


def rayleigh_mi(params, gbar=None):
    """Closed-form deterministic mutual information of the product channel.

        I = log(1 + (N K / (S rho)) gbar (gbar + S/N - 1))
          - (K S / N) log(1 + (N/S)(gbar - 1)) - K log(gbar) - 2 K (1 - gbar)

    Agrees with `mi_det` on the equivalent identity-matrix spec.
    """
    if gbar is None:
        gbar = rayleigh_cubic(params)
    K, N, S, rho = params.K, params.N, params.S, params.rho
    a1 = 1.0 + (N * K) / (S * rho) * gbar * (gbar + S / N - 1.0)
    a2 = 1.0 + (N / S) * (gbar - 1.0)
    if a1 <= 0.0 or a2 <= 0.0 or gbar <= 0.0:
        raise NumericDomainError(
            f"non-positive log argument (a1={a1}, a2={a2}, gbar={gbar}); "
            f"inadmissible root")
    return (math.log(a1) - (K * S / N) * math.log(a2) - K * math.log(gbar)
            - 2.0 * K * (1.0 - gbar))


def rayleigh_sinr(params, gbar=None):
    """Closed-form per-stream MMSE SINR of the product channel: (1 - gbar)/gbar."""
    if gbar is None:
        gbar = rayleigh_cubic(params)
    return (1.0 - gbar) / gbar
