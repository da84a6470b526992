"""Ready-made example systems used by the demos and the test suite."""

import numpy as np

from .model import ChannelSpec, UserLink, make_g_correlation


def multi_keyhole(K=1, N=4, rho=1.0):
    """K single-scatterer (keyhole) links to an N-antenna receiver.

    Each link has one scatterer (Ns = 1), N transmit antennas and no
    correlation anywhere, so every channel matrix is rank one although its
    entries are uncorrelated.
    """
    eyeN = np.eye(N, dtype=complex)
    users = [UserLink(R=eyeN, S=np.ones(1), T=eyeN, Q=eyeN, P=1.0)
             for _ in range(K)]
    return ChannelSpec(users, rho)


def correlated_mac(scale=1, rho=1.0):
    """Three-user uplink with angular-spread correlation on all sides.

    The base system (scale=1) has N = 4 receive antennas, Ns = 11
    scatterers and n = 3 transmit antennas per user, quarter-wavelength
    antenna spacing at both ends, scatterers 50 wavelengths apart with an
    angular spread of pi/8, per-user angular spreads pi/4, pi/2 and pi,
    uniform transmit covariance and per-antenna budget P = 1/n.  `scale`
    multiplies all three dimensions, keeping their ratios fixed.
    """
    scale = int(scale)
    if scale < 1:
        raise ValueError("scale must be >= 1")
    N, Ns, n = 4 * scale, 11 * scale, 3 * scale
    users = []
    for phi in (np.pi / 4, np.pi / 2, np.pi):
        P = 1.0 / n
        users.append(UserLink(
            R=make_g_correlation(phi, 0.25, N),
            S=make_g_correlation(np.pi / 8, 50.0, Ns),
            T=make_g_correlation(phi, 0.25, n),
            Q=P * np.eye(n, dtype=complex),
            P=P))
    return ChannelSpec(users, rho)


def identity_product(K, N, S, rho=1.0):
    """Uncorrelated product channel: Ns = S scatterers, n = N antennas,
    identity matrices everywhere, unit power budget."""
    eyeN = np.eye(N, dtype=complex)
    users = [UserLink(R=eyeN, S=np.ones(S), T=eyeN, Q=eyeN, P=1.0)
             for _ in range(K)]
    return ChannelSpec(users, rho)
