import numpy as np
import pytest

from dsmimo import ChannelSpec, UserLink


def random_psd(rng, n, scale=1.0):
    """Random Hermitian PSD matrix with spectral norm around `scale`."""
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    M = A @ A.conj().T
    return scale * M / max(1.0, np.linalg.eigvalsh(M).max())


def random_spec(rng, K=None, budget=False):
    """Random valid problem instance for probe-style tests."""
    K = K if K is not None else int(rng.integers(1, 4))
    N = int(rng.integers(2, 6))
    users = []
    for _ in range(K):
        n = int(rng.integers(1, 5))
        Ns = int(rng.integers(1, 7))
        Q = random_psd(rng, n, scale=float(rng.uniform(0.3, 2.0)))
        P = float(np.trace(Q).real / n) if budget else None
        users.append(UserLink(
            R=random_psd(rng, N, scale=float(rng.uniform(0.5, 2.0))),
            S=np.abs(rng.standard_normal(Ns)) + 0.05,
            T=random_psd(rng, n, scale=float(rng.uniform(0.5, 2.0))),
            Q=Q, P=P))
    rho = float(rng.uniform(0.1, 10.0))
    return ChannelSpec(users, rho)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
