import numpy as np
import pytest


def random_state(rng, n, rank=None, floor=0.0):
    """Random density matrix of dimension n with smallest eigenvalue at least ``floor``."""
    rank = n if rank is None else rank
    g = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    if floor:
        rho = (1 - n * floor) * rho + floor * np.eye(n)
    return rho


def random_hermitian(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_vector(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def overlap_qfim(rho_fn, theta, h=1e-3):
    """QFIm of a pure-state family from finite-step overlaps.

    Uses 1 - Tr(rho(t) rho(t + h v)) = h^2 v.Q.v / 4 + O(h^4) (symmetrised in
    +-h) and polarisation for the off-diagonal entries.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.shape[0]
    rho = rho_fn(theta)

    def form(v):
        vals = [1 - np.trace(rho @ rho_fn(theta + s * h * v)).real for s in (1, -1)]
        return 4 * (vals[0] + vals[1]) / 2 / h**2

    eye = np.eye(d)
    diag = [form(eye[m]) for m in range(d)]
    q = np.diag(diag)
    for m in range(d):
        for n in range(m + 1, d):
            q[m, n] = q[n, m] = (form(eye[m] + eye[n]) - diag[m] - diag[n]) / 2
    return q


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
