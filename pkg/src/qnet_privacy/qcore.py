"""Dense complex operator algebra on small multipartite Hilbert spaces."""

from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .config import DEFAULT_TOL
from .errors import ArgumentError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


def as_matrix(m) -> np.ndarray:
    """Return a square complex ndarray view of ``m`` (accepts DensityState)."""
    if isinstance(m, DensityState):
        return m.mat
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ArgumentError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ArgumentError("matrix has non-finite entries")
    return a


def hermiticity_error(m) -> float:
    a = as_matrix(m)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(m, tol=DEFAULT_TOL.herm) -> bool:
    return hermiticity_error(m) <= tol


def dagger(m) -> np.ndarray:
    return as_matrix(m).conj().T


@dataclass(frozen=True)
class DensityState:
    """A density matrix together with the local dimension of each tensor factor.

    Construction checks Hermiticity, unit trace and positivity within the
    default tolerances; the stored matrix is the Hermitian part of the input
    and is read-only.
    """

    mat: np.ndarray
    dims: tuple

    def __post_init__(self):
        a = np.array(as_matrix(self.mat), dtype=complex)
        dims = tuple(int(n) for n in self.dims)
        if not dims or any(n < 2 for n in dims):
            raise ArgumentError(f"local dimensions must all be >= 2, got {dims}")
        if int(np.prod(dims)) != a.shape[0]:
            raise ArgumentError(f"dims {dims} do not match matrix dimension {a.shape[0]}")
        tol = DEFAULT_TOL
        herr = hermiticity_error(a)
        if herr > tol.herm:
            raise ArgumentError(f"state is not Hermitian (max deviation {herr:.3g})")
        a = 0.5 * (a + a.conj().T)
        tr = np.trace(a).real
        if abs(tr - 1.0) > tol.trace:
            raise ArgumentError(f"state trace is {tr!r}, expected 1")
        lmin = np.linalg.eigvalsh(a)[0]
        if lmin < -tol.psd:
            raise ArgumentError(f"state is not positive semidefinite (min eigenvalue {lmin:.3g})")
        a.setflags(write=False)
        object.__setattr__(self, "mat", a)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_vector(cls, psi, dims):
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-9:
            raise ArgumentError(f"state vector has norm {norm!r}")
        return cls(np.outer(psi, psi.conj()), dims)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray   # ascending, real
    eigenvectors: np.ndarray  # columns


def tensor(factors: Sequence) -> np.ndarray:
    """Kronecker product of ``factors`` in list order."""
    factors = list(factors)
    if not factors:
        raise ArgumentError("tensor() needs at least one factor")
    return reduce(np.kron, (as_matrix(f) for f in factors))


def eig_hermitian(m, tol=DEFAULT_TOL.herm) -> Spectrum:
    a = as_matrix(m)
    herr = hermiticity_error(a)
    if herr > tol:
        raise ArgumentError(f"matrix is not Hermitian (max deviation {herr:.3g})")
    evals, evecs = np.linalg.eigh(0.5 * (a + a.conj().T))
    return Spectrum(evals, evecs)


def _hermitian_part_if_close(a, tol):
    if hermiticity_error(a) <= tol:
        return 0.5 * (a + a.conj().T)
    return None


def trace_norm(m) -> float:
    """Sum of singular values."""
    a = as_matrix(m)
    h = _hermitian_part_if_close(a, DEFAULT_TOL.herm)
    if h is not None:
        return float(np.sum(np.abs(np.linalg.eigvalsh(h))))
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def operator_norm(m) -> float:
    """Largest singular value."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def psd_sqrt(m) -> np.ndarray:
    """Square root of a PSD matrix.

    Eigenvalues within roundoff of zero (n * eps * largest) are set to zero
    so that rank-deficient inputs do not pick up sqrt(eps)-sized noise.
    """
    evals, evecs = eig_hermitian(m, tol=1e-8)
    floor = evals.shape[0] * np.finfo(float).eps * max(float(evals[-1]), 0.0)
    roots = np.where(evals > floor, np.sqrt(np.clip(evals, 0.0, None)), 0.0)
    return (evecs * roots) @ evecs.conj().T


def fidelity(rho, sigma) -> float:
    """Root fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho)) = || sqrt(rho) sqrt(sigma) ||_1.

    Evaluated as the nuclear norm of the product of square roots, which keeps
    absolute accuracy near machine precision for pure and low-rank states.
    """
    a, b = as_matrix(rho), as_matrix(sigma)
    if a.shape != b.shape:
        raise ArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sum(np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)))


def _pair(a, b):
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def commutator(a, b) -> np.ndarray:
    a, b = _pair(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = _pair(a, b)
    return a @ b + b @ a


def embed_local(op, node: int, dims: Sequence[int]) -> np.ndarray:
    """Lift ``op`` acting on factor ``node`` to the full space ``dims``."""
    a = as_matrix(op)
    dims = [int(n) for n in dims]
    if not 0 <= node < len(dims):
        raise ArgumentError(f"factor index {node} out of range for dims {dims}")
    if a.shape[0] != dims[node]:
        raise ArgumentError(f"operator dimension {a.shape[0]} does not match dims[{node}] = {dims[node]}")
    left = int(np.prod(dims[:node], dtype=int))
    right = int(np.prod(dims[node + 1:], dtype=int))
    return np.kron(np.kron(np.eye(left), a), np.eye(right))


def expm_hermitian(h, t=1.0) -> np.ndarray:
    """exp(-i t h) for Hermitian ``h``."""
    evals, evecs = eig_hermitian(h, tol=1e-9)
    return (evecs * np.exp(-1j * t * evals)) @ evecs.conj().T


def apply_local_kraus(mat, kraus, factor: int, dims: Sequence[int]) -> np.ndarray:
    """sum_k K_k M K_k^dagger with every K_k acting on tensor factor ``factor``.

    ``mat`` need not be a state; the map is applied linearly (derivatives of
    states pass through the same call).
    """
    a = as_matrix(mat)
    dims = [int(n) for n in dims]
    if not 0 <= factor < len(dims):
        raise ArgumentError(f"factor index {factor} out of range for dims {dims}")
    ks = np.asarray(kraus, dtype=complex)
    if ks.ndim == 2:
        ks = ks[None]
    n = dims[factor]
    if ks.shape[1:] != (n, n):
        raise ArgumentError(f"Kraus operators of shape {ks.shape[1:]} do not act on a factor of dimension {n}")
    if int(np.prod(dims)) != a.shape[0]:
        raise ArgumentError(f"dims {dims} do not match matrix dimension {a.shape[0]}")
    left = int(np.prod(dims[:factor], dtype=int))
    right = int(np.prod(dims[factor + 1:], dtype=int))
    return _kernels.apply_local_kraus(a, ks, left, n, right)
