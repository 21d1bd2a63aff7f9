"""Classical and quantum Fisher information matrices and Cramer-Rao bounds."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .config import DEFAULT_TOL
from .errors import ArgumentError
from .qcore import as_matrix, eig_hermitian, hermiticity_error

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FisherMatrix:
    """Real symmetric PSD d x d information matrix.

    ``kind`` is ``"classical"`` or ``"quantum"``; ``diagnostics`` carries
    numerical side information (e.g. the gap between the two QFIm formulas).
    """

    entries: np.ndarray
    kind: str
    theta: Optional[tuple] = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ArgumentError(f"Fisher matrix must be square, got shape {m.shape}")
        if self.kind not in ("classical", "quantum"):
            raise ArgumentError(f"unknown Fisher matrix kind {self.kind!r}")
        scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
        asym = float(np.max(np.abs(m - m.T))) if m.size else 0.0
        if asym > DEFAULT_TOL.fisher_sym * scale:
            raise ArgumentError(f"Fisher matrix is not symmetric (max deviation {asym:.3g})")
        m = 0.5 * (m + m.T)
        if m.size and np.linalg.eigvalsh(m)[0] < -DEFAULT_TOL.fisher_psd * scale:
            raise ArgumentError("Fisher matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        if self.theta is not None:
            object.__setattr__(self, "theta", tuple(float(t) for t in self.theta))

    @property
    def d(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class Povm:
    effects: tuple

    def __post_init__(self):
        effects = tuple(as_matrix(e) for e in self.effects)
        if not effects:
            raise ArgumentError("a POVM needs at least one effect")
        n = effects[0].shape[0]
        if any(e.shape != (n, n) for e in effects):
            raise ArgumentError("POVM effects must share one dimension")
        for i, e in enumerate(effects):
            if hermiticity_error(e) > DEFAULT_TOL.herm or np.linalg.eigvalsh(0.5 * (e + e.conj().T))[0] < -DEFAULT_TOL.psd:
                raise ArgumentError(f"POVM effect {i} is not positive semidefinite")
        err = np.max(np.abs(sum(effects) - np.eye(n)))
        if err > DEFAULT_TOL.povm:
            raise ArgumentError(f"POVM effects do not sum to identity (error {err:.3g})")
        object.__setattr__(self, "effects", effects)


def _support_cut(evals, rank_tol):
    if rank_tol is None:
        return DEFAULT_TOL.rank_rel * max(float(evals[-1]), 0.0)
    return float(rank_tol)


def _check_drho(drho):
    d = as_matrix(drho)
    err = hermiticity_error(d)
    if err > DEFAULT_TOL.drho_herm:
        raise ArgumentError(f"state derivative is not Hermitian (max deviation {err:.3g})")
    return 0.5 * (d + d.conj().T)


def _slds(rho, drho_list, rank_tol):
    evals, evecs = eig_hermitian(rho)
    cut = _support_cut(evals, rank_tol)
    out = []
    for drho in drho_list:
        d_eig = evecs.conj().T @ _check_drho(drho) @ evecs
        l_eig = _kernels.sld_eigenbasis(evals, d_eig, cut)
        out.append(evecs @ l_eig @ evecs.conj().T)
    return out


def sld(rho, drho, rank_tol=None) -> np.ndarray:
    """Symmetric logarithmic derivative L with drho = (L rho + rho L)/2.

    Computed in the eigenbasis of rho; entries where the eigenvalue sum is
    at or below ``rank_tol`` (default 1e-10 times the largest eigenvalue) are
    set to zero.
    """
    return _slds(rho, [drho], rank_tol)[0]


def qfim(rho, drho_list, rank_tol=None, theta=None) -> FisherMatrix:
    """Quantum Fisher information matrix Q_{mn} = Tr(rho {L_m, L_n})/2."""
    r = as_matrix(rho)
    drho_list = list(drho_list)
    if not drho_list:
        raise ArgumentError("need at least one state derivative")
    ls = _slds(r, drho_list, rank_tol)
    d = len(ls)
    rl = [r @ l for l in ls]
    q = np.empty((d, d))
    q_alt = np.empty((d, d))
    for m in range(d):
        for n in range(m, d):
            # Tr(rho L_m L_n) + Tr(rho L_n L_m) = 2 Re Tr(rho L_m L_n)
            q[m, n] = q[n, m] = np.real(np.einsum("ij,ji->", rl[m], ls[n]))
            alt = 0.5 * np.real(np.einsum("ij,ji->", drho_list[m], ls[n]) + np.einsum("ij,ji->", drho_list[n], ls[m]))
            q_alt[m, n] = q_alt[n, m] = alt
    gap = float(np.max(np.abs(q - q_alt)))
    scale = max(1.0, float(np.max(np.abs(q))))
    if gap > DEFAULT_TOL.qfim_alt * scale:
        logger.warning("QFIm formulas disagree by %.3g (scale %.3g)", gap, scale)
    return FisherMatrix(q, "quantum", theta, {"alt_form_gap": gap})


def qfim_pure(psi, dpsi_list, theta=None) -> FisherMatrix:
    """QFIm of a pure state from its vector derivatives."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ArgumentError(f"state vector has norm {norm!r}")
    dpsi = np.array([np.asarray(v, dtype=complex).reshape(-1) for v in dpsi_list])
    if dpsi.ndim != 2 or dpsi.shape[1] != psi.shape[0]:
        raise ArgumentError("derivative vectors must match the state dimension")
    gram = dpsi.conj() @ dpsi.T
    overlap = dpsi.conj() @ psi
    q = 4.0 * np.real(gram - np.outer(overlap, overlap.conj()))
    return FisherMatrix(q, "quantum", theta)


def cfim(rho, povm: Povm, drho_list, p_floor=DEFAULT_TOL.p_floor, theta=None) -> FisherMatrix:
    """Classical Fisher information of the outcome distribution of ``povm``.

    Outcomes with probability at or below ``p_floor`` contribute nothing.
    """
    if not isinstance(povm, Povm):
        povm = Povm(povm)
    r = as_matrix(rho)
    effects = np.array(povm.effects)
    if effects.shape[1] != r.shape[0]:
        raise ArgumentError("POVM and state dimensions differ")
    drho = np.array([as_matrix(x) for x in drho_list])
    p = np.real(np.einsum("ij,xji->x", r, effects))
    dp = np.real(np.einsum("mij,xji->mx", drho, effects))
    keep = p > p_floor
    f = (dp[:, keep] / p[keep]) @ dp[:, keep].T
    return FisherMatrix(f, "classical", theta)


def cfim_leq_qfim_check(f, q, tol=DEFAULT_TOL.cfim_order) -> bool:
    """True iff Q - F is positive semidefinite (matrix order)."""
    diff = _entries(q) - _entries(f)
    diff = 0.5 * (diff + diff.T)
    return bool(np.linalg.eigvalsh(diff)[0] >= -tol)


def entrywise_comparison(f, q) -> np.ndarray:
    """Q - F entry by entry.  Diagnostic only: matrix order does not imply it."""
    return _entries(q) - _entries(f)


def _entries(m):
    return m.entries if isinstance(m, FisherMatrix) else np.asarray(m, dtype=float)


def reparametrize(m, b) -> FisherMatrix:
    """Information matrix B^T M B for new parameters, B_{mn} = d theta_m / d theta'_n."""
    mat = _entries(m)
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != mat.shape[0]:
        raise ArgumentError(f"B has shape {b.shape}, expected ({mat.shape[0]}, k)")
    if not np.all(np.isfinite(b)):
        raise ArgumentError("B must be finite")
    kind = m.kind if isinstance(m, FisherMatrix) else "quantum"
    return FisherMatrix(b.T @ mat @ b, kind)


def function_basis(w) -> np.ndarray:
    """B matrix for theta'_1 = w.theta completed by an orthonormal basis of w-perp.

    First column is w/|w|^2 (so d theta / d theta'_1 for the all-equal
    average is the all-ones vector); remaining columns span the complement.
    """
    w = np.asarray(w, dtype=float).reshape(-1)
    nrm2 = float(w @ w)
    if nrm2 == 0.0:
        raise ArgumentError("w must not be the zero vector")
    # rows 1.. of vh span the orthogonal complement of w
    _, _, vh = np.linalg.svd(w[None, :])
    return np.column_stack([w / nrm2, vh[1:].T])


@dataclass(frozen=True)
class CovarianceBound:
    """Cramer-Rao covariance bound; ``unidentifiable`` columns span ker F."""

    covariance: np.ndarray
    rank: int
    unidentifiable: np.ndarray
    shots: int

    @property
    def identifiable(self):
        return self.unidentifiable.shape[1] == 0

    def variance_of(self, w) -> Optional[float]:
        """Bound on Var(w.theta), or None when w leaves the identifiable subspace."""
        w = np.asarray(w, dtype=float).reshape(-1)
        if self.unidentifiable.shape[1]:
            leak = np.linalg.norm(self.unidentifiable.T @ w)
            if leak > 1e-8 * max(1.0, np.linalg.norm(w)):
                return None
        return float(w @ self.covariance @ w)


def crb_covariance_bound(f, shots: int = 1, cut=DEFAULT_TOL.crb_cut) -> CovarianceBound:
    """Pseudo-inverse of F over ``shots`` repetitions.

    Eigen-directions with eigenvalue below ``cut`` times the largest are
    reported in ``unidentifiable`` instead of producing infinities.
    """
    if int(shots) != shots or shots < 1:
        raise ArgumentError("shots must be a positive integer")
    mat = _entries(f)
    evals, evecs = np.linalg.eigh(0.5 * (mat + mat.T))
    top = max(float(evals[-1]), 0.0)
    keep = evals > cut * top if top > 0 else np.zeros_like(evals, dtype=bool)
    inv = (evecs[:, keep] / evals[keep]) @ evecs[:, keep].T
    return CovarianceBound(inv / shots, int(keep.sum()), evecs[:, ~keep], int(shots))
