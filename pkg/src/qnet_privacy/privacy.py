"""Privacy criteria for estimating a single linear function w.theta."""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .config import DEFAULT_TOL
from .errors import ArgumentError, UnsupportedEncoding
from .fisher import FisherMatrix, qfim
from .model import NetworkModel, check_generator_commutation, evolve, generator_derivative
from .qcore import as_matrix, commutator, eig_hermitian, fidelity, operator_norm, trace_norm


@dataclass(frozen=True)
class PairDiagnostic:
    mu: int
    nu: int
    norm_diff: float
    weight_gap: float
    ratio: Optional[float]  # norm_diff / weight_gap, None for equal weights


@dataclass(frozen=True)
class PrivacyVerdict:
    """Outcome of a privacy test.

    ``residual_rel`` is the test statistic compared against ``tol``; it is
    None when undefined (all-zero information matrix).
    """

    is_private: bool
    scale_a: float
    residual_rel: Optional[float]
    tol: float
    method: str
    pair_diagnostics: tuple = ()
    notes: tuple = field(default=())


@dataclass(frozen=True)
class ContinuityBoundReport:
    lhs: float
    rhs: float
    xi: float
    lambda_min_support: float
    support_restricted: bool

    @property
    def holds(self):
        return self.lhs <= self.rhs + 1e-12

    @property
    def slack(self):
        return self.rhs - self.lhs


def _weights(w, d=None):
    w = np.asarray(w, dtype=float).reshape(-1)
    if not np.all(np.isfinite(w)) or not np.any(w != 0):
        raise ArgumentError("weight vector must be finite and not all zero")
    if d is not None and w.shape[0] != d:
        raise ArgumentError(f"weight vector has length {w.shape[0]}, expected {d}")
    return w


def build_W(w) -> np.ndarray:
    w = _weights(w)
    return np.outer(w, w)


def rank_one_privacy_check(q, w, tol=DEFAULT_TOL.privacy) -> PrivacyVerdict:
    """Test Q = a w w^T.

    Private iff the relative Frobenius residual is within ``tol`` and every
    eigenvalue of Q restricted to the complement of w is at most
    ``tol * |Q|_F``.
    """
    mat = q.entries if isinstance(q, FisherMatrix) else np.asarray(q, dtype=float)
    w = _weights(w, mat.shape[0])
    nq = float(np.linalg.norm(mat))
    ww = float(w @ w)
    a = float(w @ mat @ w) / ww**2
    if nq == 0.0:
        return PrivacyVerdict(False, 0.0, None, tol, "rank_one", notes=("zero information matrix: residual undefined",))
    resid = float(np.linalg.norm(mat - a * np.outer(w, w))) / nq
    proj = np.eye(len(w)) - np.outer(w, w) / ww
    perp = np.linalg.eigvalsh(proj @ mat @ proj)
    leak = float(np.max(np.abs(perp)))
    ok = resid <= tol and leak <= tol * nq
    notes = () if ok or resid <= tol else (f"information orthogonal to w: {leak:.3g}",)
    return PrivacyVerdict(bool(ok), a, resid, tol, "rank_one", notes=notes)


def _proportionality_verdict(norm_diffs, w, tol, method):
    """Shared test: ||.||_1 of pair differences proportional to |w_m - w_n|."""
    pairs = []
    ok = True
    ratios = []
    for (m, n), nd in norm_diffs.items():
        gap = abs(w[m] - w[n])
        if gap <= 1e-12 * max(1.0, np.max(np.abs(w))):
            pairs.append(PairDiagnostic(m, n, nd, gap, None))
            ok = ok and nd <= tol
        else:
            r = nd / gap
            ratios.append(r)
            pairs.append(PairDiagnostic(m, n, nd, gap, r))
    notes = []
    stat = max((p.norm_diff for p in pairs if p.ratio is None), default=0.0)
    scale_a = 0.0
    if ratios:
        rmax, rmin = max(ratios), min(ratios)
        scale_a = float(np.mean(ratios))
        if rmax <= tol:
            notes.append("all weight-distinct pairs have vanishing differences")
            spread = 0.0
        elif rmin <= 0.0:
            spread = float("inf")
        else:
            spread = rmax / rmin - 1.0
        ok = ok and spread <= tol
        stat = max(stat, spread)
        if len(ratios) == 1:
            notes.append("only one weight-distinct pair: proportionality is not constraining")
    return PrivacyVerdict(bool(ok), scale_a, float(stat), tol, method, tuple(pairs), tuple(notes))


def derivative_norm_condition(drho_list, w, tol=DEFAULT_TOL.privacy) -> PrivacyVerdict:
    """||d_m rho - d_n rho||_1 proportional to |w_m - w_n| over all pairs.

    Equal-weight pairs must have difference at most ``tol``; the ratios of the
    remaining pairs must share one constant up to relative spread ``tol``.
    ``residual_rel`` holds the worst of these two statistics.
    """
    drho = [as_matrix(x) for x in drho_list]
    w = _weights(w, len(drho))
    diffs = {(m, n): trace_norm(drho[m] - drho[n]) for m, n in combinations(range(len(drho)), 2)}
    return _proportionality_verdict(diffs, w, tol, "derivative_norm")


def unitary_privacy_condition(model: NetworkModel, theta, w, tol=DEFAULT_TOL.privacy, use_initial=False) -> PrivacyVerdict:
    """Same proportionality test built from ||[G_m - G_n, rho]||_1.

    ``use_initial`` evaluates on the probe before sampling; both choices
    agree when every node generator commutes with its derivative, which is
    required here.
    """
    flags = check_generator_commutation(model, theta)
    if not all(flags):
        bad = [i for i, f in enumerate(flags) if not f]
        raise UnsupportedEncoding(f"nodes {bad} have generators that do not commute with their derivative")
    w = _weights(w, model.d)
    rho = model.rho0.mat if use_initial else evolve(model, theta).mat
    gens = [generator_derivative(model, m, theta) for m in range(model.d)]
    diffs = {(m, n): trace_norm(commutator(gens[m] - gens[n], rho)) for m, n in combinations(range(model.d), 2)}
    return _proportionality_verdict(diffs, w, tol, "unitary_commutator")


def average_privacy_condition(drho_list, tol=DEFAULT_TOL.privacy) -> bool:
    """All state derivatives equal entrywise within ``tol``."""
    drho = [as_matrix(x) for x in drho_list]
    if len(drho) < 2:
        raise ArgumentError("need at least two derivatives")
    worst = max(float(np.max(np.abs(drho[m] - drho[n]))) for m, n in combinations(range(len(drho)), 2))
    return worst <= tol


def support_min_eigenvalue(rho, rank_tol=None) -> float:
    evals = eig_hermitian(as_matrix(rho)).eigenvalues
    cut = DEFAULT_TOL.rank_rel * max(evals[-1], 0.0) if rank_tol is None else rank_tol
    support = evals[evals > cut]
    if support.size == 0:
        raise ArgumentError("state has no eigenvalue above the rank tolerance")
    return float(support[0])


def xi(rho, rank_tol=None) -> float:
    """(1/l)(1 + 32/l) with l the smallest eigenvalue on the support of rho."""
    lam = support_min_eigenvalue(rho, rank_tol)
    return (1.0 / lam) * (1.0 + 32.0 / lam)


def continuity_gap_bound(rho, drho_list, mu, nu, mu2, nu2, q=None, rank_tol=None) -> ContinuityBoundReport:
    """Compare |Q_{mu nu} - Q_{mu' nu'}| with its trace-norm continuity bound."""
    drho = [as_matrix(x) for x in drho_list]
    d = len(drho)
    if not all(0 <= i < d for i in (mu, nu, mu2, nu2)):
        raise ArgumentError("parameter index out of range")
    r = as_matrix(rho)
    if q is None:
        q = qfim(r, drho, rank_tol)
    qm = q.entries if isinstance(q, FisherMatrix) else np.asarray(q)
    lam = support_min_eigenvalue(r, rank_tol)
    x = (1.0 / lam) * (1.0 + 32.0 / lam)
    n1 = [trace_norm(a) for a in drho]
    rhs = 0.5 * x * (
        trace_norm(drho[mu] - drho[mu2]) * (n1[nu] + n1[nu2])
        + trace_norm(drho[nu] - drho[nu2]) * (n1[mu] + n1[mu2])
    )
    lhs = abs(float(qm[mu, nu] - qm[mu2, nu2]))
    evals = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
    cut = DEFAULT_TOL.rank_rel * max(evals[-1], 0.0) if rank_tol is None else rank_tol
    restricted = bool(np.sum(evals > cut) < r.shape[0])
    return ContinuityBoundReport(lhs, float(rhs), x, lam, restricted)


def epsilon_privacy(sigma, hprime_mu, hprime_nu) -> float:
    """||[G_mu - G_nu, sigma]||_1; zero for exactly private states."""
    s = as_matrix(sigma)
    a, b = as_matrix(hprime_mu), as_matrix(hprime_nu)
    if a.shape != s.shape or b.shape != s.shape:
        raise ArgumentError("generator and state dimensions differ")
    return trace_norm(commutator(a - b, s))


def epsilon_privacy_bound(sigma, varrho_private, h_local) -> float:
    """8 ||H||_inf sqrt(1 - F^2(sigma, varrho))."""
    f = min(fidelity(sigma, varrho_private), 1.0)
    return 8.0 * operator_norm(h_local) * float(np.sqrt(max(0.0, 1.0 - f * f)))


@dataclass(frozen=True)
class EpsilonChain:
    """Every link of the epsilon-privacy bound chain, left to right."""

    epsilon: float
    generator_bound: float   # 4 max||G||_inf ||sigma - varrho||_1
    local_bound: float       # 4 ||H||_inf ||sigma - varrho||_1
    fidelity_bound: float    # 8 ||H||_inf sqrt(1 - F^2)
    fidelity: float

    def holds(self, slack=1e-10):
        return (
            self.epsilon <= self.generator_bound + slack
            and self.generator_bound <= self.local_bound + slack
            and self.local_bound <= self.fidelity_bound + slack
        )


def epsilon_chain(sigma, varrho_private, hprime_mu, hprime_nu, h_local) -> EpsilonChain:
    s, v = as_matrix(sigma), as_matrix(varrho_private)
    eps = epsilon_privacy(s, hprime_mu, hprime_nu)
    dist = trace_norm(s - v)
    gnorm = max(operator_norm(hprime_mu), operator_norm(hprime_nu))
    hnorm = operator_norm(h_local)
    f = min(fidelity(s, v), 1.0)
    return EpsilonChain(
        eps,
        4.0 * gnorm * dist,
        4.0 * hnorm * dist,
        8.0 * hnorm * float(np.sqrt(max(0.0, 1.0 - f * f))),
        f,
    )
