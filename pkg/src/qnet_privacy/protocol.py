"""GHZ average-estimation protocol: probes, parity measurement, sampling, estimator."""

import warnings
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional

import numpy as np

from .errors import ArgumentError
from .fisher import Povm
from .model import NetworkModel, uniform_model
from .qcore import SIGMA_Z, DensityState

SIGMA_Z_HALF = SIGMA_Z / 2
_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)


def ghz_vector(d, alpha=1 / np.sqrt(2), beta=1 / np.sqrt(2)) -> np.ndarray:
    if d < 1:
        raise ArgumentError("d must be positive")
    alpha, beta = complex(alpha), complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-9:
        raise ArgumentError("|alpha|^2 + |beta|^2 must equal 1")
    psi = np.zeros(2**d, dtype=complex)
    psi[0] = alpha
    psi[-1] += beta
    return psi


def ghz_state(d, alpha=1 / np.sqrt(2), beta=1 / np.sqrt(2)) -> DensityState:
    """Projector onto alpha|0...0> + beta|1...1>."""
    return DensityState.from_vector(ghz_vector(d, alpha, beta), (2,) * d)


def product_plus_state(d) -> DensityState:
    return DensityState.from_vector(reduce(np.kron, [_PLUS] * d), (2,) * d)


def weighted_eigen_state(w, coeffs, eigvecs=None) -> DensityState:
    """Projector onto sum_i c_i (x)_mu |l_i>^{(x) w_mu}.

    ``eigvecs`` holds the eigenvectors of the local generator as columns
    (default: computational basis, i.e. eigenvectors of sigma_z/2).
    """
    w = np.asarray(w, dtype=float).reshape(-1)
    if np.any(w != np.round(w)) or np.any(w < 1):
        raise ArgumentError(f"weights must be integers >= 1, got {w.tolist()}")
    coeffs = np.asarray(coeffs, dtype=complex).reshape(-1)
    if abs(np.vdot(coeffs, coeffs).real - 1) > 1e-9:
        raise ArgumentError("coefficients must be normalized")
    n_qudits = int(w.sum())
    vecs = np.eye(len(coeffs), dtype=complex) if eigvecs is None else np.asarray(eigvecs, dtype=complex)
    if vecs.shape[1] < len(coeffs):
        raise ArgumentError("need one eigenvector per coefficient")
    psi = sum(c * reduce(np.kron, [vecs[:, i]] * n_qudits) for i, c in enumerate(coeffs))
    return DensityState.from_vector(psi, (vecs.shape[0],) * n_qudits)


def mixed_private_state(gamma0, ghz, diag_weights) -> DensityState:
    """gamma0 |Phi><Phi| + sum_i gamma_i |phi_i><phi_i| with computational |phi_i>.

    ``diag_weights`` maps bit strings (``"01"``) or basis indices to gamma_i.
    """
    ghz = ghz if isinstance(ghz, DensityState) else DensityState.from_vector(ghz, (2,) * int(round(np.log2(len(ghz)))))
    gammas = dict(diag_weights)
    total = gamma0 + sum(gammas.values())
    if gamma0 < 0 or any(g < 0 for g in gammas.values()) or abs(total - 1) > 1e-9:
        raise ArgumentError("mixture weights must be non-negative and sum to 1")
    mat = gamma0 * np.array(ghz.mat)
    for key, g in gammas.items():
        i = int(key, 2) if isinstance(key, str) else int(key)
        if isinstance(key, str) and len(key) != len(ghz.dims):
            raise ArgumentError(f"bit string {key!r} does not have {len(ghz.dims)} bits")
        if not 0 <= i < ghz.dim:
            raise ArgumentError(f"basis index {i} out of range")
        mat[i, i] += g
    return DensityState(mat, ghz.dims)


def average_model(d, rho0=None) -> NetworkModel:
    """d qubit nodes encoding theta_mu with generator sigma_z/2."""
    return uniform_model(d, ghz_state(d) if rho0 is None else rho0, SIGMA_Z_HALF)


def outcome_strings(d):
    return [format(i, f"0{d}b") for i in range(2**d)]


def parity_sign(outcome: str) -> int:
    """+1 for an even number of '1' (minus) results, -1 otherwise."""
    return -1 if outcome.count("1") % 2 else 1


def parity_probabilities(d, theta_bar) -> np.ndarray:
    signs = np.array([parity_sign(s) for s in outcome_strings(d)])
    return (1 + signs * np.cos(d * theta_bar)) / 2**d


def parity_probability(d, theta_bar, outcome: str) -> float:
    """Probability of the X-basis outcome string ``outcome`` ('0' = +, '1' = -)."""
    if len(outcome) != d or set(outcome) - {"0", "1"}:
        raise ArgumentError(f"outcome must be a {d}-bit string")
    return (1 + parity_sign(outcome) * np.cos(d * theta_bar)) / 2**d


def x_basis_povm(d) -> Povm:
    """Product X measurement; effect i corresponds to ``outcome_strings(d)[i]``."""
    local = (_PLUS, _MINUS)
    effects = []
    for s in outcome_strings(d):
        v = reduce(np.kron, [local[int(b)] for b in s])
        effects.append(np.outer(v, v.conj()))
    return Povm(tuple(effects))


@dataclass(frozen=True)
class OutcomeSample:
    shots: int
    counts: dict
    seed: int
    d: int

    def __post_init__(self):
        if sum(self.counts.values()) != self.shots:
            raise ArgumentError("counts must sum to the number of shots")

    def mean_parity(self) -> float:
        return sum(parity_sign(s) * c for s, c in self.counts.items()) / self.shots


def sample_outcomes(d, theta, shots, seed) -> OutcomeSample:
    """Draw ``shots`` i.i.d. outcome strings of the parity protocol.

    Uses numpy's PCG64 generator seeded with ``seed``; counts are multinomial
    over the 2^d strings in binary order.
    """
    if int(shots) != shots or shots < 1:
        raise ArgumentError("shots must be a positive integer")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != d:
        raise ArgumentError(f"expected {d} parameters")
    p = parity_probabilities(d, float(theta.mean()))
    p = np.clip(p, 0.0, None)
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    counts = rng.multinomial(int(shots), p / p.sum())
    return OutcomeSample(int(shots), dict(zip(outcome_strings(d), (int(c) for c in counts))), int(seed), d)


def estimate_mean(sample: OutcomeSample) -> float:
    """arccos of the clamped mean parity, divided by d.

    Consistent only when d * theta_bar lies in (0, pi).
    """
    return float(np.arccos(np.clip(sample.mean_parity(), -1.0, 1.0)) / sample.d)


def in_estimator_quadrant(d, theta_bar) -> bool:
    return 0.0 < d * theta_bar < np.pi


@dataclass(frozen=True)
class EstimationResult:
    theta_bar: float
    theta_bar_hat: float
    mse: float
    crb: float
    shots: int
    repetitions: int
    seed: int
    bias: float
    warning: Optional[str] = None
    estimates: tuple = field(default=(), repr=False)

    @property
    def efficiency(self):
        """MSE in units of the Cramer-Rao bound."""
        return self.mse / self.crb


def run_experiment(d, theta, shots, repetitions, seed) -> EstimationResult:
    """Repeat sampling and estimation; repetition r uses seed + r."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if repetitions < 1:
        raise ArgumentError("repetitions must be positive")
    theta_bar = float(theta.mean())
    warning = None
    if not in_estimator_quadrant(d, theta_bar):
        warning = "d*theta_bar outside (0, pi): the arccos estimator is biased here"
        warnings.warn(warning, stacklevel=2)
    est = np.array([estimate_mean(sample_outcomes(d, theta, shots, seed + r)) for r in range(repetitions)])
    mse = float(np.mean((est - theta_bar) ** 2))
    crb = 1.0 / (shots * d**2)
    return EstimationResult(
        theta_bar, float(est.mean()), mse, crb, int(shots), int(repetitions), int(seed),
        float(est.mean() - theta_bar), warning, tuple(float(e) for e in est),
    )
