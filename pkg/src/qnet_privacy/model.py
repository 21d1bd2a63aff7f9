"""Network statistical model: local encodings, evolved probe and its derivatives."""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .config import DEFAULT_TOL
from .errors import ArgumentError, UnsupportedEncoding
from .qcore import (
    DensityState,
    apply_local_kraus,
    as_matrix,
    commutator,
    embed_local,
    expm_hermitian,
    is_hermitian,
    operator_norm,
    tensor,
)


@dataclass(frozen=True)
class MultiplicativeUnitary:
    """theta -> exp(-i theta H) on each of ``weight`` tensor factors of the node."""

    generator: np.ndarray
    weight: int = 1

    def __post_init__(self):
        h = as_matrix(self.generator)
        if not is_hermitian(h):
            raise ArgumentError("generator must be Hermitian")
        if int(self.weight) != self.weight or self.weight < 1:
            raise ArgumentError(f"weight must be a positive integer, got {self.weight!r}")
        object.__setattr__(self, "generator", 0.5 * (h + h.conj().T))
        object.__setattr__(self, "weight", int(self.weight))

    @property
    def local_dim(self):
        return self.generator.shape[0]

    @property
    def n_factors(self):
        return self.weight

    def hamiltonian(self, theta):
        return theta * self.generator

    def dhamiltonian(self, theta):
        return self.generator

    def local_unitary(self, theta):
        return expm_hermitian(self.generator, theta)


@dataclass(frozen=True)
class GeneralUnitary:
    """theta -> exp(-i H(theta)) on a single factor.

    ``dhamiltonian`` is dH/dtheta; when omitted it is taken by central
    differences of ``hamiltonian``.
    """

    hamiltonian: Callable[[float], np.ndarray]
    dim: int
    dhamiltonian: Optional[Callable[[float], np.ndarray]] = None
    fd_step: float = DEFAULT_TOL.fd_step

    weight = 1
    n_factors = 1

    @property
    def local_dim(self):
        return self.dim

    def dh(self, theta):
        if self.dhamiltonian is not None:
            return as_matrix(self.dhamiltonian(theta))
        h = self.fd_step
        return (as_matrix(self.hamiltonian(theta + h)) - as_matrix(self.hamiltonian(theta - h))) / (2 * h)

    def local_unitary(self, theta):
        return expm_hermitian(self.hamiltonian(theta))


@dataclass(frozen=True)
class KrausEncoding:
    """theta -> CPTP map given by the Kraus list ``family(theta)`` on one factor."""

    family: Callable[[float], Sequence[np.ndarray]]
    dim: int

    weight = 1
    n_factors = 1

    @property
    def local_dim(self):
        return self.dim

    def kraus(self, theta):
        ks = np.array([as_matrix(k) for k in self.family(theta)])
        completeness = np.einsum("kji,kjl->il", ks.conj(), ks)
        err = np.max(np.abs(completeness - np.eye(self.dim)))
        if err > DEFAULT_TOL.kraus:
            raise ArgumentError(f"Kraus family is not trace preserving at theta={theta!r} (error {err:.3g})")
        return ks


UNITARY_TYPES = (MultiplicativeUnitary, GeneralUnitary)


@dataclass(frozen=True)
class NetworkModel:
    """d encoding maps sharing the initial probe ``rho0``.

    A node of weight w occupies w consecutive tensor factors of ``rho0``.
    """

    nodes: tuple
    rho0: DensityState
    factor_slices: tuple = field(init=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        if not nodes:
            raise ArgumentError("a network needs at least one node")
        if not isinstance(self.rho0, DensityState):
            raise ArgumentError("rho0 must be a DensityState")
        slices, start = [], 0
        for node in nodes:
            slices.append(range(start, start + node.n_factors))
            start += node.n_factors
        dims = self.dims
        if tuple(self.rho0.dims) != dims:
            raise ArgumentError(f"rho0 dims {self.rho0.dims} do not match the expanded node dims {dims}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "factor_slices", tuple(slices))

    @property
    def d(self):
        return len(self.nodes)

    @property
    def dims(self):
        return tuple(n.local_dim for n in self.nodes for _ in range(n.n_factors))

    @property
    def weights(self):
        return tuple(n.weight for n in self.nodes)

    def with_initial_state(self, rho0):
        return NetworkModel(self.nodes, rho0)


def _check_theta(model, theta):
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape[0] != model.d:
        raise ArgumentError(f"expected {model.d} parameters, got {theta.shape[0]}")
    if not np.all(np.isfinite(theta)):
        raise ArgumentError("parameters must be finite")
    return theta


def _require_unitary(node, what):
    if not isinstance(node, UNITARY_TYPES):
        raise UnsupportedEncoding(f"{what} is only defined for unitary encodings, got {type(node).__name__}")


def sampling_unitary(model: NetworkModel, theta) -> np.ndarray:
    """Global sampling operator, tensor product of the local unitaries."""
    theta = _check_theta(model, theta)
    locals_ = []
    for node, t in zip(model.nodes, theta):
        _require_unitary(node, "sampling_unitary")
        u = node.local_unitary(t)
        locals_.extend([u] * node.n_factors)
    return tensor(locals_)


def _evolve_matrix(model, theta):
    rho = np.array(model.rho0.mat)
    dims = model.dims
    for node, sl, t in zip(model.nodes, model.factor_slices, theta):
        ops = node.kraus(t) if isinstance(node, KrausEncoding) else node.local_unitary(t)
        for f in sl:
            rho = apply_local_kraus(rho, ops, f, dims)
    return rho


def evolve(model: NetworkModel, theta) -> DensityState:
    """Probe state after the sampling stage at parameters ``theta``."""
    theta = _check_theta(model, theta)
    return DensityState(_evolve_matrix(model, theta), model.dims)


def generator_derivative(model: NetworkModel, mu: int, theta) -> np.ndarray:
    """Global operator G_mu with d/dtheta_mu of the node unitary equal to -i G_mu U.

    For a weight-w multiplicative node this is the sum of the w embeddings of
    H, one per factor of the node.
    """
    theta = _check_theta(model, theta)
    if not 0 <= mu < model.d:
        raise ArgumentError(f"node index {mu} out of range")
    node = model.nodes[mu]
    _require_unitary(node, "generator_derivative")
    dims = model.dims
    local = node.generator if isinstance(node, MultiplicativeUnitary) else node.dh(theta[mu])
    return sum(embed_local(local, f, dims) for f in model.factor_slices[mu])


def check_generator_commutation(model: NetworkModel, theta, tol=DEFAULT_TOL.commute):
    """Per node: whether [dH/dtheta, H(theta)] vanishes."""
    theta = _check_theta(model, theta)
    out = []
    for node, t in zip(model.nodes, theta):
        _require_unitary(node, "check_generator_commutation")
        if isinstance(node, MultiplicativeUnitary):
            out.append(True)
            continue
        c = commutator(node.dh(t), node.hamiltonian(t))
        out.append(operator_norm(c) <= tol)
    return out


def _node_is_analytic(node, t):
    if isinstance(node, MultiplicativeUnitary):
        return True
    if isinstance(node, GeneralUnitary):
        c = commutator(node.dh(t), node.hamiltonian(t))
        return operator_norm(c) <= DEFAULT_TOL.commute
    return False


def finite_difference_derivative(model: NetworkModel, theta, mu: int, h=DEFAULT_TOL.fd_step):
    theta = _check_theta(model, theta)
    step = np.zeros_like(theta)
    step[mu] = h
    return (_evolve_matrix(model, theta + step) - _evolve_matrix(model, theta - step)) / (2 * h)


def state_derivative(model: NetworkModel, theta, mu: int, rho=None, h=DEFAULT_TOL.fd_step) -> np.ndarray:
    """d rho_theta / d theta_mu.

    Analytic -i[G_mu, rho] for unitary nodes whose generator commutes with
    its derivative; central finite differences otherwise.
    """
    theta = _check_theta(model, theta)
    if not 0 <= mu < model.d:
        raise ArgumentError(f"node index {mu} out of range")
    node = model.nodes[mu]
    if _node_is_analytic(node, theta[mu]):
        g = generator_derivative(model, mu, theta)
        r = _evolve_matrix(model, theta) if rho is None else as_matrix(rho)
        return -1j * (g @ r - r @ g)
    return finite_difference_derivative(model, theta, mu, h)


def state_derivatives(model: NetworkModel, theta, h=DEFAULT_TOL.fd_step):
    theta = _check_theta(model, theta)
    rho = _evolve_matrix(model, theta)
    return [state_derivative(model, theta, mu, rho=rho, h=h) for mu in range(model.d)]


def uniform_model(d, rho0: DensityState, generator, weights=None) -> NetworkModel:
    """d multiplicative nodes sharing one generator; ``weights`` default to 1."""
    weights = [1] * d if weights is None else list(weights)
    if len(weights) != d:
        raise ArgumentError("weights length must equal d")
    return NetworkModel(tuple(MultiplicativeUnitary(generator, w) for w in weights), rho0)

