"""Local noise channels, their action on network probes, and privacy after noise."""

import itertools
from functools import reduce
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .config import DEFAULT_TOL
from .errors import ArgumentError, UnsupportedEncoding
from .model import (
    GeneralUnitary,
    MultiplicativeUnitary,
    NetworkModel,
    evolve,
    state_derivatives,
)
from .privacy import PrivacyVerdict, derivative_norm_condition
from .qcore import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DensityState,
    apply_local_kraus,
    as_matrix,
    commutator,
    operator_norm,
    tensor,
)

PER_NODE = "per_node"
GLOBAL_MAP = "global_map"


@dataclass(frozen=True)
class NoiseChannel:
    """Kraus channel with strength ``eta``.

    ``per_node`` channels act with the same Kraus list on every targeted
    tensor factor.  ``global_map`` channels have no local Kraus list; the map
    is applied to the whole state (only global depolarizing is defined).
    """

    name: str
    eta: float
    kraus: tuple = ()
    locality: str = PER_NODE

    def __post_init__(self):
        _check_eta(self.eta)
        if self.locality not in (PER_NODE, GLOBAL_MAP):
            raise ArgumentError(f"unknown locality {self.locality!r}")
        ks = tuple(as_matrix(k) for k in self.kraus)
        if self.locality == PER_NODE:
            if not ks:
                raise ArgumentError("per-node channel needs Kraus operators")
            n = ks[0].shape[0]
            comp = sum(k.conj().T @ k for k in ks)
            err = float(np.max(np.abs(comp - np.eye(n))))
            if err > DEFAULT_TOL.kraus:
                raise ArgumentError(f"Kraus operators are not complete (error {err:.3g})")
        elif self.name != "depolarizing":
            raise ArgumentError(f"no global map defined for channel {self.name!r}")
        object.__setattr__(self, "kraus", ks)

    @property
    def local_dim(self) -> Optional[int]:
        return self.kraus[0].shape[0] if self.kraus else None

    def kraus_stack(self):
        return np.array(self.kraus)


def _check_eta(eta):
    if not (0.0 <= eta <= 1.0):
        raise ArgumentError(f"eta must lie in [0, 1], got {eta!r}")


def dephasing(eta) -> NoiseChannel:
    _check_eta(eta)
    return NoiseChannel("dephasing", eta, (np.sqrt(1 - eta) * IDENTITY_2, np.sqrt(eta) * SIGMA_Z))


def depolarizing(eta) -> NoiseChannel:
    _check_eta(eta)
    s = np.sqrt(eta / 4)
    return NoiseChannel("depolarizing", eta, (s * SIGMA_X, s * SIGMA_Y, s * SIGMA_Z, np.sqrt(1 - 3 * eta / 4) * IDENTITY_2))


def global_depolarizing(eta) -> NoiseChannel:
    """rho -> (1 - eta) rho + eta 1/D on the whole network."""
    return NoiseChannel("depolarizing", eta, (), GLOBAL_MAP)


def amplitude_damping(eta) -> NoiseChannel:
    _check_eta(eta)
    a1 = np.array([[1, 0], [0, np.sqrt(1 - eta)]], dtype=complex)
    a2 = np.array([[0, np.sqrt(eta)], [0, 0]], dtype=complex)
    return NoiseChannel("amplitude_damping", eta, (a1, a2))


def erasure(eta) -> NoiseChannel:
    """Qutrit-embedded erasure; level 2 is the flag state |e>."""
    _check_eta(eta)
    a1 = np.diag([np.sqrt(1 - eta), np.sqrt(1 - eta), 0]).astype(complex)
    a2 = np.zeros((3, 3), complex)
    a2[2, 2] = 1
    a3 = np.zeros((3, 3), complex)
    a3[2, 0] = np.sqrt(eta)
    a4 = np.zeros((3, 3), complex)
    a4[2, 1] = np.sqrt(eta)
    return NoiseChannel("erasure", eta, (a1, a2, a3, a4))


CHANNELS = {
    "dephasing": dephasing,
    "depolarizing": depolarizing,
    "amplitude_damping": amplitude_damping,
    "erasure": erasure,
}


def make_channel(name, eta, locality=PER_NODE) -> NoiseChannel:
    if locality == GLOBAL_MAP:
        if name != "depolarizing":
            raise ArgumentError(f"no global map defined for channel {name!r}")
        return global_depolarizing(eta)
    try:
        return CHANNELS[name](eta)
    except KeyError:
        raise ArgumentError(f"unknown channel {name!r}") from None


# --- qutrit embedding for erasure -----------------------------------------

_QUBIT_INTO_QUTRIT = np.array([[1, 0], [0, 1], [0, 0]], dtype=complex)


def _embed_op(h):
    out = np.zeros((3, 3), dtype=complex)
    out[:2, :2] = as_matrix(h)
    return out


def embed_state_for_erasure(rho: DensityState) -> DensityState:
    if any(n != 2 for n in rho.dims):
        raise UnsupportedEncoding("erasure embedding needs qubit factors")
    v = reduce(np.kron, [_QUBIT_INTO_QUTRIT] * len(rho.dims))
    return DensityState(v @ rho.mat @ v.conj().T, (3,) * len(rho.dims))


def embed_for_erasure(model: NetworkModel) -> NetworkModel:
    """Qubit network -> qutrit network; each local unitary becomes U + 1 on |e>."""
    nodes = []
    for node in model.nodes:
        if node.local_dim != 2:
            raise UnsupportedEncoding("erasure embedding needs qubit nodes")
        if isinstance(node, MultiplicativeUnitary):
            nodes.append(MultiplicativeUnitary(_embed_op(node.generator), node.weight))
        elif isinstance(node, GeneralUnitary):
            h, dh = node.hamiltonian, node.dh
            nodes.append(GeneralUnitary(lambda t, h=h: _embed_op(h(t)), 3, lambda t, dh=dh: _embed_op(dh(t))))
        else:
            raise UnsupportedEncoding("erasure embedding needs unitary encodings")
    return NetworkModel(tuple(nodes), embed_state_for_erasure(model.rho0))


# --- channel application ---------------------------------------------------

def apply_channel_matrix(mat, channel: NoiseChannel, dims: Sequence[int], factors=None) -> np.ndarray:
    """Linear action of ``channel`` on any operator ``mat`` (states or derivatives)."""
    a = as_matrix(mat)
    dims = tuple(int(n) for n in dims)
    if channel.locality == GLOBAL_MAP:
        # trace-preserving affine map; on traceless inputs only the (1 - eta) part survives
        return (1 - channel.eta) * a + channel.eta * np.trace(a) * np.eye(a.shape[0]) / a.shape[0]
    factors = range(len(dims)) if factors is None else sorted(set(factors))
    ks = channel.kraus_stack()
    for f in factors:
        if not 0 <= f < len(dims):
            raise ArgumentError(f"factor index {f} out of range")
        if dims[f] != channel.local_dim:
            raise ArgumentError(f"channel acts on dimension {channel.local_dim}, factor {f} has {dims[f]}")
        a = apply_local_kraus(a, ks, f, dims)
    return a


def apply_channel(rho: DensityState, channel: NoiseChannel, nodes=None) -> DensityState:
    """Apply ``channel`` to the tensor factors ``nodes`` (default: all)."""
    return DensityState(apply_channel_matrix(rho.mat, channel, rho.dims, nodes), rho.dims)


def kraus_strings(channel: NoiseChannel, n: int):
    """Yield (k, A_k1 x ... x A_kn) lazily in lexicographic order of k."""
    ks = channel.kraus
    for k in itertools.product(range(len(ks)), repeat=n):
        yield k, tensor([ks[i] for i in k])


def apply_channel_strings(rho, channel: NoiseChannel, n: int) -> np.ndarray:
    """sum_k A_k rho A_k^dagger over all q^n Kraus strings, fixed summation order."""
    r = as_matrix(rho)
    out = np.zeros_like(r)
    for _, a in kraus_strings(channel, n):
        out += a @ r @ a.conj().T
    return out


def max_commutator_norm(channel: NoiseChannel, unitary) -> float:
    """max_k ||[A_k, U]||_inf over the Kraus list (representation dependent)."""
    u = as_matrix(unitary)
    return max(operator_norm(commutator(k, u)) for k in channel.kraus)


def superoperator(kraus) -> np.ndarray:
    """Row-major vectorised map: vec(sum_k A rho A^dagger) = S vec(rho)."""
    return sum(np.kron(a, a.conj()) for a in kraus)


def channel_commutator_norm(channel: NoiseChannel, unitary) -> float:
    """||S_E S_U - S_U S_E||_inf for the channel E and conjugation by U.

    Independent of the Kraus representation; zero iff E(U rho U^dagger) =
    U E(rho) U^dagger for every rho.
    """
    u = as_matrix(unitary)
    s_e = superoperator(channel.kraus)
    s_u = np.kron(u, u.conj())
    return operator_norm(s_e @ s_u - s_u @ s_e)


def _local_sampling_unitary(node, t, dim):
    u = node.local_unitary(t)
    if dim == 3 and u.shape[0] == 2:
        u = _embed_op(u)
        u[2, 2] = 1.0
    if u.shape[0] != dim:
        raise ArgumentError("channel and node dimensions differ")
    return u


def commutes_with_sampling(channel: NoiseChannel, model: NetworkModel, theta, tol=DEFAULT_TOL.commute, level="kraus") -> bool:
    """Whether the channel commutes with every local sampling unitary.

    ``level="kraus"`` requires every Kraus operator to commute with U;
    ``level="channel"`` only requires the maps to commute.  Qubit models are
    compared against the qutrit-extended U + 1 when the channel acts on
    qutrits (erasure).
    """
    if level not in ("kraus", "channel"):
        raise ArgumentError(f"unknown commutation level {level!r}")
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if channel.locality == GLOBAL_MAP:
        return True  # the identity and rho commute with any unitary conjugation
    norm = max_commutator_norm if level == "kraus" else channel_commutator_norm
    for node, t in zip(model.nodes, theta):
        if not isinstance(node, (MultiplicativeUnitary, GeneralUnitary)):
            raise UnsupportedEncoding("sampling commutation needs unitary encodings")
        if norm(channel, _local_sampling_unitary(node, t, channel.local_dim)) > tol:
            return False
    return True


BEFORE_SAMPLING = "before_sampling"
AFTER_SAMPLING = "after_sampling"


class NoisyProbe(NamedTuple):
    model: NetworkModel        # model actually evolved (embedded for erasure)
    rho: np.ndarray            # final state
    drho: list                 # derivatives of the final state
    reference: np.ndarray      # noiseless counterpart of ``rho``


def noisy_probe(model: NetworkModel, channel: NoiseChannel, stage: str, theta) -> NoisyProbe:
    """Compose sampling and noise in the order ``stage`` and differentiate.

    Before sampling the noise only changes the initial probe, so the usual
    model derivatives apply.  After sampling the parameter-independent
    channel is linear and acts on each derivative directly.
    """
    if stage not in (BEFORE_SAMPLING, AFTER_SAMPLING):
        raise ArgumentError(f"unknown noise stage {stage!r}")
    if channel.local_dim == 3 and set(model.dims) == {2}:
        model = embed_for_erasure(model)
    dims = model.dims
    if stage == BEFORE_SAMPLING:
        noisy = model.with_initial_state(DensityState(apply_channel_matrix(model.rho0.mat, channel, dims), dims))
        rho = evolve(noisy, theta).mat
        return NoisyProbe(noisy, rho, state_derivatives(noisy, theta), evolve(model, theta).mat)
    clean = evolve(model, theta).mat
    rho = apply_channel_matrix(clean, channel, dims)
    drho = [apply_channel_matrix(x, channel, dims) for x in state_derivatives(model, theta)]
    return NoisyProbe(model, rho, drho, clean)


def privacy_after_noise(model, channel, stage, theta, w, tol=DEFAULT_TOL.privacy) -> PrivacyVerdict:
    probe = noisy_probe(model, channel, stage, theta)
    return derivative_norm_condition(probe.drho, w, tol)


# --- amplitude-damping structure -------------------------------------------

def ghz_corner_indices(dims: Sequence[int]):
    """Flat indices of |0...0> and |1...1> for local dimensions ``dims``."""
    dims = list(dims)
    ones = 0
    for n in dims:
        ones = ones * n + 1
    return 0, ones


@dataclass(frozen=True)
class AdDecomposition:
    """GHZ-like corner block plus diagonal remainder of a damped GHZ-like state."""

    coherence_part: np.ndarray   # nonzero only in the |0..0>,|1..1> 2x2 block
    diagonal_part: np.ndarray    # diagonal outside that block
    residual: float              # max |rho - coherence_part - diagonal_part|
    coherence: complex           # <0..0| rho |1..1>


def ad_structure_decompose(rho_out, dims=None) -> AdDecomposition:
    r = as_matrix(rho_out)
    if dims is None:
        dims = rho_out.dims if isinstance(rho_out, DensityState) else (2,) * int(round(np.log2(r.shape[0])))
    i0, i1 = ghz_corner_indices(dims)
    corner = np.zeros_like(r)
    idx = np.ix_([i0, i1], [i0, i1])
    corner[idx] = r[idx]
    diag = np.diag(np.diag(r))
    diag[i0, i0] = 0
    diag[i1, i1] = 0
    resid = float(np.max(np.abs(r - corner - diag)))
    return AdDecomposition(corner, diag, resid, complex(r[i0, i1]))


class StructureFlags(NamedTuple):
    is_generalized_permutation: bool
    is_upper_triangular: bool
    first_entry_zero: bool


def matrix_structure_predicates(m, zero=DEFAULT_TOL.structure_zero) -> StructureFlags:
    """Structural checks used for products of amplitude-damping Kraus operators.

    Generalized permutation here allows zero rows/columns: at most one
    nonzero entry per row and per column.
    """
    nz = np.abs(as_matrix(m)) > zero
    gp = bool(np.all(nz.sum(axis=0) <= 1) and np.all(nz.sum(axis=1) <= 1))
    upper = not bool(np.any(np.tril(nz, -1)))
    return StructureFlags(gp, upper, not bool(nz[0, 0]))
