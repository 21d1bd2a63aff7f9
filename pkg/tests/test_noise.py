import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from qnet_privacy.errors import ArgumentError, UnsupportedEncoding
from qnet_privacy.model import KrausEncoding, MultiplicativeUnitary, NetworkModel, evolve, generator_derivative, uniform_model
from qnet_privacy.noise import (
    AFTER_SAMPLING,
    BEFORE_SAMPLING,
    NoiseChannel,
    ad_structure_decompose,
    amplitude_damping,
    apply_channel,
    apply_channel_matrix,
    apply_channel_strings,
    channel_commutator_norm,
    commutes_with_sampling,
    dephasing,
    depolarizing,
    embed_for_erasure,
    embed_state_for_erasure,
    erasure,
    global_depolarizing,
    kraus_strings,
    make_channel,
    matrix_structure_predicates,
    max_commutator_norm,
    noisy_probe,
    privacy_after_noise,
)
from qnet_privacy.privacy import epsilon_privacy
from qnet_privacy.protocol import SIGMA_Z_HALF, ghz_state, mixed_private_state, product_plus_state
from qnet_privacy.qcore import DensityState, expm_hermitian

ETAS = [round(0.1 * k, 1) for k in range(11)]
KRAUS_CHANNELS = [dephasing, depolarizing, amplitude_damping]


def _ghz_model(d, alpha=2**-0.5, beta=2**-0.5):
    return uniform_model(d, ghz_state(d, alpha, beta), SIGMA_Z_HALF)


def test_single_qubit_channel_actions(rng):
    rho = random_state(rng, 2)
    assert np.allclose(apply_channel_matrix(rho, dephasing(0.0), (2,)), rho)
    for eta in (0.2, 0.7):
        out = apply_channel_matrix(rho, depolarizing(eta), (2,))
        assert np.allclose(out, (1 - eta) * rho + eta / 2 * np.eye(2))
    one = np.diag([0, 1]).astype(complex)
    assert np.allclose(apply_channel_matrix(one, amplitude_damping(1.0), (2,)), np.diag([1, 0]))


def test_erasure_actions():
    rho = embed_state_for_erasure(DensityState(np.array([[0.6, 0.2], [0.2, 0.4]], dtype=complex), (2,))).mat
    assert np.allclose(apply_channel_matrix(rho, erasure(0.0), (3,)), rho)
    flag = np.diag([0, 0, 1]).astype(complex)
    assert np.allclose(apply_channel_matrix(rho, erasure(1.0), (3,)), flag)
    eta = 0.3
    assert np.allclose(apply_channel_matrix(rho, erasure(eta), (3,)), (1 - eta) * rho + eta * flag)
    ks = erasure(eta).kraus
    assert np.allclose(sum(k.conj().T @ k for k in ks), np.eye(3))


def test_eta_validation():
    for ctor in (dephasing, depolarizing, amplitude_damping, erasure, global_depolarizing):
        with pytest.raises(ArgumentError):
            ctor(1.2)
        with pytest.raises(ArgumentError):
            ctor(-0.1)
    with pytest.raises(ArgumentError):
        NoiseChannel("broken", 0.1, (0.5 * np.eye(2),))
    with pytest.raises(ArgumentError):
        make_channel("dephasing", 0.1, "global_map")
    with pytest.raises(ArgumentError):
        make_channel("bitflip", 0.1)


@pytest.mark.parametrize("eta", ETAS)
def test_channels_preserve_states(eta):
    rho = DensityState(random_state(np.random.default_rng(int(eta * 10)), 8), (2, 2, 2))
    for ch in [c(eta) for c in KRAUS_CHANNELS] + [global_depolarizing(eta)]:
        out = apply_channel(rho, ch).mat
        assert abs(np.trace(out) - 1) <= 1e-9
        assert np.max(np.abs(out - out.conj().T)) <= 1e-9
        assert np.linalg.eigvalsh(out)[0] >= -1e-9
    emb = embed_state_for_erasure(rho)
    out = apply_channel(emb, erasure(eta)).mat
    assert abs(np.trace(out) - 1) <= 1e-9 and np.linalg.eigvalsh(out)[0] >= -1e-9


def test_dephasing_on_ghz_coherence():
    eta = 0.15
    out = apply_channel(ghz_state(2), dephasing(eta)).mat
    assert out[0, 3] == pytest.approx(0.5 * (1 - 2 * eta) ** 2)


def test_global_depolarizing_map():
    rho = ghz_state(3)
    out = apply_channel(rho, global_depolarizing(0.3)).mat
    assert np.allclose(out, 0.7 * rho.mat + 0.3 * np.eye(8) / 8)


def test_apply_channel_subset_and_errors():
    rho = ghz_state(2)
    out = apply_channel(rho, amplitude_damping(1.0), nodes=[1]).mat
    assert np.allclose(np.diag(out).real, [0.5, 0, 0.5, 0])
    with pytest.raises(ArgumentError):
        apply_channel(rho, erasure(0.1))
    with pytest.raises(ArgumentError):
        apply_channel(rho, dephasing(0.1), nodes=[2])


@pytest.mark.parametrize("ctor", KRAUS_CHANNELS)
def test_fast_path_matches_kraus_strings(ctor):
    rho = random_state(np.random.default_rng(3), 8)
    ch = ctor(0.37)
    assert np.allclose(apply_channel_matrix(rho, ch, (2, 2, 2)), apply_channel_strings(rho, ch, 3), atol=1e-13)


def test_kraus_strings_lazy_and_ordered():
    gen = kraus_strings(amplitude_damping(0.2), 3)
    first = next(gen)
    assert first[0] == (0, 0, 0)
    rest = [k for k, _ in gen]
    assert rest == list(itertools.product(range(2), repeat=3))[1:]


def test_commutation_claims():
    m = _ghz_model(3)
    theta = [np.pi / 2] * 3
    u = expm_hermitian(SIGMA_Z_HALF, np.pi / 2)
    u3 = np.eye(3, dtype=complex)
    u3[:2, :2] = u
    assert max_commutator_norm(dephasing(0.5), u) <= 1e-10
    assert max_commutator_norm(depolarizing(0.5), u) > 0.1
    assert max_commutator_norm(amplitude_damping(0.5), u) > 0.1
    assert commutes_with_sampling(dephasing(0.5), m, theta)
    assert commutes_with_sampling(global_depolarizing(0.5), m, theta)
    assert not commutes_with_sampling(amplitude_damping(0.5), m, [0.3, 0.4, 0.5])
    assert not commutes_with_sampling(depolarizing(0.5), m, theta)
    # A3 = sqrt(eta)|e><0| gives A3 (U + 1) = u_00 (U + 1) A3: equal only up to a phase
    assert max_commutator_norm(erasure(0.5), u3) == pytest.approx(np.sqrt(0.5) * abs(u[0, 0] - 1))
    assert not commutes_with_sampling(erasure(0.5), m, theta)


def test_channel_level_commutation_is_phase_covariance():
    m = _ghz_model(2)
    for theta in ([np.pi / 2] * 2, [0.3, 1.7]):
        for ch in (dephasing(0.4), depolarizing(0.4), amplitude_damping(0.4), erasure(0.4)):
            assert commutes_with_sampling(ch, m, theta, level="channel")
    u = expm_hermitian(np.array([[0, 1], [1, 0]]) / 2, 0.9)
    assert channel_commutator_norm(amplitude_damping(0.4), u) > 0.1
    assert channel_commutator_norm(dephasing(0.4), u) > 0.1
    assert channel_commutator_norm(depolarizing(0.4), u) <= 1e-12
    with pytest.raises(ArgumentError):
        commutes_with_sampling(dephasing(0.1), m, [0, 0], level="map")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_channel_commutator_matches_direct_action(seed):
    rng = np.random.default_rng(seed)
    u = expm_hermitian(SIGMA_Z_HALF, rng.uniform(-3, 3))
    ch = amplitude_damping(rng.uniform())
    rho = random_state(rng, 2)
    a = apply_channel_matrix(u @ rho @ u.conj().T, ch, (2,))
    b = u @ apply_channel_matrix(rho, ch, (2,)) @ u.conj().T
    assert np.max(np.abs(a - b)) <= 1e-12
    assert channel_commutator_norm(ch, u) <= 1e-12


def test_commutation_rejects_kraus_nodes():
    node = KrausEncoding(lambda t: dephasing(0.1).kraus, 2)
    m = NetworkModel((node,), DensityState(np.eye(2) / 2, (2,)))
    with pytest.raises(UnsupportedEncoding):
        commutes_with_sampling(dephasing(0.1), m, [0.0])


def test_erasure_embedding():
    m = _ghz_model(2)
    e = embed_for_erasure(m)
    assert e.dims == (3, 3)
    assert abs(np.trace(e.rho0.mat) - 1) < 1e-12
    flagged = [i for i in range(9) if 2 in divmod(i, 3)]
    assert np.allclose(np.diag(e.rho0.mat)[flagged], 0)
    theta = [0.3, 0.8]
    v = np.kron(np.eye(3)[:, :2], np.eye(3)[:, :2])
    assert np.allclose(evolve(e, theta).mat, v @ evolve(m, theta).mat @ v.T)
    u = e.nodes[0].local_unitary(0.4)
    assert np.allclose(u.conj().T @ u, np.eye(3))


def test_fully_erasing_noise_gives_vacuous_privacy():
    # no parameter information survives, so every derivative vanishes
    model = uniform_model(3, product_plus_state(3), SIGMA_Z_HALF)
    w = np.full(3, 1 / 3)
    for ch in (erasure(1.0), dephasing(0.5)):
        v = privacy_after_noise(model, ch, BEFORE_SAMPLING, [0.2, 0.4, 0.6], w)
        assert v.is_private
        assert np.allclose(noisy_probe(model, ch, BEFORE_SAMPLING, [0.2, 0.4, 0.6]).drho, 0, atol=1e-12)


@pytest.mark.parametrize("stage", [BEFORE_SAMPLING, AFTER_SAMPLING])
@pytest.mark.parametrize("name,locality", [("dephasing", "per_node"), ("erasure", "per_node"), ("depolarizing", "global_map")])
def test_privacy_preserved_under_commuting_noise(stage, name, locality):
    probes = [
        (_ghz_model(3), np.full(3, 1 / 3)),
        (uniform_model(3, mixed_private_state(0.5, ghz_state(3), {"001": 0.25, "110": 0.25}), SIGMA_Z_HALF), np.full(3, 1 / 3)),
    ]
    theta = [0.2, 0.5, 0.9]
    for model, w in probes:
        for eta in ETAS:
            v = privacy_after_noise(model, make_channel(name, eta, locality), stage, theta, w, tol=1e-8)
            assert v.is_private, (name, stage, eta)


@pytest.mark.parametrize("stage", [BEFORE_SAMPLING, AFTER_SAMPLING])
def test_weighted_probe_private_after_dephasing(stage):
    from qnet_privacy.protocol import weighted_eigen_state

    model = NetworkModel(tuple(MultiplicativeUnitary(SIGMA_Z_HALF, k) for k in (1, 2)), weighted_eigen_state([1, 2], [2**-0.5] * 2))
    for eta in (0.0, 0.2, 0.45):
        assert privacy_after_noise(model, dephasing(eta), stage, [0.3, 0.1], [1, 2]).is_private


def test_non_private_probe_stays_non_private_while_informative():
    model = uniform_model(3, product_plus_state(3), SIGMA_Z_HALF)
    for eta in (0.0, 0.1, 0.2, 0.3, 0.4):
        for stage in (BEFORE_SAMPLING, AFTER_SAMPLING):
            assert not privacy_after_noise(model, dephasing(eta), stage, [0.2, 0.4, 0.6], np.full(3, 1 / 3)).is_private


@pytest.mark.parametrize("name,locality", [("dephasing", "per_node"), ("erasure", "per_node"), ("amplitude_damping", "per_node"), ("depolarizing", "global_map")])
def test_ghz_epsilon_vanishes(name, locality):
    theta = [0.2, 0.5, 0.9]
    for eta in ETAS:
        probe = noisy_probe(_ghz_model(3), make_channel(name, eta, locality), BEFORE_SAMPLING, theta)
        g = [generator_derivative(probe.model, k, theta) for k in range(3)]
        eps = max(epsilon_privacy(probe.rho, g[a], g[b]) for a, b in [(0, 1), (0, 2), (1, 2)])
        assert eps <= 1e-10


def test_amplitude_damping_before_sampling_private():
    for eta in ETAS:
        v = privacy_after_noise(_ghz_model(3, 0.6, 0.8), amplitude_damping(eta), BEFORE_SAMPLING, [0.1, 0.2, 0.3], np.full(3, 1 / 3))
        assert v.is_private


def test_local_depolarizing_measured():
    theta = [0.2, 0.5, 0.9]
    curve = []
    for eta in ETAS:
        probe = noisy_probe(_ghz_model(3), depolarizing(eta), BEFORE_SAMPLING, theta)
        g = [generator_derivative(probe.model, k, theta) for k in range(3)]
        curve.append(epsilon_privacy(probe.rho, g[0], g[1]))
    assert curve[0] <= 1e-12
    assert all(np.isfinite(curve)) and min(curve) >= 0


def test_after_sampling_derivatives_pass_through_channel():
    m = _ghz_model(2)
    theta = np.array([0.4, 0.7])
    ch = amplitude_damping(0.3)
    probe = noisy_probe(m, ch, AFTER_SAMPLING, theta)
    h = 1e-5
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        plus = apply_channel_matrix(evolve(m, theta + e).mat, ch, (2, 2))
        minus = apply_channel_matrix(evolve(m, theta - e).mat, ch, (2, 2))
        assert np.max(np.abs(probe.drho[k] - (plus - minus) / (2 * h))) <= 1e-8


def test_noisy_probe_rejects_unknown_stage():
    with pytest.raises(ArgumentError):
        noisy_probe(_ghz_model(2), dephasing(0.1), "during", [0, 0])


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_ad_decomposition_and_coherence(d):
    for alpha, beta in [(2**-0.5, 2**-0.5), (0.6, 0.8j)]:
        for eta in ETAS:
            out = apply_channel(ghz_state(d, alpha, beta), amplitude_damping(eta))
            dec = ad_structure_decompose(out)
            assert dec.residual <= 1e-12
            assert abs(abs(dec.coherence) - abs(alpha * beta) * (1 - eta) ** (d / 2)) <= 1e-10


def test_ad_decomposition_identity_case():
    rho = ghz_state(3)
    dec = ad_structure_decompose(rho)
    assert dec.residual == 0
    assert np.allclose(dec.coherence_part + dec.diagonal_part, rho.mat)


def test_ad_decomposition_example_8x8():
    out = apply_channel_strings(ghz_state(3).mat, amplitude_damping(0.4), 3)
    assert ad_structure_decompose(out, (2, 2, 2)).residual <= 1e-12


def test_structure_predicates_basic():
    a1, a2 = amplitude_damping(0.3).kraus
    for a in (a1, a2, np.kron(a1, a2)):
        flags = matrix_structure_predicates(a)
        assert flags.is_generalized_permutation and flags.is_upper_triangular
    assert matrix_structure_predicates(np.kron(a2, a1)).first_entry_zero
    dense = np.ones((2, 2))
    assert matrix_structure_predicates(dense) == (False, False, False)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.floats(0.01, 0.99), st.data())
def test_random_strings_with_a2_have_zero_corner(n, eta, data):
    ks = amplitude_damping(eta).kraus
    k = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    if 1 not in k:
        k[data.draw(st.integers(0, n - 1))] = 1
    m = ks[k[0]]
    for i in k[1:]:
        m = np.kron(m, ks[i])
    assert matrix_structure_predicates(m).first_entry_zero
