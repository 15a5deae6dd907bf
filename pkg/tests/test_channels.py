import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chanapprox import channels as ch
from chanapprox import linops as L

seeds = st.integers(0, 2**32 - 1)


def kraus_sum_oracle(kraus, rho):
    out = np.zeros((kraus.shape[1], kraus.shape[1]), dtype=complex)
    for V in kraus:
        out += V @ rho @ V.conj().T
    return out


def test_apply_examples(rng):
    rho = L.random_state(3, rng)
    assert np.allclose(ch.apply(ch.identity(3), rho), rho, atol=1e-15)
    assert np.allclose(ch.apply(ch.completely_depolarizing(2), L.random_state(2, rng)), np.eye(2) / 2, atol=1e-15)
    phi = ch.random_channel(3, 4, 3, rng)
    assert np.max(np.abs(ch.apply(phi, rho) - kraus_sum_oracle(phi.kraus, rho))) <= 1e-12
    with pytest.raises(ValueError):
        ch.apply(phi, np.eye(2) / 2)


def test_validate_examples():
    assert ch.validate(ch.QuantumOperation(np.eye(2)[None])) is ch.Validity.CHANNEL
    assert ch.validate(ch.QuantumOperation(0.5 * np.eye(2)[None])) is ch.Validity.STRICT
    assert ch.validate(ch.QuantumOperation(np.stack([np.eye(2), np.eye(2)]))) is ch.Validity.INVALID
    assert ch.Validity.STRICT.value == "strict-operation"


def test_truncate_output_examples(rng):
    phi = ch.random_channel(2, 3, 2, rng)
    rho = L.random_state(2, rng)
    assert ch.action_distance(ch.truncate_output(phi, np.eye(3)), phi) <= 1e-14
    zero = ch.truncate_output(phi, np.zeros((3, 3)))
    assert np.allclose(ch.apply(zero, rho), 0)
    P = ch.basis_projector(3, 2)
    tr = np.trace(ch.apply(ch.truncate_output(phi, P), rho)).real
    assert tr == pytest.approx(np.trace(P @ ch.apply(phi, rho)).real, abs=1e-14)
    assert ch.validate(ch.truncate_output(phi, P)) is ch.Validity.STRICT
    with pytest.raises(ValueError):
        ch.truncate_output(phi, 0.5 * np.eye(3))


def test_stinespring_examples(rng):
    dil = ch.stinespring(ch.identity(2))
    assert dil.dim_env == 1 and np.allclose(dil.V, np.eye(2))
    phi = ch.random_channel(3, 2, 2, rng)
    dil = ch.stinespring(phi)
    assert dil.dim_env == 2
    assert np.allclose(dil.V.conj().T @ dil.V, np.eye(3), atol=1e-12)
    rho = L.random_state(3, rng)
    out = L.partial_trace(dil.apply_full(rho), (2, 2), "first")
    assert np.max(np.abs(out - ch.apply(phi, rho))) <= 1e-10
    with pytest.raises(ValueError):
        ch.stinespring(ch.QuantumOperation(np.stack([np.eye(2), np.eye(2)])))


def test_complementary_examples(rng):
    comp = ch.complementary(ch.identity(2))
    assert comp.dim_out == 1
    rho = L.random_state(2, rng)
    assert np.allclose(ch.apply(comp, rho), [[1.0]])
    phi = ch.random_channel(2, 3, 3, rng)
    double = ch.complementary(ch.complementary(phi))
    for _ in range(5):
        psi = L.random_pure_state(2, rng)
        s = L.entropy_S(ch.apply(phi, psi))
        assert L.entropy_S(ch.apply(ch.complementary(phi), psi)) == pytest.approx(s, abs=1e-9)
        assert L.entropy_S(ch.apply(double, psi)) == pytest.approx(s, abs=1e-9)


def test_tensor_op_examples(rng):
    assert ch.action_distance(ch.tensor_op(ch.identity(2), ch.identity(3)), ch.identity(6)) <= 1e-15
    phi, psi = ch.random_channel(2, 3, 2, rng), ch.random_channel(3, 2, 2, rng)
    rho, sigma = L.random_state(2, rng), L.random_state(3, rng)
    lhs = ch.apply(ch.tensor_op(phi, psi), np.kron(rho, sigma))
    assert np.max(np.abs(lhs - np.kron(ch.apply(phi, rho), ch.apply(psi, sigma)))) <= 1e-10
    assert ch.is_channel(ch.tensor_op(phi, psi))


def test_compose_examples(rng):
    phi = ch.random_channel(2, 3, 2, rng)
    assert ch.action_distance(ch.compose(ch.identity(3), phi), phi) <= 1e-14
    pi = ch.truncation_channel(3, 2)
    rho = L.random_state(2, rng)
    direct = ch.apply(ch.compose(pi, phi), rho)
    assert np.max(np.abs(direct - ch.apply(pi, ch.apply(phi, rho)))) <= 1e-12
    a, b = ch.random_operation(2, 2, 2, rng), ch.random_operation(2, 2, 2, rng)
    assert ch.validate(ch.compose(a, b)) is ch.Validity.STRICT
    with pytest.raises(ValueError):
        ch.compose(phi, phi)


def test_strong_distance_examples(rng):
    phi = ch.random_channel(3, 3, 2, rng)
    sample = ch.default_sample(3)
    assert ch.strong_distance(phi, phi, sample) == 0.0
    assert ch.strong_distance(ch.identity(3), ch.zero_operation(3), sample) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ch.strong_distance(phi, phi, [])


def test_strong_distance_truncation_commuting_outputs(rng):
    # with outputs diagonal in the truncation basis, |X - P X P|_1 = Tr (I - P) X decreases with P
    dephase = ch.QuantumOperation(np.stack([np.outer(L.ket(i, 3), L.ket(i, 3)) for i in range(3)]))
    phi = ch.compose(dephase, ch.random_channel(3, 3, 2, rng))
    sample = ch.default_sample(3)
    dists = [ch.strong_distance(ch.truncate_output(phi, ch.basis_projector(3, n)), phi, sample) for n in range(4)]
    assert all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    assert dists[-1] == 0.0


def test_strong_distance_truncation_not_monotone_in_general():
    # |+><+| compressed to |0><0| is farther from the original than the zero operator
    plus = ch.QuantumOperation(np.outer([1, 1], [1, 0])[None] / np.sqrt(2))
    rho = np.diag([1.0, 0.0])
    d0 = ch.strong_distance(ch.truncate_output(plus, ch.basis_projector(2, 0)), plus, [rho])
    d1 = ch.strong_distance(ch.truncate_output(plus, ch.basis_projector(2, 1)), plus, [rho])
    assert d1 > d0 + 0.1


def test_factories_are_channels():
    for phi in (ch.depolarizing(0.3), ch.amplitude_damping(0.4), ch.dephasing(0.2), ch.completely_depolarizing(3),
                ch.truncation_channel(4, 2), ch.partial_trace_channel((2, 3)), ch.partial_trace_channel((2, 3), "second")):
        assert ch.is_channel(phi)


def test_truncation_channel_action(rng):
    rho = L.random_state(4, rng)
    P = ch.basis_projector(4, 2)
    expected = P @ rho @ P + (1 - np.trace(P @ rho).real) * P / 2
    assert np.allclose(ch.apply(ch.truncation_channel(4, 2), rho), expected, atol=1e-14)


def test_partial_trace_channel(rng):
    C = L.random_state(6, rng)
    assert np.allclose(ch.apply(ch.partial_trace_channel((2, 3)), C), L.partial_trace(C, (2, 3), "first"))
    assert np.allclose(ch.apply(ch.partial_trace_channel((2, 3), "second"), C), L.partial_trace(C, (2, 3), "second"))


def test_json_roundtrip(rng, tmp_path):
    phi = ch.random_operation(2, 3, 2, rng)
    back = ch.QuantumOperation.from_json(json.loads(json.dumps(phi.to_json())))
    assert ch.action_distance(back, phi) <= 1e-15
    path = tmp_path / "op.json"
    path.write_text(json.dumps(phi.to_json()))
    assert ch.action_distance(ch.operation_from_spec(str(path)), phi) <= 1e-15


def test_factory_specs():
    assert ch.is_channel(ch.operation_from_spec("depolarizing:0.2"))
    assert ch.operation_from_spec("random:3:2", dim=3).dim_in == 3
    assert ch.action_distance(ch.operation_from_spec("random:3:2", 3), ch.operation_from_spec("random:3:2", 3)) == 0
    with pytest.raises(OSError):
        ch.operation_from_spec("no-such-channel")


# -- properties -------------------------------------------------------------

@given(seeds, st.integers(2, 5), st.integers(2, 5))
def test_trace_behaviour(seed, din, dout):
    rng = np.random.default_rng(seed)
    rho = L.random_state(din, rng)
    k = -(-din // dout) + 1
    chan, op = ch.random_channel(din, dout, k, rng), ch.random_operation(din, dout, k, rng)
    assert abs(np.trace(ch.apply(chan, rho)).real - 1) <= 1e-9
    assert np.trace(ch.apply(op, rho)).real <= 1 + 1e-10


@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_truncation_operator_order_commuting(seed, din, dout):
    # P Phi(rho) P <= Phi(rho) whenever P commutes with the output
    rng = np.random.default_rng(seed)
    phi = ch.random_channel(din, dout, -(-din // dout) + 1, rng)
    rho = L.random_state(din, rng)
    out = ch.apply(phi, rho)
    _, U = np.linalg.eigh(out)
    idx = rng.permutation(dout)[: int(rng.integers(0, dout + 1))]
    P = U[:, idx] @ U[:, idx].conj().T
    gap = out - ch.apply(ch.truncate_output(phi, P), rho)
    assert np.linalg.eigvalsh(gap)[0] >= -1e-9
    assert np.trace(gap).real >= -1e-12


def test_truncation_operator_order_fails_without_commuting():
    X = np.full((2, 2), 0.5)
    P = np.diag([1.0, 0.0])
    assert np.linalg.eigvalsh(X - P @ X @ P)[0] < -0.1


@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_complementary_pure_entropies(seed, din, dout):
    rng = np.random.default_rng(seed)
    phi = ch.random_channel(din, dout, -(-din // dout) + 1, rng)
    psi = L.random_pure_state(din, rng)
    assert L.entropy_S(ch.apply(ch.complementary(phi), psi)) == pytest.approx(L.entropy_S(ch.apply(phi, psi)), abs=1e-9)


@given(seeds)
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = ch.random_operation(2, 3, 2, rng), ch.random_operation(3, 2, 2, rng), ch.random_operation(2, 3, 2, rng)
    assert ch.action_distance(ch.compose(ch.compose(a, b), c), ch.compose(a, ch.compose(b, c))) <= 1e-12
