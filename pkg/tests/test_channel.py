import numpy as np
import pytest

from qmetroinfo import channel, qcore
from qmetroinfo.exceptions import (
    DimensionCapError,
    UnsupportedConfigurationError,
    ValidationError,
)

from helpers import expm_series

X = np.array([[0, 1], [1, 0]], dtype=complex)


class TestUnitaryAt:
    def test_zero_parameter_gives_identity(self):
        ch = channel.ParamChannel(qcore.random_hermitian(3, np.random.default_rng(0)))
        np.testing.assert_allclose(channel.unitary_at(ch, 0.0), np.eye(3), atol=1e-12)

    def test_diagonal_exponential(self):
        ch = channel.qubit_phase()
        u = channel.unitary_at(ch, np.pi)
        np.testing.assert_allclose(u, np.diag([1.0, -1.0]), atol=1e-12)

    def test_pauli_x_half_pi_against_series_oracle(self):
        ch = channel.ParamChannel(X)
        u = channel.unitary_at(ch, np.pi / 2)
        np.testing.assert_allclose(u, -1j * X, atol=1e-12)
        np.testing.assert_allclose(u, expm_series(-1j * (np.pi / 2) * X), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_generator_against_series_oracle(self, seed):
        rng = np.random.default_rng(seed)
        h = qcore.random_hermitian(4, rng)
        ch = channel.ParamChannel(h)
        phi = float(rng.uniform(-2, 2))
        np.testing.assert_allclose(
            channel.unitary_at(ch, phi), expm_series(-1j * phi * h), atol=1e-10
        )

    def test_group_law(self):
        rng = np.random.default_rng(2)
        ch = channel.ParamChannel(qcore.random_hermitian(3, rng))
        for _ in range(10):
            a, b = rng.uniform(-3, 3, 2)
            lhs = channel.unitary_at(ch, a) @ channel.unitary_at(ch, b)
            rhs = channel.unitary_at(ch, a + b)
            assert qcore.spectral_norm(lhs - rhs) < 1e-9

    def test_unitarity(self):
        rng = np.random.default_rng(4)
        ch = channel.ParamChannel(qcore.random_hermitian(5, rng))
        u = channel.unitary_at(ch, 1.7)
        assert qcore.spectral_norm(u.conj().T @ u - np.eye(5)) < 1e-10

    def test_commuting_two_parameter_channel(self):
        gens = np.stack([np.diag([0.0, 1.0, 2.0]), np.diag([1.0, 0.0, 1.0])]).astype(complex)
        ch = channel.ParamChannel(gens)
        phi = np.array([0.3, -0.8])
        expected = expm_series(-1j * (phi[0] * gens[0] + phi[1] * gens[1]))
        np.testing.assert_allclose(channel.unitary_at(ch, phi), expected, atol=1e-12)

    def test_commuting_non_diagonal_pair(self):
        rng = np.random.default_rng(9)
        basis = qcore.haar_unitary(3, rng)
        d1 = basis @ np.diag([0.0, 1.0, 3.0]) @ basis.conj().T
        d2 = basis @ np.diag([2.0, -1.0, 3.0]) @ basis.conj().T
        ch = channel.ParamChannel(np.stack([d1, d2]))
        phi = np.array([0.4, 0.9])
        expected = expm_series(-1j * (phi[0] * d1 + phi[1] * d2))
        np.testing.assert_allclose(channel.unitary_at(ch, phi), expected, atol=1e-10)

    def test_rejects_non_commuting_generators(self):
        z = np.diag([1.0, -1.0]).astype(complex)
        with pytest.raises(UnsupportedConfigurationError):
            channel.ParamChannel(np.stack([X, z]))

    def test_rejects_wrong_parameter_count(self):
        ch = channel.qubit_phase()
        with pytest.raises(ValidationError):
            channel.unitary_at(ch, np.array([0.1, 0.2]))


class TestParallelUnitary:
    def test_single_probe_reduces_to_unitary_at(self):
        ch = channel.qubit_phase()
        np.testing.assert_allclose(
            channel.parallel_unitary(ch, 0.6, 1), channel.unitary_at(ch, 0.6), atol=1e-15
        )

    def test_two_probe_diagonal_example(self):
        ch = channel.qubit_phase()
        u = channel.parallel_unitary(ch, np.pi / 2, 2)
        np.testing.assert_allclose(u, np.diag([1, -1j, -1j, -1]), atol=1e-12)

    def test_unitarity_for_random_generator(self):
        rng = np.random.default_rng(6)
        ch = channel.ParamChannel(qcore.random_hermitian(2, rng))
        u = channel.parallel_unitary(ch, 0.9, 3)
        assert qcore.spectral_norm(u.conj().T @ u - np.eye(8)) < 1e-9

    def test_matches_explicit_tensor_power(self):
        rng = np.random.default_rng(8)
        ch = channel.ParamChannel(qcore.random_hermitian(2, rng))
        u1 = channel.unitary_at(ch, 1.1)
        np.testing.assert_allclose(
            channel.parallel_unitary(ch, 1.1, 3),
            np.kron(np.kron(u1, u1), u1),
            atol=1e-12,
        )

    def test_commutes_with_probe_permutations(self):
        rng = np.random.default_rng(10)
        ch = channel.ParamChannel(qcore.random_hermitian(2, rng))
        u = channel.parallel_unitary(ch, 0.7, 3)
        # swap probes 0 and 2 on three qubits
        perm = np.zeros((8, 8))
        for idx in range(8):
            bits = [(idx >> k) & 1 for k in (2, 1, 0)]
            swapped = (bits[0]) | (bits[1] << 1) | (bits[2] << 2)
            perm[swapped, idx] = 1.0
        assert qcore.spectral_norm(perm @ u - u @ perm) < 1e-9

    def test_dimension_cap(self):
        ch = channel.qubit_phase()
        with pytest.raises(DimensionCapError):
            channel.parallel_unitary(ch, 0.1, 13)

    def test_phase_basis_matches_dense(self):
        rng = np.random.default_rng(12)
        ch = channel.ParamChannel(qcore.random_hermitian(3, rng))
        levels, basis = channel.parallel_phase_basis(ch, 2)
        phi = 0.83
        rebuilt = (basis * np.exp(-1j * phi * levels[0])[None, :]) @ basis.conj().T
        np.testing.assert_allclose(rebuilt, channel.parallel_unitary(ch, phi, 2), atol=1e-10)


class TestSpectrumWidth:
    def test_two_level(self):
        assert channel.spectrum_width(np.diag([0.0, 1.0])) == pytest.approx(1.0, abs=1e-12)

    def test_equal_ladder_width(self):
        for d in (2, 3, 5, 8):
            h = channel.equal_ladder(d).generators[0]
            assert channel.spectrum_width(h) == pytest.approx(2 * np.pi * (d - 1), abs=1e-9)

    def test_pauli_x(self):
        assert channel.spectrum_width(X) == pytest.approx(2.0, abs=1e-12)

    def test_invariant_under_identity_shift(self):
        rng = np.random.default_rng(13)
        h = qcore.random_hermitian(4, rng)
        w0 = channel.spectrum_width(h)
        assert channel.spectrum_width(h + 3.7 * np.eye(4)) == pytest.approx(w0, abs=1e-9)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            channel.spectrum_width(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_identity_channel_is_identity():
    ch = channel.identity_channel(3)
    np.testing.assert_allclose(channel.unitary_at(ch, 2.2), np.eye(3), atol=1e-15)
