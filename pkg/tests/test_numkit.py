import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tristoch.numkit import (
    DimensionError,
    ValidationError,
    haar_state,
    herm_eig,
    is_psd,
    is_unitary,
    kron,
    orthogonal_complement,
    partial_trace,
    projector,
    random_density,
    random_isometry,
    random_unitary,
    shannon_entropy,
    von_neumann_entropy,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def brute_partial_trace(m, dims, keep):
    """Sum over matching traced indices by explicit loops."""
    dims = list(dims)
    keep = sorted(keep)
    traced = [k for k in range(len(dims)) if k not in keep]
    kept_dims = [dims[k] for k in keep]
    side = math.prod(kept_dims)
    out = np.zeros((side, side), dtype=complex)
    for row in np.ndindex(*dims):
        for col in np.ndindex(*dims):
            if any(row[k] != col[k] for k in traced):
                continue
            r = np.ravel_multi_index([row[k] for k in keep], kept_dims) if keep else 0
            c = np.ravel_multi_index([col[k] for k in keep], kept_dims) if keep else 0
            out[r, c] += m[np.ravel_multi_index(row, dims), np.ravel_multi_index(col, dims)]
    return out


def random_matrix(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


class TestKron:
    def test_identities(self):
        assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_delta_selection(self):
        out = kron(np.diag([1, 0]), np.diag([0, 1]))
        assert np.array_equal(out, np.diag([0, 1, 0, 0]))

    def test_flip_on_basis_product(self):
        p2 = np.array([[0, 1], [1, 0]])
        e1 = np.array([1, 0])
        v = kron(p2, p2) @ kron(e1, e1)
        # |1>|1> sits at flat index 1*2 + 1 = 3 (the fourth entry)
        assert np.array_equal(v, np.array([0, 0, 0, 1]))

    @given(seeds)
    @settings(max_examples=25, deadline=None)
    def test_associative(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_matrix(rng, d) for d in (2, 3, 2))
        assert np.max(np.abs(kron(kron(a, b), c) - kron(a, kron(b, c)))) <= 1e-13


class TestPartialTrace:
    def test_product_state(self):
        rng = np.random.default_rng(0)
        rho, sigma = random_density(3, rng), random_density(3, rng)
        out = partial_trace(kron(rho, sigma), [3, 3], keep=[1])
        assert np.allclose(out, sigma * np.trace(rho))

    def test_identity(self):
        assert np.allclose(partial_trace(np.eye(4), [2, 2], keep=[1]), 2 * np.eye(2))

    def test_maximally_entangled(self):
        phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        out = partial_trace(np.outer(phi, phi), [2, 2], keep=[1])
        assert np.allclose(out, np.eye(2) / 2)

    @given(seeds, st.sampled_from([[2, 2], [2, 3], [3, 2, 2], [2, 2, 2]]))
    @settings(max_examples=30, deadline=None)
    def test_matches_loop_oracle(self, seed, dims):
        rng = np.random.default_rng(seed)
        side = math.prod(dims)
        m = random_matrix(rng, side)
        for r in range(len(dims) + 1):
            for keep in itertools.combinations(range(len(dims)), r):
                ref = brute_partial_trace(m, dims, keep)
                assert np.allclose(partial_trace(m, dims, keep), ref, atol=1e-12)

    @given(seeds)
    @settings(max_examples=20, deadline=None)
    def test_trace_everything_is_scalar_trace(self, seed):
        rng = np.random.default_rng(seed)
        m = random_matrix(rng, 12)
        out = partial_trace(m, [2, 3, 2], keep=[])
        assert abs(out.reshape(-1)[0] - np.trace(m)) <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            partial_trace(np.eye(4), [2, 3], keep=[0])


class TestHermEig:
    def test_identity(self):
        w, v = herm_eig(np.eye(3))
        assert np.allclose(w, 1)
        assert np.allclose(v.conj().T @ v, np.eye(3))

    def test_diagonal_descending(self):
        w, v = herm_eig(np.diag([1.0, 3.0]))
        assert np.allclose(w, [3, 1])
        assert np.allclose(np.abs(v), [[0, 1], [1, 0]])

    def test_pauli_x(self):
        w, v = herm_eig(np.array([[0, 1], [1, 0]]))
        assert np.allclose(w, [1, -1])
        had = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        # columns agree with the Hadamard columns up to a phase
        assert np.allclose(np.abs(had.conj().T @ v), np.eye(2))

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            herm_eig(np.array([[0, 1], [0, 0]]))

    @given(seeds, st.integers(min_value=1, max_value=64))
    @settings(max_examples=25, deadline=None)
    def test_reconstruction(self, seed, n):
        rng = np.random.default_rng(seed)
        g = random_matrix(rng, n)
        h = g + g.conj().T
        w, v = herm_eig(h)
        assert np.all(np.diff(w) <= 1e-12)
        assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) <= 1e-10


class TestEntropy:
    def test_maximally_mixed(self):
        for n in range(1, 7):
            assert abs(von_neumann_entropy(np.eye(n) / n) - math.log(n)) <= 1e-12

    def test_pure(self):
        rng = np.random.default_rng(1)
        psi = haar_state(4, rng)
        assert abs(von_neumann_entropy(np.outer(psi, psi.conj()))) <= 1e-10

    def test_two_equal_weights_in_large_space(self):
        n = 3
        d = np.zeros(n * n)
        d[:2] = 0.5
        assert abs(von_neumann_entropy(np.diag(d)) - math.log(2)) <= 1e-12

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValidationError):
            von_neumann_entropy(np.diag([1.2, -0.2]))

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValidationError):
            von_neumann_entropy(np.diag([0.5, 0.2]))

    def test_shannon_zero_convention(self):
        assert shannon_entropy(np.array([1.0, 0.0, 0.0])) == 0.0
        assert abs(shannon_entropy(np.full(4, 0.25)) - math.log(4)) <= 1e-12


class TestRandomObjects:
    @given(seeds, st.integers(min_value=1, max_value=8))
    @settings(max_examples=20, deadline=None)
    def test_unitary_and_isometry(self, seed, n):
        rng = np.random.default_rng(seed)
        assert is_unitary(random_unitary(n, rng))
        v = random_isometry(n + 2, n, rng)
        assert np.allclose(v.conj().T @ v, np.eye(n))

    @given(seeds, st.integers(min_value=1, max_value=6))
    @settings(max_examples=20, deadline=None)
    def test_density(self, seed, n):
        rng = np.random.default_rng(seed)
        rho = random_density(n, rng)
        assert is_psd(rho)
        assert abs(np.trace(rho) - 1) <= 1e-12

    def test_seeded_reproducibility(self):
        a = random_unitary(4, np.random.default_rng(7))
        b = random_unitary(4, np.random.default_rng(7))
        assert np.array_equal(a, b)

    def test_projector_and_complement(self):
        v = np.array([[1.0], [1.0]]) / math.sqrt(2)
        comp = orthogonal_complement(v)
        assert comp.shape == (2, 1)
        assert np.allclose(projector(v) + projector(comp), np.eye(2))
