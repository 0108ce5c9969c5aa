import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tristoch.classical import (
    NoIdentityError,
    NotReducingError,
    apply_m,
    associativity_defect,
    batch_self_apply,
    boundary_decomposition,
    convolve,
    find_identity,
    find_inverse,
    find_reducing_sets,
    fixed_point_iterate,
    identity_index,
    is_associative,
    is_commutative,
    is_m_stochastic,
    perm_average_convolve,
    perm_average_tensor,
    probability_eigenvectors,
    truncate,
    uniform_vector,
    validate,
)
from tristoch.constructions import (
    circulant_tensor,
    cyclic_tensor,
    group_tensor,
    qubit_family,
    random_permutation_tensor,
    random_reducible,
    random_tristochastic,
    relabel,
    t2,
    t3,
    uniform_tensor,
)
from tristoch.numkit import DimensionError, ValidationError

seeds = st.integers(min_value=0, max_value=2**32 - 1)


# ---------------------------------------------------------------- oracles


def loop_convolve(a, p, q):
    n = len(p)
    return np.array([sum(a[i, j, k] * p[j] * q[k] for j in range(n) for k in range(n)) for i in range(n)])


def loop_apply(a, args):
    n = a.shape[0]
    out = np.zeros(n)
    for idx in np.ndindex(*a.shape):
        out[idx[0]] += a[idx] * math.prod(v[i] for v, i in zip(args, idx[1:]))
    return out


def brute_reducing_sets(a, tol=1e-12):
    """Every proper nonempty subset, checked entry by entry."""
    n, m = a.shape[0], a.ndim
    found = []
    for k in range(1, n):
        for subset in itertools.combinations(range(n), k):
            outside = [i for i in range(n) if i not in subset]
            if all(a[(i, *rest)] <= tol for i in subset for rest in itertools.product(outside, repeat=m - 1)):
                found.append(subset)
    return sorted(found)


def triple_products_agree(a, tol=1e-12):
    n = a.shape[0]
    basis = np.eye(n)
    for x, y, z in itertools.product(basis, repeat=3):
        left = loop_convolve(a, loop_convolve(a, x, y), z)
        right = loop_convolve(a, x, loop_convolve(a, y, z))
        if np.max(np.abs(left - right)) > tol:
            return False
    return True


def identity_indices(a):
    """All k with A[i, j, k] = A[i, k, j] = delta_ij."""
    n = a.shape[0]
    return [k for k in range(n) if np.array_equal(a[:, :, k], np.eye(n)) and np.array_equal(a[:, k, :], np.eye(n))]


def simplex(rng, n, size=None):
    return rng.dirichlet(np.ones(n), size=size)


# ---------------------------------------------------------------- validate


class TestValidate:
    def test_t3_is_permutation(self):
        assert validate(t3()).classification == "tristochastic, permutation"

    def test_t3_slices_are_cyclic_powers(self):
        p3 = np.roll(np.eye(3), 1, axis=0)
        t = t3()
        for k in range(3):
            # slice k has its ones at (i, i + k mod 3)
            assert np.array_equal(t[k], np.linalg.matrix_power(p3, k).T)

    def test_uniform(self):
        rep = validate(uniform_tensor(3, 4))
        assert rep.m_stochastic and rep.classification == "4-stochastic"

    def test_diagonal_deltas_not_tristochastic(self):
        a = np.zeros((2, 2, 2))
        a[0, 0, 0] = a[1, 1, 1] = 1.0
        rep = validate(a)
        assert not rep.m_stochastic
        assert "tristochastic" not in rep.classification

    def test_matrix_is_bistochastic(self):
        assert validate(np.full((3, 3), 1 / 3)).classification == "bistochastic"

    def test_single_axis(self):
        a = np.zeros((2, 2, 2))
        a[0] = 1.0
        rep = validate(a)
        assert rep.stochastic_axes == (0,)
        assert rep.classification == "stochastic along axes 1"

    def test_negative(self):
        a = uniform_tensor(2) + np.array([[[0.6, 0], [0, 0]], [[-0.6, 0], [0, 0]]])
        assert not validate(a).nonnegative


# ---------------------------------------------------------------- products


class TestConvolve:
    def test_delta_inputs_select_slice(self):
        e1 = np.array([1.0, 0.0])
        assert np.array_equal(convolve(t2(), e1, e1), e1)

    @given(seeds)
    @settings(max_examples=30, deadline=None)
    def test_second_delta_swaps(self, seed):
        q = simplex(np.random.default_rng(seed), 2)
        e2 = np.array([0.0, 1.0])
        assert np.allclose(convolve(t2(), e2, q), q[::-1])

    @given(seeds, st.integers(min_value=2, max_value=5))
    @settings(max_examples=30, deadline=None)
    def test_matches_loops_and_stays_in_simplex(self, seed, n):
        rng = np.random.default_rng(seed)
        a = random_tristochastic(n, rng)
        p, q = simplex(rng, n), simplex(rng, n)
        out = convolve(a, p, q)
        assert np.allclose(out, loop_convolve(a, p, q), atol=1e-13)
        assert out.min() >= -1e-15 and abs(out.sum() - 1) <= 1e-12

    @given(seeds, st.integers(min_value=2, max_value=5), st.integers(min_value=3, max_value=5))
    @settings(max_examples=30, deadline=None)
    def test_uniform_absorbs_in_every_slot(self, seed, n, m):
        rng = np.random.default_rng(seed)
        a = random_tristochastic(n, rng, m=m)
        e = uniform_vector(n)
        for slot in range(m - 1):
            args = [simplex(rng, n) for _ in range(m - 1)]
            args[slot] = e
            assert np.max(np.abs(apply_m(a, args) - e)) <= 1e-10

    def test_reduces_to_matrix_action(self):
        rng = np.random.default_rng(3)
        a = random_tristochastic(4, rng)
        p = simplex(rng, 4)
        for k in range(4):
            assert np.allclose(convolve(a, p, np.eye(4)[k]), a[:, :, k] @ p)

    def test_apply_m_matches_loops_order_four(self):
        rng = np.random.default_rng(5)
        a = random_tristochastic(3, rng, m=4)
        args = [simplex(rng, 3) for _ in range(3)]
        assert np.allclose(apply_m(a, args), loop_apply(a, args), atol=1e-13)

    def test_uniform_order_four(self):
        rng = np.random.default_rng(6)
        out = apply_m(uniform_tensor(3, 4), [simplex(rng, 3) for _ in range(3)])
        assert np.allclose(out, 1 / 3)

    def test_apply_m_equals_convolve(self):
        rng = np.random.default_rng(8)
        a = random_tristochastic(3, rng)
        p, q = simplex(rng, 3), simplex(rng, 3)
        assert np.array_equal(apply_m(a, [p, q]), convolve(a, p, q))

    def test_wrong_arity(self):
        with pytest.raises(DimensionError):
            apply_m(t2(), [np.array([1.0, 0.0])])

    def test_dimension_mismatch(self):
        with pytest.raises((DimensionError, ValidationError)):
            convolve(t2(), np.ones(3) / 3, np.ones(2) / 2)


class TestAlgebra:
    def test_circulant_commutative_and_associative(self):
        a = circulant_tensor([0.5, 0.3, 0.2, 0.0])
        assert is_commutative(a) and is_associative(a)
        assert triple_products_agree(a)

    def test_t2_commutative(self):
        assert is_commutative(t2())

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_cyclic_associative_matches_oracle(self, n):
        a = cyclic_tensor(n)
        assert triple_products_agree(a)
        assert is_associative(a)

    def test_t3_not_associative_nor_commutative(self):
        assert not triple_products_agree(t3())
        assert not is_associative(t3())
        assert not is_commutative(t3())

    def test_random_not_associative(self):
        rng = np.random.default_rng(11)
        a = random_tristochastic(4, rng)
        assert not is_associative(a)
        assert not triple_products_agree(a)

    @given(seeds, st.integers(min_value=2, max_value=4))
    @settings(max_examples=25, deadline=None)
    def test_flags_agree_with_random_vectors(self, seed, n):
        rng = np.random.default_rng(seed)
        a = random_tristochastic(n, rng, components=2)
        pairs = [(simplex(rng, n), simplex(rng, n)) for _ in range(100)]
        sym = max(np.abs(convolve(a, p, q) - convolve(a, q, p)).sum() for p, q in pairs)
        assert is_commutative(a) == (sym <= 1e-10)
        trip = max(
            np.abs(convolve(a, convolve(a, p, q), r) - convolve(a, p, convolve(a, q, r))).sum()
            for (p, q), r in zip(pairs, (simplex(rng, n) for _ in range(100)))
        )
        assert is_associative(a) == (trip <= 1e-10)

    def test_associativity_defect_zero_for_groups(self):
        assert associativity_defect(group_tensor(5)) == 0.0


class TestPermutationAverage:
    def test_uniform_absorbs(self):
        rng = np.random.default_rng(2)
        for n in range(2, 6):
            r, q = simplex(rng, n), simplex(rng, n)
            e = uniform_vector(n)
            assert np.allclose(perm_average_convolve(r, e, q), e)
            assert np.allclose(perm_average_convolve(r, q, e), e)

    def test_two_dimensional_by_hand(self):
        # identity permutation contributes (p.r) q = q, the swap contributes 0
        out = perm_average_convolve([1, 0], [1, 0], [0, 1])
        assert np.allclose(out, [0, 1])

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_tensor_form_matches(self, n):
        rng = np.random.default_rng(n)
        r, p, q = simplex(rng, n), simplex(rng, n), simplex(rng, n)
        a = perm_average_tensor(r)
        assert is_m_stochastic(a)
        assert np.allclose(convolve(a, p, q), perm_average_convolve(r, p, q))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_commutative(self, n):
        rng = np.random.default_rng(10 + n)
        r = simplex(rng, n)
        a = perm_average_tensor(r)
        assert is_commutative(a)
        for _ in range(20):
            p, q = simplex(rng, n), simplex(rng, n)
            assert np.allclose(perm_average_convolve(r, p, q), perm_average_convolve(r, q, p))

    def test_associative_only_for_two(self):
        rng = np.random.default_rng(4)
        assert is_associative(perm_average_tensor(simplex(rng, 2)))
        a = perm_average_tensor(simplex(rng, 3))
        assert not is_associative(a) and not triple_products_agree(a)

    def test_guard(self):
        with pytest.raises(ValidationError):
            perm_average_convolve(np.ones(8) / 8, np.ones(8) / 8, np.ones(8) / 8)


# ---------------------------------------------------------------- reducibility


class TestReducing:
    def test_t2(self):
        assert find_reducing_sets(t2()) == [(1,)]

    def test_uniform(self):
        assert find_reducing_sets(uniform_tensor(4)) == []

    def test_group_tensor_subgroups(self):
        # complements of the subgroups {0} and {0, 2} of Z_4
        assert find_reducing_sets(group_tensor(4)) == [(1, 2, 3), (1, 3)]

    @given(seeds, st.integers(min_value=2, max_value=7), st.sampled_from([3, 4]))
    @settings(max_examples=40, deadline=None)
    def test_search_matches_brute_force(self, seed, n, m):
        rng = np.random.default_rng(seed)
        a, red = random_reducible(n, rng, m=m)
        found = find_reducing_sets(a)
        assert found == brute_reducing_sets(a)
        assert red in found
        assert all(len(s) >= n / 2 for s in found)
        assert find_reducing_sets(a, prune=False) == found

    def test_requires_m_stochastic(self):
        a = np.zeros((2, 2, 2))
        a[0] = 1.0
        with pytest.raises(ValidationError):
            find_reducing_sets(a)

    def test_truncate_t2(self):
        out = truncate(t2(), [1])
        assert out.shape == (1, 1, 1) and out[0, 0, 0] == 1.0

    def test_truncate_to_subgroup(self):
        # removing the odd residues leaves the addition table of Z_2
        assert np.array_equal(truncate(group_tensor(4), [1, 3]), group_tensor(2))

    def test_truncate_empty_is_identity(self):
        a = random_tristochastic(3, np.random.default_rng(1))
        assert np.array_equal(truncate(a, []), a)

    def test_truncate_rejects_with_deviation(self):
        with pytest.raises(NotReducingError) as info:
            truncate(t2(), [0])
        assert info.value.deviation == 1.0

    @given(seeds, st.integers(min_value=2, max_value=8))
    @settings(max_examples=30, deadline=None)
    def test_truncations_stay_m_stochastic(self, seed, n):
        a, _ = random_reducible(n, np.random.default_rng(seed))
        for s in find_reducing_sets(a):
            assert is_m_stochastic(truncate(a, s), 1e-10)


# ---------------------------------------------------------------- eigenvectors and fixed points


class TestEigenvectors:
    def test_t2(self):
        vecs = probability_eigenvectors(t2())
        assert [tuple(v.vector) for v in vecs] == [(0.5, 0.5), (1.0, 0.0)]
        assert all(v.eigenvalue == 1.0 for v in vecs)

    def test_irreducible(self):
        vecs = probability_eigenvectors(uniform_tensor(4))
        assert len(vecs) == 1 and np.allclose(vecs[0].vector, 0.25)

    def test_block_structure(self):
        for v in probability_eigenvectors(group_tensor(6)):
            k = len(v.reducing_set)
            support = np.flatnonzero(v.vector)
            assert len(support) == 6 - k
            assert np.allclose(v.vector[support], 1 / (6 - k))

    @given(seeds, st.integers(min_value=2, max_value=6))
    @settings(max_examples=30, deadline=None)
    def test_all_are_fixed_points(self, seed, n):
        a, _ = random_reducible(n, np.random.default_rng(seed))
        for v in probability_eigenvectors(a):
            assert np.abs(apply_m(a, [v.vector, v.vector]) - v.vector).sum() <= 1e-10

    def test_matrix_unsupported(self):
        with pytest.raises(ValidationError):
            probability_eigenvectors(np.eye(3))


class TestFixedPoint:
    def test_long_runs_stay_normalized(self):
        rng = np.random.default_rng(5)
        a = random_tristochastic(4, rng, m=4)
        res = fixed_point_iterate(a, rng.dirichlet(np.ones(4)), max_iter=300, tol=-1.0)
        assert res.iterations == 300
        assert np.all(np.isfinite(res.state)) and abs(res.state.sum() - 1) <= 1e-14
        assert np.max(np.abs(res.state - 0.25)) <= 1e-14

    def test_uniform_start(self):
        res = fixed_point_iterate(t3(), uniform_vector(3))
        assert res.converged and res.iterations == 1

    def test_interior_to_uniform(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            res = fixed_point_iterate(t3(), simplex(rng, 3), max_iter=60, tol=1e-12)
            assert res.iterations <= 60
            assert np.max(np.abs(res.state - 1 / 3)) <= 1e-8

    def test_boundary_eigenvector_stays(self):
        res = fixed_point_iterate(t2(), [1.0, 0.0])
        assert np.array_equal(res.state, [1.0, 0.0])

    def test_rejects_non_simplex(self):
        with pytest.raises(ValidationError):
            fixed_point_iterate(t2(), [0.7, 0.7])

    @given(seeds, st.integers(min_value=2, max_value=5), st.sampled_from([3, 4]))
    @settings(max_examples=30, deadline=None)
    def test_decay_law(self, seed, n, m):
        rng = np.random.default_rng(seed)
        a = random_tristochastic(n, rng, m=m)
        q0 = simplex(rng, n)
        alpha, p0 = boundary_decomposition(q0)
        assert np.allclose(alpha * uniform_vector(n) + (1 - alpha) * p0, q0)
        assert p0.min() <= 1e-12
        res = fixed_point_iterate(a, q0, alpha=alpha, p0=p0)
        assert res.law_deviation() <= 1e-12

    def test_batch_matches_single(self):
        rng = np.random.default_rng(9)
        for m in (3, 4):
            a = random_tristochastic(4, rng, m=m)
            qs = simplex(rng, 4, size=7)
            single = np.array([apply_m(a, [q] * (m - 1)) for q in qs])
            assert np.allclose(batch_self_apply(a, qs), single)


# ---------------------------------------------------------------- identity and inverse


class TestIdentity:
    @pytest.mark.parametrize("n", range(2, 7))
    def test_cyclic_has_exactly_one(self, n):
        a = cyclic_tensor(n)
        assert identity_indices(a) == [0]
        assert identity_index(a) == 0

    def test_t2_identity_is_first_basis_vector(self):
        assert np.array_equal(find_identity(t2()), [1.0, 0.0])

    def test_uniform_has_none(self):
        assert find_identity(uniform_tensor(3)) is None

    def test_t3_has_none(self):
        assert identity_indices(t3()) == [] and find_identity(t3()) is None

    def test_identity_acts_and_implies_reducible(self):
        rng = np.random.default_rng(12)
        for n in range(2, 6):
            a = random_permutation_tensor(n, rng)
            v = find_identity(a)
            if v is None:
                continue
            for _ in range(100):
                p = simplex(rng, n)
                assert np.abs(convolve(a, v, p) - p).sum() <= 1e-10
                assert np.abs(convolve(a, p, v) - p).sum() <= 1e-10
            assert find_reducing_sets(a)

    def test_relabelled_group_identity_moves(self):
        g = [2, 0, 1]
        a = relabel(group_tensor(3), [g, g, g])
        assert identity_index(a) == 2

    def test_t2_inverse_table(self):
        e1, e2 = np.eye(2)
        assert np.array_equal(find_inverse(t2(), e1), e1)
        assert np.array_equal(find_inverse(t2(), e2), e2)

    def test_cyclic_inverses_are_negatives(self):
        n = 5
        for k in range(n):
            q = find_inverse(cyclic_tensor(n), np.eye(n)[k])
            assert int(np.argmax(q)) == (-k) % n

    def test_interior_has_no_inverse(self):
        assert find_inverse(t2(), [0.5, 0.5]) is None

    def test_no_identity_is_an_error(self):
        with pytest.raises(NoIdentityError):
            find_inverse(uniform_tensor(2), [1.0, 0.0])


class TestConstructions:
    def test_qubit_family_endpoints(self):
        assert np.array_equal(qubit_family(1.0), t2())
        assert is_m_stochastic(qubit_family(0.3))

    @given(seeds, st.integers(min_value=2, max_value=6), st.sampled_from([3, 4]))
    @settings(max_examples=30, deadline=None)
    def test_random_generators_are_stochastic(self, seed, n, m):
        rng = np.random.default_rng(seed)
        assert validate(random_permutation_tensor(n, rng, m)).is_permutation
        assert is_m_stochastic(random_tristochastic(n, rng, m))
        a, red = random_reducible(n, rng, m)
        assert is_m_stochastic(a) and len(red) >= n / 2

    def test_relabel_inverse(self):
        rng = np.random.default_rng(0)
        a = random_tristochastic(4, rng)
        perms = [rng.permutation(4) for _ in range(3)]
        back = [np.argsort(p) for p in perms]
        assert np.array_equal(relabel(relabel(a, perms), back), a)
