import math

import numpy as np
import pytest
import scipy.linalg

from thermoctrl.core import (
    GibbsVector,
    ProbVector,
    SquareMatrix,
    Superoperator,
    ad,
    adjoint_action,
    complex_matrix_from_json,
    complex_matrix_to_json,
    expm,
    gibbs_vector,
    is_column_stochastic,
    is_d_stochastic,
    partial_trace_wrt,
    perm_matrix,
    stack,
    unstack,
)
from thermoctrl.errors import InvalidInputError


class TestProbVector:
    def test_clamps_small_negativity(self):
        p = ProbVector(np.array([1.0 + 5e-10, -5e-10, 0.0]))
        assert p.entries.min() == 0.0
        assert abs(p.entries.sum() - 1.0) < 1e-15

    def test_rejects_large_negativity(self):
        with pytest.raises(InvalidInputError):
            ProbVector(np.array([1.1, -0.1, 0.0]))

    def test_rejects_bad_total(self):
        with pytest.raises(InvalidInputError):
            ProbVector(np.array([0.5, 0.4]))

    def test_immutable(self):
        p = ProbVector.uniform(3)
        with pytest.raises(ValueError):
            p.entries[0] = 2.0

    def test_json_roundtrip(self):
        p = ProbVector(np.array([0.2, 0.5, 0.3]))
        assert np.allclose(ProbVector.from_json(p.to_json()).entries, p.entries)


class TestGibbsVector:
    def test_boltzmann_weights(self):
        de = 0.7
        t = 1.3
        a = math.exp(-de / t)
        d = gibbs_vector(np.array([-1.0, 0.0, 1.0]) * de, t)
        expect = np.array([1.0, a, a * a])
        assert np.allclose(d.entries, expect / expect.sum(), atol=1e-14)

    def test_infinite_temperature_uniform(self):
        d = gibbs_vector([3.0, -1.0, 7.0, 0.0], math.inf)
        assert np.allclose(d.entries, 0.25)

    def test_figure_value_theta_pi_over_5(self):
        # a = sec^2(pi/5) - 1; reported rounded weights (0.55, 0.29, 0.16)
        a = 1.0 / math.cos(math.pi / 5) ** 2 - 1.0
        d = GibbsVector.from_ratio(a, 3)
        assert np.max(np.abs(d.entries - np.array([0.55, 0.29, 0.16]))) < 0.01

    def test_nonfinite_energy_rejected(self):
        with pytest.raises(InvalidInputError):
            gibbs_vector([0.0, np.inf], 1.0)
        with pytest.raises(InvalidInputError):
            gibbs_vector([0.0, 1.0], -2.0)

    def test_ratios_match_entries(self):
        d = gibbs_vector([0.0, 0.4, 1.1], 0.9)
        assert np.allclose(d.ratios(), d.entries[1:] / d.entries[:-1], rtol=1e-12)


class TestStochasticPredicates:
    def test_column_stochastic(self, rng):
        a = rng.uniform(0.0, 1.0, (4, 4))
        a /= a.sum(axis=0)
        assert is_column_stochastic(a)
        assert not is_column_stochastic(a - 0.01)

    def test_simplex_invariance(self, rng):
        # column-stochastic maps send the simplex into itself
        for _ in range(50):
            n = rng.integers(2, 6)
            a = rng.uniform(0.0, 1.0, (n, n))
            a /= a.sum(axis=0)
            x = ProbVector(rng.dirichlet(np.ones(n)))
            ProbVector(a @ x.entries)  # must not raise

    def test_d_stochastic(self):
        d = np.array([0.5, 0.3, 0.2])
        a = np.outer(d, np.ones(3))
        assert is_d_stochastic(a, d)

    def test_perm_matrix(self):
        p = perm_matrix([2, 0, 1])
        x = np.array([10.0, 20.0, 30.0])
        assert np.array_equal(p @ x, x[[2, 0, 1]])

    def test_square_matrix_kinds(self):
        with pytest.raises(InvalidInputError):
            SquareMatrix(np.array([[0.5, 0.0], [0.0, 1.0]]), "column-stochastic")
        SquareMatrix(np.eye(3), "permutation")
        SquareMatrix.d_stochastic(np.outer([0.7, 0.3], [1, 1]), [0.7, 0.3])


class TestStacking:
    def test_roundtrip_exact(self, rng):
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        assert np.array_equal(unstack(stack(x), 4), x)

    def test_column_convention(self):
        x = np.array([[1, 3], [2, 4]])
        assert np.array_equal(stack(x), [1, 2, 3, 4])

    def test_superoperator_matches_direct_formula(self, rng):
        # vec(A X B) = (B^T kron A) vec(X), 100 random draws
        for _ in range(100):
            n = int(rng.integers(2, 5))
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            b = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            s = Superoperator(np.kron(b.T, a))
            assert np.max(np.abs(s(x) - a @ x @ b)) < 1e-12

    def test_adjoint_action_is_conjugation(self, rng):
        u = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
        x = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.max(np.abs(adjoint_action(u)(x) - u @ x @ u.conj().T)) < 1e-12


class TestAd:
    def test_identity_gives_zero(self):
        assert np.max(np.abs(ad(np.eye(3)).matrix)) == 0.0

    def test_eigenoperator(self):
        h = np.diag([-0.5, 0.5])
        x = np.zeros((2, 2), dtype=complex)
        x[0, 1] = 1.0
        assert np.max(np.abs(ad(h)(x) + x)) < 1e-15

    def test_spectrum_is_pairwise_differences(self, rng):
        h = rng.normal(size=(4, 4))
        h = (h + h.T) / 2.0
        ev = np.linalg.eigvalsh(h)
        got = np.sort(np.linalg.eigvals(ad(h).matrix).real)
        want = np.sort(np.subtract.outer(ev, ev).ravel())
        assert np.max(np.abs(got - want)) < 1e-10

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            ad(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestExpm:
    def test_zero_matrix(self):
        assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))

    def test_diagonal(self):
        lam = np.array([-1.0, 0.3, 2.0])
        assert np.max(np.abs(expm(np.diag(lam)) - np.diag(np.exp(lam)))) < 1e-14

    def test_against_scipy(self, rng):
        worst = 0.0
        for _ in range(40):
            n = int(rng.integers(2, 8))
            m = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
            m *= rng.choice([0.01, 1.0, 30.0])
            ref = scipy.linalg.expm(m)
            worst = max(worst, np.max(np.abs(expm(m) - ref)) / max(1.0, np.max(np.abs(ref))))
        assert worst < 1e-12

    def test_normal_matrix_accuracy_large_norm(self, rng):
        h = rng.normal(size=(5, 5))
        h = (h + h.T) * 10.0  # norm around 1e2
        ref = scipy.linalg.expm(h)
        assert np.max(np.abs(expm(h) - ref)) / np.max(np.abs(ref)) < 1e-12

    def test_stochastic_semigroup(self, rng):
        # nonnegative off-diagonals and zero column sums give stochastic maps
        n = 4
        q = rng.uniform(0.0, 1.0, (n, n))
        np.fill_diagonal(q, 0.0)
        q -= np.diag(q.sum(axis=0))
        for t in [0.1, 1.0, 10.0]:
            assert is_column_stochastic(expm(t * q).real, tol=1e-9)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            expm(np.array([[np.nan, 0.0], [0.0, 0.0]]))


class TestPartialTrace:
    def test_product_with_identity(self, rng):
        c = rng.normal(size=(3, 3))
        d = rng.normal(size=(2, 2))
        out = partial_trace_wrt(np.eye(2), np.kron(c, d))
        assert np.max(np.abs(out - c * np.trace(d))) < 1e-12

    def test_product_with_rank_one(self, rng):
        c = rng.normal(size=(3, 3))
        d = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        out = partial_trace_wrt(x, np.kron(c, d))
        assert np.max(np.abs(out - c * np.trace(x @ d))) < 1e-12

    @pytest.mark.parametrize("m,n", [(2, 2), (2, 3), (3, 2), (3, 3)])
    def test_defining_identity_exhaustive(self, rng, m, n):
        b = rng.normal(size=(m * n, m * n)) + 1j * rng.normal(size=(m * n, m * n))
        x = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
        tx = partial_trace_wrt(x, b)
        for i in range(n):
            for j in range(n):
                a = np.zeros((n, n), dtype=complex)
                a[i, j] = 1.0
                lhs = np.trace(a @ tx)
                rhs = np.trace(np.kron(a, x) @ b)
                assert abs(lhs - rhs) < 1e-12

    def test_linearity(self, rng):
        b1 = rng.normal(size=(6, 6))
        b2 = rng.normal(size=(6, 6))
        x = rng.normal(size=(2, 2))
        lhs = partial_trace_wrt(x, 2.0 * b1 - 0.5 * b2)
        rhs = 2.0 * partial_trace_wrt(x, b1) - 0.5 * partial_trace_wrt(x, b2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            partial_trace_wrt(np.eye(4), np.eye(6))


def test_complex_matrix_json_roundtrip(rng):
    m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    again = complex_matrix_from_json(complex_matrix_to_json(m))
    assert np.array_equal(again, m)


def test_superoperator_trace_flags():
    s = Superoperator.identity(2)
    assert s.is_trace_preserving()
    assert not s.is_trace_annihilating()
