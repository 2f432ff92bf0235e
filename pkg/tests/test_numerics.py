import numpy as np
import pytest

from rvl.numerics import (
    SeededRng,
    SingularSystem,
    inner,
    min_eig_at_least,
    min_eig_at_least_batch,
    require_symmetric,
    solve_linear,
    spectral_radius,
    substream_seed,
)


def eig3_charpoly(M):
    """Brute-force eigenvalues of a symmetric 3x3 via its characteristic polynomial."""
    a, b, c = M[0, 0], M[0, 1], M[0, 2]
    d, e, f = M[1, 1], M[1, 2], M[2, 2]
    # det(M - x I) = -x^3 + tr x^2 - (sum of principal 2-minors) x + det
    tr = a + d + f
    minors = (a * d - b * b) + (a * f - c * c) + (d * f - e * e)
    det = (a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c))
    roots = np.roots([-1.0, tr, -minors, det])
    return np.sort(roots.real)


class TestInner:
    def test_basic(self):
        assert inner(np.array([1.0, 2.0]), np.array([3.0, 4.0])) == 11.0

    def test_zero(self):
        u = np.array([2.5, -1.0, 3.0])
        assert inner(u, np.zeros(3)) == 0.0

    def test_orthogonal_basis(self):
        assert inner(np.eye(3)[0], np.eye(3)[1]) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inner(np.ones(2), np.ones(3))

    def test_symmetric_bilinear(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            u, v, w = rng.normal(size=(3, 4))
            a, b = rng.normal(size=2)
            assert inner(u, v) == pytest.approx(inner(v, u), rel=1e-12)
            lhs = inner(a * u + b * w, v)
            rhs = a * inner(u, v) + b * inner(w, v)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestMinEig:
    def test_identity(self):
        assert min_eig_at_least(np.eye(2), 1.0)
        assert not min_eig_at_least(np.eye(2), 1.5)

    def test_diag_read_off(self):
        # eigenvalues are literally the diagonal: 2 and 0.5, so beta=1 fails
        assert not min_eig_at_least(np.diag([2.0, 0.5]), 1.0)
        assert min_eig_at_least(np.diag([2.0, 0.5]), 0.5)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            min_eig_at_least(np.array([[1.0, 2.0], [0.0, 1.0]]), 0.0)

    def test_negative_beta_rejected(self):
        with pytest.raises(ValueError):
            min_eig_at_least(np.eye(2), -0.1)

    def test_zero_pivot_with_mass_below(self):
        # [[0, c], [c, 1]] is indefinite for any c != 0
        M = np.array([[0.0, 0.5], [0.5, 1.0]])
        assert not min_eig_at_least(M, 0.0)

    def test_against_charpoly_oracle(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(1000):
            A = rng.normal(size=(3, 3))
            M = (A + A.T) / 2.0
            beta = abs(rng.normal())
            lam_min = eig3_charpoly(M)[0]
            if abs(lam_min - beta) <= 1e-8:
                continue  # boundary band where either answer is acceptable
            assert min_eig_at_least(M, beta) == (lam_min > beta)
            checked += 1
        assert checked > 900

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(3)
        A = rng.normal(size=(50, 3, 3))
        Ms = (A + np.transpose(A, (0, 2, 1))) / 2.0
        got = min_eig_at_least_batch(Ms, 0.3)
        want = [min_eig_at_least(M, 0.3) for M in Ms]
        assert list(got) == want


class TestSolveLinear:
    def test_identity(self):
        b = np.array([3.0, -1.0, 2.0])
        assert np.array_equal(solve_linear(np.eye(3), b), b)

    def test_diagonal_scaling(self):
        x = solve_linear(2.0 * np.eye(2), np.array([4.0, 6.0]))
        assert np.allclose(x, [2.0, 3.0], atol=0, rtol=0)

    def test_singular_strict(self):
        rank1 = np.outer([1.0, 2.0], [3.0, 1.0])
        with pytest.raises(SingularSystem):
            solve_linear(rank1, np.array([1.0, 2.0]))

    def test_ridge_mode_consistent_system(self):
        # degenerate but consistent: solution exists along the data direction
        P = np.diag([1e4, 0.0])
        q = np.array([1e4, 0.0])
        x = solve_linear(P, q, ridge=True)
        assert x[0] == pytest.approx(1.0, rel=1e-6)
        assert x[1] == pytest.approx(0.0, abs=1e-12)

    def test_residual_contract(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = rng.integers(1, 9)
            A = rng.normal(size=(n, n)) + n * np.eye(n)
            b = rng.normal(size=n)
            x = solve_linear(A, b)
            res = np.linalg.norm(A @ x - b)
            assert res <= 1e-8 * (1.0 + np.linalg.norm(b))

    def test_matrix_rhs(self):
        rng = np.random.default_rng(5)
        A = rng.normal(size=(4, 4)) + 4 * np.eye(4)
        B = rng.normal(size=(4, 3))
        X = solve_linear(A, B)
        assert np.allclose(A @ X, B, atol=1e-10)

    def test_requires_square(self):
        with pytest.raises(ValueError):
            solve_linear(np.ones((2, 3)), np.ones(2))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            solve_linear(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.ones(2))


class TestSpectralRadius:
    def test_diagonal(self):
        assert spectral_radius(np.diag([0.3, -0.8])) == pytest.approx(0.8, rel=1e-10)

    def test_scaled_rotation(self):
        # complex pair of magnitude 0.9: plain vector iteration would stall
        th = 1.1
        R = 0.9 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        assert spectral_radius(R) == pytest.approx(0.9, rel=1e-9)

    def test_nilpotent(self):
        N = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert spectral_radius(N) == 0.0

    def test_random_against_numpy(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            M = rng.normal(size=(4, 4))
            want = np.max(np.abs(np.linalg.eigvals(M)))
            assert spectral_radius(M) == pytest.approx(want, rel=1e-6)


class TestSeededRng:
    def test_equal_seeds_equal_draws(self):
        a, b = SeededRng(123), SeededRng(123)
        assert np.array_equal(a.uniforms(10_000), b.uniforms(10_000))

    def test_different_seeds_differ(self):
        assert SeededRng(1).uniform() != SeededRng(2).uniform()

    def test_scalar_matches_batch(self):
        a, b = SeededRng(9), SeededRng(9)
        scalars = np.array([a.uniform() for _ in range(64)])
        assert np.array_equal(scalars, b.uniforms(64))
        c, d = SeededRng(9), SeededRng(9)
        scalars = np.array([c.normal() for _ in range(64)])
        assert np.array_equal(scalars, d.normals(64))

    def test_counter_is_the_state(self):
        a = SeededRng(5)
        a.uniforms(17)
        b = SeededRng(5)
        b.counter = a.counter
        assert a.uniform() == b.uniform()

    def test_normal_consumes_two_uniforms(self):
        a = SeededRng(5)
        a.normals(3)
        assert a.counter == 6

    def test_box_muller_construction(self):
        # the draw is exactly sqrt(-2 ln(1-u1)) cos(2 pi u2)
        a, b = SeededRng(31), SeededRng(31)
        u = b.uniforms(2)
        want = np.sqrt(-2.0 * np.log(1.0 - u[0])) * np.cos(2.0 * np.pi * u[1])
        assert a.normal() == want

    def test_gaussian_moments(self):
        z = SeededRng(77).normals(200_000)
        assert abs(np.mean(z)) < 0.01
        assert abs(np.std(z) - 1.0) < 0.01

    def test_uniform_range(self):
        u = SeededRng(4).uniforms(100_000)
        assert np.all(u >= 0.0) and np.all(u < 1.0)

    def test_substream_seeds_differ(self):
        s = substream_seed(42, 1)
        assert s != substream_seed(42, 2)
        assert s == substream_seed(42, 1)


class TestRequireSymmetric:
    def test_accepts_tiny_asymmetry(self):
        M = np.array([[1.0, 2.0], [2.0 + 1e-13, 1.0]])
        require_symmetric(M)

    def test_rejects_structural_asymmetry(self):
        with pytest.raises(ValueError):
            require_symmetric(np.array([[1.0, 2.0], [1.0, 1.0]]))
