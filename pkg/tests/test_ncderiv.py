"""Jets, difference-differentials, finite differences, and polarization."""

import math

import numpy as np
import pytest

from ncfuncalc import (
    DomainDescriptor,
    DomainViolationError,
    FreePoly,
    MatrixTuple,
    NCFunctionHandle,
    StructureViolationError,
    delta_k,
    dk_diag,
    dk_fd,
    dk_multilinear,
    from_poly,
    jet1,
    operator_norm,
    variables,
)

from _helpers import random_poly, random_tuple, relerr, rng_for


def scalar(v: float) -> MatrixTuple:
    return MatrixTuple.from_scalars([v], 1)


@pytest.fixture
def square():
    """F(x) = x0^2 in one variable."""
    return from_poly(FreePoly(1, {(0, 0): 1.0}))


class TestJet1:
    def test_square_at_scalars(self, square):
        res = jet1(square, scalar(1.0), scalar(1.0))
        np.testing.assert_allclose(res.derivative, [[2.0]], atol=1e-12)
        np.testing.assert_allclose(res.value, [[1.0]], atol=1e-12)
        assert res.residual <= 1e-12

    def test_square_matrix_directions(self, square):
        rng = rng_for(30)
        x = random_tuple(rng, 1, 3)
        h = random_tuple(rng, 1, 3)
        res = jet1(square, x, h)
        np.testing.assert_allclose(res.derivative, x[0] @ h[0] + h[0] @ x[0], atol=1e-10)

    def test_constant_has_zero_derivative(self):
        F = from_poly(FreePoly.constant(2, 3.0))
        rng = rng_for(31)
        res = jet1(F, random_tuple(rng, 2, 2), random_tuple(rng, 2, 2))
        np.testing.assert_allclose(res.derivative, np.zeros((2, 2)), atol=1e-14)

    def test_linear_returns_direction(self):
        F = from_poly(FreePoly.letter(2, 0))
        rng = rng_for(32)
        h = random_tuple(rng, 2, 2)
        res = jet1(F, random_tuple(rng, 2, 2), h)
        np.testing.assert_allclose(res.derivative, h[0], atol=1e-12)

    def test_scaling_policy_rejects_boundary_points(self):
        F = from_poly(FreePoly.letter(1, 0), DomainDescriptor.polydisk(1.0))
        x = MatrixTuple.from_scalars([0.95], 1)
        with pytest.raises(DomainViolationError):
            jet1(F, x, scalar(1.0))

    def test_residual_reports_broken_triangularity(self):
        # The transpose evaluator flips the jet, leaving mass below the
        # diagonal; jet1 surfaces that as a nonzero residual.
        flipped = NCFunctionHandle(
            1, DomainDescriptor.polydisk(math.inf), lambda x: x[0].T
        )
        rng = rng_for(49)
        res = jet1(flipped, random_tuple(rng, 1, 2), random_tuple(rng, 1, 2))
        assert res.residual > 1e-3


class TestDeltaK:
    def test_two_point_square_oracle(self, square):
        res = delta_k(square, [scalar(1.0), scalar(2.0)], [scalar(1.0)])
        np.testing.assert_allclose(res.delta, [[3.0]], atol=1e-12)

    def test_second_order_square(self, square):
        xs = [scalar(0.0)] * 3
        res = delta_k(square, xs, [scalar(1.0)] * 2)
        np.testing.assert_allclose(res.delta, [[1.0]], atol=1e-12)

    def test_zero_directions(self, square):
        rng = rng_for(33)
        xs = [random_tuple(rng, 1, 2) for _ in range(3)]
        res = delta_k(square, xs, [MatrixTuple.zeros(1, 2)] * 2)
        np.testing.assert_allclose(res.delta, np.zeros((2, 2)), atol=1e-14)

    def test_full_upper_diagonal_blocks(self, square):
        rng = rng_for(34)
        xs = [random_tuple(rng, 1, 2) for _ in range(3)]
        hs = [random_tuple(rng, 1, 2) for _ in range(2)]
        res = delta_k(square, xs, hs)
        for i, x in enumerate(xs):
            block = res.full_upper[2 * i : 2 * i + 2, 2 * i : 2 * i + 2]
            np.testing.assert_allclose(block, square.eval(x), atol=1e-12)

    def test_superdiagonal_block_of_linear_image(self):
        # A degree-1 polynomial maps the jet to itself componentwise, so the
        # (0, 1) block of the image is the direction, read two ways.
        from ncfuncalc import BlockLayout, bidiagonal_block, extract_block

        rng = rng_for(48)
        F = from_poly(FreePoly.letter(1, 0))
        x, h = random_tuple(rng, 1, 3), random_tuple(rng, 1, 3)
        img = F.eval(bidiagonal_block([x, x], [h]), unchecked=True)
        block = extract_block(img, BlockLayout.square(2, 3), 0, 1)
        np.testing.assert_allclose(block, img[:3, 3:])
        np.testing.assert_allclose(block, h[0], atol=1e-14)

    def test_epsilon_rescale_is_exact(self, square):
        rng = rng_for(35)
        xs = [random_tuple(rng, 1, 2, scale=0.3) for _ in range(3)]
        hs = [random_tuple(rng, 1, 2) for _ in range(2)]
        base = delta_k(square, xs, hs, epsilon=1.0).delta
        scaled = delta_k(square, xs, hs, epsilon=0.25).delta
        assert relerr(scaled, base) <= 1e-12

    def test_structure_violation_detected(self):
        # An evaluator that scrambles the jet cannot be intertwining preserving.
        broken = NCFunctionHandle(
            1,
            DomainDescriptor.polydisk(math.inf),
            lambda x: x[0] @ x[0].T.conj(),
        )
        rng = rng_for(36)
        xs = [random_tuple(rng, 1, 2) for _ in range(2)]
        with pytest.raises(StructureViolationError):
            delta_k(broken, xs, [random_tuple(rng, 1, 2)])

    def test_length_validation(self, square):
        with pytest.raises(ValueError):
            delta_k(square, [scalar(0.0)], [])
        with pytest.raises(ValueError):
            delta_k(square, [scalar(0.0)] * 2, [scalar(1.0)] * 2)


class TestDkDiag:
    def test_agrees_with_jet1(self, square):
        rng = rng_for(37)
        x = random_tuple(rng, 1, 2)
        h = random_tuple(rng, 1, 2)
        gap = relerr(dk_diag(square, x, h, 1), jet1(square, x, h).derivative)
        assert gap <= 1e-9

    def test_second_derivative_of_square(self, square):
        np.testing.assert_allclose(
            dk_diag(square, scalar(0.0), scalar(1.0), 2), [[2.0]], atol=1e-12
        )
        rng = rng_for(38)
        h = random_tuple(rng, 1, 3)
        np.testing.assert_allclose(
            dk_diag(square, MatrixTuple.zeros(1, 3), h, 2), 2 * h[0] @ h[0], atol=1e-10
        )

    def test_vanishes_past_the_degree(self):
        F = from_poly(FreePoly(2, {(0, 1): 1.0}))
        rng = rng_for(39)
        out = dk_diag(F, random_tuple(rng, 2, 2), random_tuple(rng, 2, 2), 3)
        assert operator_norm(out) <= 1e-9

    def test_order_zero_is_evaluation(self, square):
        x = scalar(0.5)
        np.testing.assert_array_equal(dk_diag(square, x, scalar(1.0), 0), square.eval(x))


class TestDkFd:
    def test_hand_arithmetic(self, square):
        out = dk_fd(square, scalar(1.0), scalar(1.0), 1, 0.5)
        np.testing.assert_allclose(out, [[2.5]], atol=1e-12)

    def test_exact_for_affine(self):
        F = from_poly(FreePoly(1, {(): 1.0, (0,): 2.0}))
        rng = rng_for(40)
        x, h = random_tuple(rng, 1, 2), random_tuple(rng, 1, 2)
        for lam in (1.0, 0.3, 0.05):
            np.testing.assert_allclose(dk_fd(F, x, h, 1, lam), 2 * h[0], atol=1e-10)

    def test_toeplitz_identity_every_lambda(self):
        # Shifted-base-point delta equals the finite-difference sum per lambda,
        # not only in the limit.
        rng = rng_for(41)
        for _ in range(10):
            F = from_poly(random_poly(rng, 2, 4))
            n = int(rng.integers(1, 4))
            x = random_tuple(rng, 2, n)
            h = random_tuple(rng, 2, n)
            for k in (1, 2, 3):
                for lam in (1.0, 0.5, 0.1):
                    xs = [x + (j * lam) * h for j in range(k + 1)]
                    lhs = math.factorial(k) * delta_k(F, xs, [h] * k).delta
                    rhs = dk_fd(F, x, h, k, lam)
                    assert relerr(lhs, rhs) <= 1e-8

    def test_symmetric_average_is_second_order(self, square):
        # (fd(lam) + fd(-lam))/2 converges at O(lam^2) for the cubic.
        F = from_poly(FreePoly(1, {(0, 0, 0): 1.0}))
        x, h = scalar(0.7), scalar(1.0)
        exact = dk_diag(F, x, h, 1)
        errs = []
        for lam in (0.1, 0.05, 0.025):
            avg = 0.5 * (dk_fd(F, x, h, 1, lam) + dk_fd(F, x, h, 1, -lam))
            errs.append(operator_norm(avg - exact))
        assert errs[1] <= errs[0] / 3
        assert errs[2] <= errs[1] / 3

    def test_cancellation_warning(self, square):
        with pytest.warns(RuntimeWarning):
            dk_fd(square, scalar(0.0), scalar(1.0), 3, 1e-5)

    def test_zero_step_rejected(self, square):
        with pytest.raises(ValueError):
            dk_fd(square, scalar(0.0), scalar(1.0), 1, 0.0)


class TestDkMultilinear:
    def test_order_one_matches_jet(self, square):
        rng = rng_for(42)
        x, h = random_tuple(rng, 1, 2), random_tuple(rng, 1, 2)
        assert relerr(dk_multilinear(square, x, [h]), jet1(square, x, h).derivative) <= 1e-10

    def test_mixed_product_oracle(self):
        F = from_poly(FreePoly(2, {(0, 1): 1.0}))
        h = MatrixTuple([[[1.0]], [[0.0]]])
        g = MatrixTuple([[[0.0]], [[1.0]]])
        out = dk_multilinear(F, MatrixTuple.zeros(2, 1), [h, g])
        np.testing.assert_allclose(out, [[1.0]], atol=1e-12)

    def test_full_mixed_formula(self):
        # D2 of x0 x1 at any base point: [h,g] -> h0 g1 + g0 h1.
        F = from_poly(FreePoly(2, {(0, 1): 1.0}))
        rng = rng_for(43)
        x = random_tuple(rng, 2, 2)
        h = random_tuple(rng, 2, 2)
        g = random_tuple(rng, 2, 2)
        expected = h[0] @ g[1] + g[0] @ h[1]
        assert relerr(dk_multilinear(F, x, [h, g]), expected) <= 1e-10

    def test_symmetry_under_swap(self):
        rng = rng_for(44)
        F = from_poly(random_poly(rng, 2, 3))
        x = random_tuple(rng, 2, 2)
        h, g = random_tuple(rng, 2, 2), random_tuple(rng, 2, 2)
        a = dk_multilinear(F, x, [h, g])
        b = dk_multilinear(F, x, [g, h])
        assert relerr(a, b) <= 1e-9

    def test_multilinearity_in_each_slot(self):
        rng = rng_for(45)
        F = from_poly(random_poly(rng, 2, 3))
        x = random_tuple(rng, 2, 2)
        hs = [random_tuple(rng, 2, 2) for _ in range(2)]
        extra = random_tuple(rng, 2, 2)
        c = 0.7 - 0.3j
        for slot in range(2):
            bumped = list(hs)
            bumped[slot] = hs[slot] + extra
            split = list(hs)
            split[slot] = extra
            lhs = dk_multilinear(F, x, bumped)
            rhs = dk_multilinear(F, x, hs) + dk_multilinear(F, x, split)
            assert relerr(lhs, rhs) <= 1e-8
            scaled = list(hs)
            scaled[slot] = c * hs[slot]
            assert relerr(dk_multilinear(F, x, scaled), c * dk_multilinear(F, x, hs)) <= 1e-8

    def test_order_cap(self, square):
        rng = rng_for(46)
        hs = [random_tuple(rng, 1, 1) for _ in range(7)]
        with pytest.raises(ValueError):
            dk_multilinear(square, scalar(0.0), hs)


class TestScalarPointFactorization:
    def test_delta_factors_through_direction_magnitudes(self):
        # At scalar base points with h_i = H_i e_{j_i} the delta is a fixed
        # scalar times H_1 H_2, independent of the H_i.
        rng = rng_for(47)
        F = from_poly(random_poly(rng, 2, 3))
        n = 2
        a = [MatrixTuple.from_scalars([0.1, -0.05], n) for _ in range(3)]
        word = (0, 1)

        def delta_for(mats):
            hs = []
            for letter, m in zip(word, mats):
                comps = [np.zeros((n, n))] * 2
                comps[letter] = m
                hs.append(MatrixTuple(comps))
            return delta_k(F, a, hs).delta

        h1, h2 = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(2))
        g1, g2 = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) for _ in range(2))
        d_h = delta_for([h1, h2])
        d_g = delta_for([g1, g2])
        # Recover the scalar from each and compare.
        e_val = delta_for([np.eye(n), np.eye(n)])
        c = np.trace(e_val) / n
        assert relerr(d_h, c * h1 @ h2) <= 1e-8
        assert relerr(d_g, c * g1 @ g2) <= 1e-8
