"""Tests for the Jordan algebra layer: products, determinants, minors,
Peirce splits, filling radii and the rank-2 slice identity."""

import numpy as np
import pytest

from conekit import jordan as jd


def spin3(x1, x2, x3):
    return jd.Element(jd.spin_factor(3), np.array([x1, x2, x3], dtype=float))


class TestProduct:
    def test_identity_acts_trivially(self):
        e = jd.identity(jd.spin_factor(3))
        x = spin3(2.0, 1.0, 0.0)
        assert np.allclose(jd.jordan_product(e, x).coords, x.coords)

    def test_orthogonal_idempotents_multiply_to_zero(self):
        c1 = jd.from_matrix(np.diag([1.0, 0.0]))
        c2 = jd.from_matrix(np.diag([0.0, 1.0]))
        assert np.allclose(jd.jordan_product(c1, c2).coords, 0.0)

    def test_spin_unit_vector_squares_to_identity(self):
        x = spin3(0.0, 1.0, 0.0)
        prod = jd.jordan_product(x, x)
        assert np.allclose(prod.coords, [1.0, 0.0, 0.0])

    def test_commutative_on_random_pairs(self):
        rng = np.random.default_rng(7)
        for a in (jd.spin_factor(4), jd.sym_matrix(3)):
            for _ in range(20):
                x = jd.Element(a, rng.normal(size=a.dim))
                y = jd.Element(a, rng.normal(size=a.dim))
                assert np.allclose(
                    jd.jordan_product(x, y).coords, jd.jordan_product(y, x).coords
                )

    def test_algebra_mismatch_rejected(self):
        x = spin3(1.0, 0.0, 0.0)
        y = jd.identity(jd.sym_matrix(2))
        with pytest.raises(ValueError):
            jd.jordan_product(x, y)


class TestDeterminant:
    def test_identity_has_unit_determinant(self):
        assert jd.determinant(jd.identity(jd.spin_factor(3))) == 1.0
        assert jd.determinant(jd.identity(jd.sym_matrix(3))) == pytest.approx(1.0)

    def test_spin_lorentz_form(self):
        assert jd.determinant(spin3(2.0, 1.0, 0.0)) == pytest.approx(3.0)

    def test_large_shift_dominates(self):
        # det(10 e + x) > 0 whenever ||x|| <= 1; the eigenvalue oracle puts
        # every eigenvalue of 10 I + x above 10 - ||x||_2 >= 9.
        rng = np.random.default_rng(11)
        a = jd.sym_matrix(3)
        e = jd.identity(a)
        for _ in range(50):
            m = rng.normal(size=(3, 3))
            m = (m + m.T) / 2
            m /= max(1.0, np.linalg.norm(m))
            x = jd.from_matrix(m)
            shifted = 10.0 * e + x
            assert jd.determinant(shifted) > 0.0
            assert np.linalg.eigvalsh(jd.as_matrix(shifted))[0] >= 9.0

    def test_complex_determinant_is_bilinear_not_hermitian(self):
        z = jd.Element(jd.spin_factor(3), np.array([1.0, 1j, 0.0]))
        # 1^2 - (i)^2 = 2, not 1 - |i|^2 = 0
        assert jd.determinant(z) == pytest.approx(2.0 + 0.0j)


class TestInverse:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        for a in (jd.spin_factor(3), jd.sym_matrix(3)):
            e = jd.identity(a)
            for _ in range(20):
                x = jd.Element(a, rng.normal(size=a.dim)) + 3.0 * e
                xi = jd.jordan_inverse(x)
                assert jd.norm(jd.jordan_product(x, xi) - e) < 1e-10


class TestPrincipalMinors:
    def test_identity_gives_ones(self):
        for a in (jd.spin_factor(3), jd.sym_matrix(3)):
            minors = jd.principal_minors(jd.identity(a), jd.standard_frame(a))
            assert np.allclose(minors, 1.0)

    def test_sym2_signature(self):
        a = jd.sym_matrix(2)
        x = jd.from_matrix(np.diag([1.0, -1.0]))
        minors = jd.principal_minors(x, jd.standard_frame(a))
        assert np.allclose(minors, [1.0, -1.0])

    def test_spin_projection_convention(self):
        # frame through u = (1, 0): the projection of x onto span(c1) is
        # (x1 + x2) c1, whose determinant in the rank-1 subalgebra is its
        # coefficient, here 3; the second minor is the full determinant.
        frame = jd.spin_frame(np.array([1.0, 0.0]))
        x = spin3(2.0, 1.0, 0.0)
        minors = jd.principal_minors(x, frame)
        assert np.allclose(minors, [3.0, 3.0])

    def test_spin_minors_are_spectral(self):
        # with x = l1 c1 + l2 c2 the minors are (l1, l1 l2)
        rng = np.random.default_rng(59)
        frame = jd.spin_frame(np.array([0.0, 1.0]))
        c1, c2 = frame.idempotents
        for _ in range(25):
            l1, l2 = rng.normal(size=2)
            x = l1 * c1 + l2 * c2
            assert np.allclose(jd.principal_minors(x, frame), [l1, l1 * l2])

    def test_sym_standard_frame_matches_leading_minors(self):
        rng = np.random.default_rng(5)
        a = jd.sym_matrix(4)
        frame = jd.standard_frame(a)
        for _ in range(25):
            m = rng.normal(size=(4, 4))
            m = (m + m.T) / 2
            minors = jd.principal_minors(jd.from_matrix(m), frame)
            oracle = [np.linalg.det(m[: l + 1, : l + 1]) for l in range(4)]
            assert np.allclose(minors, oracle, atol=1e-10)


class TestConeMembership:
    def test_examples(self):
        frame = jd.standard_frame(jd.spin_factor(3))
        assert jd.cone_contains(spin3(2.0, 1.0, 0.0), frame)
        assert not jd.cone_contains(spin3(1.0, 2.0, 0.0), frame)
        m = jd.from_matrix(np.array([[1.0, 3.0], [3.0, 1.0]]))
        assert not jd.cone_contains(m, jd.standard_frame(jd.sym_matrix(2)))

    def test_spin_agreement_with_light_cone(self):
        rng = np.random.default_rng(13)
        frame = jd.standard_frame(jd.spin_factor(3))
        for _ in range(10_000):
            x = spin3(*rng.normal(size=3))
            assert jd.cone_contains(x, frame) == (
                x.coords[0] > np.hypot(x.coords[1], x.coords[2])
            )

    def test_spin_agreement_near_boundary(self):
        rng = np.random.default_rng(17)
        frame = jd.standard_frame(jd.spin_factor(3))
        for _ in range(2_000):
            d = rng.normal(size=2)
            d /= np.linalg.norm(d)
            rho = rng.uniform(0.5, 2.0)
            eta = rng.uniform(1e-6, 1e-3) * rng.choice([-1.0, 1.0])
            x = spin3(rho + eta, *(rho * d))
            assert jd.cone_contains(x, frame) == (eta > 0)

    def test_sym_agreement_with_eigenvalue_oracle(self):
        rng = np.random.default_rng(19)
        a = jd.sym_matrix(3)
        frame = jd.standard_frame(a)
        for _ in range(2_000):
            m = rng.normal(size=(3, 3))
            m = (m + m.T) / 2
            assert jd.cone_contains(jd.from_matrix(m), frame) == bool(
                np.linalg.eigvalsh(m)[0] > 0
            )


class TestPeirce:
    def test_idempotent_decomposes_as_itself(self):
        c = jd.from_matrix(np.diag([1.0, 0.0, 0.0]))
        split = jd.peirce_decompose(c, c)
        assert jd.norm(split.x1 - c) < 1e-12
        assert jd.norm(split.xhalf) < 1e-12
        assert jd.norm(split.x0) < 1e-12

    def test_offdiagonal_block_is_half_component(self):
        c = jd.from_matrix(np.diag([1.0, 0.0, 0.0]))
        m = np.zeros((3, 3))
        m[0, 1] = m[1, 0] = 1.0
        x = jd.from_matrix(m)
        split = jd.peirce_decompose(x, c)
        assert jd.norm(split.xhalf - x) < 1e-12
        assert jd.norm(split.x1) < 1e-12
        assert jd.norm(split.x0) < 1e-12

    def test_eigenspace_dimensions_sym3(self):
        # decompose a full basis and count nonzero components: 1 / 2 / 3
        c = jd.from_matrix(np.diag([1.0, 0.0, 0.0]))
        a = jd.sym_matrix(3)
        dims = [0, 0, 0]
        for i in range(a.dim):
            v = np.zeros(a.dim)
            v[i] = 1.0
            split = jd.peirce_decompose(jd.Element(a, v), c)
            for slot, comp in enumerate((split.x1, split.xhalf, split.x0)):
                if jd.norm(comp) > 1e-12:
                    dims[slot] += 1
        assert dims == [1, 2, 3]

    def test_split_invariants_random(self):
        rng = np.random.default_rng(23)
        cases = [
            (jd.sym_matrix(3), jd.from_matrix(np.diag([1.0, 0.0, 0.0]))),
            (jd.spin_factor(4), jd.Element(jd.spin_factor(4),
                                           np.array([0.5, 0.5, 0.0, 0.0]))),
        ]
        for a, c in cases:
            for _ in range(50):
                x = jd.Element(a, rng.normal(size=a.dim))
                split = jd.peirce_decompose(x, c)
                assert jd.norm(split.reassembled() - x) < 1e-9
                assert abs(jd.inner(split.x1, split.xhalf)) < 1e-9
                assert abs(jd.inner(split.x1, split.x0)) < 1e-9
                assert abs(jd.inner(split.xhalf, split.x0)) < 1e-9
                assert jd.norm(jd.jordan_product(c, split.x1) - split.x1) < 1e-9
                assert jd.norm(
                    jd.jordan_product(c, split.xhalf) - 0.5 * split.xhalf
                ) < 1e-9
                assert jd.norm(jd.jordan_product(c, split.x0)) < 1e-9

    def test_non_idempotent_rejected(self):
        x = jd.from_matrix(np.diag([2.0, 0.0, 0.0]))
        with pytest.raises(ValueError):
            jd.peirce_decompose(jd.identity(jd.sym_matrix(3)), x)


class TestPrimitiveIdempotents:
    def test_rank_one_projection_is_primitive(self):
        assert jd.primitive_idempotent_check(jd.from_matrix(np.diag([1.0, 0, 0])))

    def test_rank_two_projection_is_not(self):
        assert not jd.primitive_idempotent_check(jd.from_matrix(np.diag([1.0, 1, 0])))

    def test_spin_circle_of_idempotents(self):
        rng = np.random.default_rng(29)
        for theta in rng.uniform(0, 2 * np.pi, size=50):
            c = spin3(0.5, 0.5 * np.cos(theta), 0.5 * np.sin(theta))
            assert jd.primitive_idempotent_check(c)

    def test_zero_and_identity_are_not_primitive(self):
        a = jd.sym_matrix(3)
        assert not jd.primitive_idempotent_check(jd.zero(a))
        assert not jd.primitive_idempotent_check(jd.identity(a))


class TestFrames:
    def test_standard_frames_validate(self):
        for a in (jd.spin_factor(5), jd.sym_matrix(4)):
            assert jd.standard_frame(a).validate()

    def test_rotated_sym_frame_validates(self):
        rng = np.random.default_rng(31)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        cs = tuple(jd.from_matrix(np.outer(q[:, i], q[:, i])) for i in range(3))
        assert jd.JordanFrame(jd.sym_matrix(3), cs).validate()


class TestFillingRadius:
    def test_already_inside_returns_zero(self):
        c1 = jd.from_matrix(np.diag([1.0, 0.0]))
        res = jd.filling_radius(jd.identity(jd.sym_matrix(2)), c1)
        assert res.found and res.radius == 0.0

    def test_explicit_two_by_two_root(self):
        # det([[1, 3], [3, R]]) = R - 9 crosses zero at R = 9.
        c1 = jd.from_matrix(np.diag([1.0, 0.0]))
        xi = jd.from_matrix(np.array([[1.0, 3.0], [3.0, 0.0]]))
        res = jd.filling_radius(xi, c1)
        assert res.found
        assert res.radius == pytest.approx(9.0, abs=1e-6)
        n = jd.identity(xi.algebra) - c1
        assert jd.in_cone(xi + (res.radius + 1e-7) * n)

    def test_nonpositive_pairing_is_not_fillable(self):
        c1 = spin3(0.5, 0.5, 0.0)
        xi = spin3(-1.0, -1.0, 0.0)
        assert jd.inner(xi, c1) == pytest.approx(-1.0)
        res = jd.filling_radius(xi, c1)
        assert res.status == "not_fillable"
        n = jd.identity(xi.algebra) - c1
        for r in [1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6]:
            assert not jd.in_cone(xi + r * n)

    def test_existence_on_random_samples(self):
        rng = np.random.default_rng(37)
        cases = [
            (jd.sym_matrix(3), jd.from_matrix(np.diag([1.0, 0.0, 0.0]))),
            (jd.spin_factor(3), spin3(0.5, 0.5, 0.0)),
        ]
        for a, c1 in cases:
            for _ in range(100):
                xi = jd.Element(a, rng.normal(size=a.dim))
                if jd.inner(xi, c1) <= 0:
                    xi = -1.0 * xi
                if jd.inner(xi, c1) == 0:
                    continue
                res = jd.filling_radius(xi, c1, r_max=1e6 * (1 + jd.norm(xi)))
                assert res.found

    def test_light_ray_translates_fill_half_space(self):
        # with n = (1, u) and c1 = (1, -u)/2, a point can be pushed into the
        # light cone along n exactly when <xi, (-1, u)> < 0.
        rng = np.random.default_rng(41)
        u = np.array([0.6, 0.8])
        c1 = jd.Element(jd.spin_factor(3), np.concatenate(([1.0], -u)) / 2)
        ntilde = np.concatenate(([-1.0], u))
        for _ in range(200):
            xi = spin3(*rng.normal(size=3))
            pairing = xi.coords @ ntilde
            res = jd.filling_radius(xi, c1)
            if pairing < 0:
                assert res.found
            elif pairing > 0:
                assert res.status == "not_fillable"

    def test_non_primitive_rejected(self):
        with pytest.raises(ValueError):
            jd.filling_radius(
                jd.identity(jd.sym_matrix(3)),
                jd.from_matrix(np.diag([1.0, 1.0, 0.0])),
            )


class TestDetIdentity:
    def test_two_by_two_closed_form(self):
        # det([[a, b], [b, d + R]]) = a (d + R - b^2 / a) for a != 0.
        c1 = jd.from_matrix(np.diag([1.0, 0.0]))
        xi = jd.from_matrix(np.array([[2.0, 1.0], [1.0, 0.0]]))
        assert jd.det_identity_residual(xi, 1.0, c1) < 1e-12

    def test_diagonal_has_zero_residual(self):
        c1 = jd.from_matrix(np.diag([1.0, 0.0, 0.0]))
        xi = jd.from_matrix(np.diag([3.0, -1.0, 2.0]))
        assert jd.det_identity_residual(xi, 5.0, c1) < 1e-12

    def test_random_sym3_normalized_pairing(self):
        rng = np.random.default_rng(43)
        c1 = jd.from_matrix(np.diag([1.0, 0.0, 0.0]))
        for _ in range(50):
            m = rng.normal(size=(3, 3))
            m = (m + m.T) / 2
            m[0, 0] = 1.0       # pairing <xi, c1> = 1
            xi = jd.from_matrix(m)
            lhs = jd.determinant(
                xi + 5.0 * (jd.identity(xi.algebra) - c1)
            )
            assert jd.det_identity_residual(xi, 5.0, c1) < 1e-8 * (1 + abs(lhs))

    def test_residual_small_across_kinds(self):
        rng = np.random.default_rng(47)
        cases = [
            (jd.sym_matrix(2), jd.from_matrix(np.diag([1.0, 0.0]))),
            (jd.sym_matrix(3), jd.from_matrix(np.diag([1.0, 0.0, 0.0]))),
            (jd.sym_matrix(4), jd.from_matrix(np.diag([1.0, 0.0, 0.0, 0.0]))),
            (jd.spin_factor(4), jd.Element(jd.spin_factor(4),
                                           np.array([0.5, 0.5, 0.0, 0.0]))),
        ]
        for a, c1 in cases:
            for _ in range(100):
                xi = jd.Element(a, rng.normal(size=a.dim))
                if abs(jd.peirce_coefficient(xi, c1)) < 1e-3:
                    continue
                r_shift = rng.uniform(0.5, 5.0)
                lhs = jd.determinant(xi + r_shift * (jd.identity(a) - c1))
                res = jd.det_identity_residual(xi, r_shift, c1)
                assert res <= 1e-8 * (1.0 + abs(lhs))

    def test_zero_pairing_raises(self):
        c1 = jd.from_matrix(np.diag([1.0, 0.0]))
        xi = jd.from_matrix(np.array([[0.0, 1.0], [1.0, 2.0]]))
        with pytest.raises(ZeroDivisionError):
            jd.det_identity_residual(xi, 1.0, c1)


class TestSliceTest:
    def test_sum_of_first_two_idempotents(self):
        a = jd.sym_matrix(3)
        frame = jd.standard_frame(a)
        xi = jd.from_matrix(np.diag([1.0, 1.0, 0.0]))
        assert jd.slice_test(xi, frame) == (True, True)

    def test_indefinite_block(self):
        a = jd.sym_matrix(3)
        frame = jd.standard_frame(a)
        xi = jd.from_matrix(np.diag([1.0, -1.0, 0.0]))
        assert jd.slice_test(xi, frame) == (False, False)

    def test_agreement_on_random_sym4(self):
        rng = np.random.default_rng(53)
        a = jd.sym_matrix(4)
        frame = jd.standard_frame(a)
        for _ in range(300):
            s = rng.normal(size=(2, 2))
            s = (s + s.T) / 2
            m = np.zeros((4, 4))
            m[:2, :2] = s
            ambient, rank2 = jd.slice_test(jd.from_matrix(m), frame)
            assert ambient == rank2
            # eigenvalue oracle on both sides
            assert rank2 == bool(np.linalg.eigvalsh(s)[0] > 0)
            full = m + np.diag([0.0, 0.0, 1.0, 1.0])
            assert ambient == bool(np.linalg.eigvalsh(full)[0] > 0)

    def test_rank_two_ambient_rejected(self):
        a = jd.sym_matrix(2)
        with pytest.raises(ValueError):
            jd.slice_test(jd.identity(a), jd.standard_frame(a))


class TestRotatedFrames:
    def test_cone_membership_in_rotated_frame(self):
        # positivity of all compression minors along any complete frame is
        # still the positive-definite cone (Sylvester in the rotated basis)
        rng = np.random.default_rng(211)
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        frame = jd.JordanFrame(
            jd.sym_matrix(3),
            tuple(jd.from_matrix(np.outer(q[:, i], q[:, i])) for i in range(3)),
        )
        for _ in range(500):
            m = rng.normal(size=(3, 3))
            m = (m + m.T) / 2
            assert jd.cone_contains(jd.from_matrix(m), frame) == bool(
                np.linalg.eigvalsh(m)[0] > 0
            )

    def test_filling_radius_exceeded(self):
        c1 = jd.from_matrix(np.diag([1.0, 0.0]))
        xi = jd.from_matrix(np.array([[1.0, 3.0], [3.0, 0.0]]))
        res = jd.filling_radius(xi, c1, r_max=2.0)   # true radius is 9
        assert res.status == "exceeded"
