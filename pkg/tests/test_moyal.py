"""Tests for the symplectic normal form, grid shift unitaries, and decay profiles."""

import json

import numpy as np
import pytest

from nctrace.moyal import (
    NormalForm,
    ShellProfile,
    SymplecticForm,
    UniformGrid,
    antisymmetric_normal_form,
    ccr_phase,
    ccr_phase_residual,
    grid_unitary_apply,
    h_decay_profile,
    multiplier_identity_residual,
    random_sp_block,
    random_sp_theta,
    riesz_difference_decay,
    sp_invariant_functional_check,
    sp_theta_conjugate,
)
from nctrace.sphere import SpherePoly, quadrature_rule, sp_group_membership
from nctrace.torus import ThetaMatrix

OMEGA2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def random_antisymmetric(d, rng):
    a = rng.normal(size=(d, d))
    return a - a.T


class TestSymplecticForm:
    def test_block_structure(self):
        m = SymplecticForm(4).matrix
        assert m.shape == (4, 4)
        np.testing.assert_array_equal(m[:2, :2], OMEGA2)
        np.testing.assert_array_equal(m[2:, 2:], OMEGA2)
        np.testing.assert_array_equal(m[:2, 2:], np.zeros((2, 2)))

    @pytest.mark.parametrize("d", [2, 4, 6])
    def test_square_is_minus_identity(self, d):
        m = SymplecticForm(d).matrix
        np.testing.assert_array_equal(m @ m, -np.eye(d))
        np.testing.assert_array_equal(m.T, -m)

    @pytest.mark.parametrize("d", [0, 1, 3, 5])
    def test_rejects_bad_dimension(self, d):
        with pytest.raises(ValueError):
            SymplecticForm(d)


class TestNormalForm:
    def test_scalar_multiple_of_block_form(self):
        # theta = a*Omega diagonalises by the scalar a^{-1/2}
        a = 2.5
        nf = antisymmetric_normal_form(a * OMEGA2)
        np.testing.assert_allclose(nf.beta, a**-0.5 * np.eye(2), atol=1e-15)
        assert nf.residual == 0.0
        np.testing.assert_allclose(nf.gram, np.eye(2) / a, atol=1e-15)

    @pytest.mark.parametrize("d", [2, 4, 6])
    def test_random_theta_residual(self, d):
        rng = np.random.default_rng(100 + d)
        for _ in range(34):
            th = random_antisymmetric(d, rng)
            nf = antisymmetric_normal_form(th)
            omega = SymplecticForm(d).matrix
            assert np.abs(nf.beta.T @ th @ nf.beta - omega).max() < 1e-10
            assert nf.residual < 1e-10
            assert np.isfinite(nf.condition_number)

    def test_beta_is_real_invertible(self):
        rng = np.random.default_rng(7)
        nf = antisymmetric_normal_form(random_antisymmetric(4, rng))
        assert nf.beta.dtype.kind == "f"
        assert abs(np.linalg.det(nf.beta)) > 1e-12

    def test_singular_theta_rejected(self):
        with pytest.raises(ValueError):
            antisymmetric_normal_form(np.zeros((2, 2)))

    def test_odd_dimension_rejected(self):
        th = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 2.0], [0.0, -2.0, 0.0]])
        with pytest.raises(ValueError):
            antisymmetric_normal_form(th)

    def test_non_antisymmetric_rejected(self):
        with pytest.raises(ValueError):
            antisymmetric_normal_form(np.eye(2))

    def test_accepts_theta_matrix_wrapper(self):
        nf = antisymmetric_normal_form(ThetaMatrix.from_upper(2, [np.pi]))
        assert nf.residual < 1e-14


class TestGroupElements:
    @pytest.mark.parametrize("d", [2, 4, 6])
    def test_random_block_membership(self, d):
        rng = np.random.default_rng(d)
        omega = SymplecticForm(d).matrix
        for _ in range(10):
            g = random_sp_block(d, rng)
            assert sp_group_membership(g, omega, 1e-9)

    def test_generator_normalisation_bounds_condition(self):
        # unit-norm symmetric generator caps cond(e^{scale*Omega*S}) at e^{2*scale}
        rng = np.random.default_rng(11)
        for _ in range(25):
            g = random_sp_block(6, rng, scale=0.5)
            assert np.linalg.cond(g) <= np.e + 1e-9

    def test_conjugate_identity(self):
        rng = np.random.default_rng(0)
        nf = antisymmetric_normal_form(random_antisymmetric(4, rng))
        out = sp_theta_conjugate(np.eye(4), nf.beta)
        np.testing.assert_allclose(out, np.eye(4), atol=1e-12)

    def test_conjugate_lands_in_theta_group(self):
        rng = np.random.default_rng(1)
        th = random_antisymmetric(4, rng)
        nf = antisymmetric_normal_form(th)
        for _ in range(5):
            g = random_sp_block(4, rng)
            h = sp_theta_conjugate(g, nf.beta, theta=th)
            assert np.abs(h.T @ th @ h - th).max() < 1e-9

    def test_scalar_beta_conjugation_is_trivial(self):
        # for theta = a*Omega the similarity is by a scalar, so g comes back
        a = 2.5
        nf = antisymmetric_normal_form(a * OMEGA2)
        g = random_sp_block(2, np.random.default_rng(3))
        out = sp_theta_conjugate(g, nf.beta, theta=a * OMEGA2)
        np.testing.assert_allclose(out, g, atol=1e-12)

    def test_rejects_non_symplectic_g(self):
        nf = antisymmetric_normal_form(OMEGA2)
        with pytest.raises(ValueError):
            sp_theta_conjugate(2.0 * np.eye(2), nf.beta)

    def test_rejects_mismatched_theta(self):
        rng = np.random.default_rng(5)
        th = random_antisymmetric(4, rng)
        other = random_antisymmetric(4, rng)
        nf = antisymmetric_normal_form(th)
        g = random_sp_block(4, rng)
        with pytest.raises(ValueError):
            sp_theta_conjugate(g, nf.beta, theta=other)

    def test_random_sp_theta_membership(self):
        rng = np.random.default_rng(9)
        th = random_antisymmetric(6, rng)
        for _ in range(5):
            g = random_sp_theta(th, rng)
            assert np.abs(g.T @ th @ g - th).max() < 1e-8


class TestInvarianceCheck:
    def test_block_form_plane(self):
        rep = sp_invariant_functional_check(OMEGA2, 3, quadrature_rule(2, 512), n_transforms=4, seed=1)
        assert len(rep.rows) == 4 * 10  # ten monomials up to degree 3 in d=2
        assert rep.max_residual < 1e-9

    def test_rule_dimension_mismatch(self):
        with pytest.raises(ValueError):
            sp_invariant_functional_check(OMEGA2, 2, quadrature_rule(3, (8, 16)))

    def test_json_schema(self):
        rep = sp_invariant_functional_check(OMEGA2, 1, quadrature_rule(2, 64), n_transforms=1)
        doc = json.loads(rep.to_json())
        assert set(doc) == {"max_residual", "rows"}
        assert all(set(row) == {"g", "monomial", "residual"} for row in doc["rows"])


class TestUniformGrid:
    def test_axis_is_centred(self):
        grid = UniformGrid(2, 8, 0.25)
        np.testing.assert_allclose(grid.axis, (np.arange(8) - 4) * 0.25)

    def test_mesh_shape(self):
        grid = UniformGrid(2, 6, 1.0)
        assert grid.mesh().shape == (6, 6, 2)

    def test_steps_of_aligned(self):
        grid = UniformGrid(2, 8, 0.5)
        np.testing.assert_array_equal(grid.steps_of((1.0, -1.5)), [2, -3])

    def test_steps_of_misaligned(self):
        grid = UniformGrid(2, 8, 0.5)
        with pytest.raises(ValueError):
            grid.steps_of((0.3, 0.0))

    def test_steps_of_wrong_shape(self):
        grid = UniformGrid(2, 8, 0.5)
        with pytest.raises(ValueError):
            grid.steps_of((1.0, 0.0, 0.0))

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            UniformGrid(2, 3, 0.5)

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(ValueError):
            UniformGrid(2, 8, 0.0)


class TestGridUnitary:
    THETA = ThetaMatrix.from_upper(2, [np.pi])

    def test_zero_shift_is_identity(self):
        grid = UniformGrid(2, 8, 0.5)
        xi = np.random.default_rng(0).normal(size=(8, 8))
        out = grid_unitary_apply(grid, self.THETA, (0.0, 0.0), xi)
        np.testing.assert_allclose(out, xi, atol=1e-15)

    def test_shift_moves_support_and_multiplies_phase(self):
        grid = UniformGrid(2, 8, 1.0)
        xi = np.zeros((8, 8))
        xi[4, 4] = 1.0  # the point u = (0, 0)
        out = grid_unitary_apply(grid, self.THETA, (1.0, 0.0), xi)
        # mass lands at u = (1, 0), index (5, 4), scaled by e^{(i/2) <t, theta u>}
        u = np.array([1.0, 0.0])
        t = np.array([1.0, 0.0])
        expected = np.exp(0.5j * (t @ self.THETA.entries @ u))
        assert out[5, 4] == pytest.approx(expected, abs=1e-15)
        out[5, 4] = 0.0
        assert np.abs(out).max() == 0.0

    def test_shift_past_box_gives_zero(self):
        grid = UniformGrid(2, 8, 1.0)
        xi = np.ones((8, 8))
        out = grid_unitary_apply(grid, self.THETA, (9.0, 0.0), xi)
        assert np.abs(out).max() == 0.0

    def test_state_shape_mismatch(self):
        grid = UniformGrid(2, 8, 1.0)
        with pytest.raises(ValueError):
            grid_unitary_apply(grid, self.THETA, (1.0, 0.0), np.ones((8, 7)))


class TestCommutationPhase:
    THETA = ThetaMatrix.from_upper(2, [np.pi])

    def test_unit_shifts_give_phase_i(self):
        # <t, theta s> = pi for t = e1, s = e2, so the phase is e^{i pi/2}
        assert ccr_phase((1.0, 0.0), (0.0, 1.0), self.THETA) == pytest.approx(1j, abs=1e-15)

    def test_phase_antisymmetry(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            t = rng.normal(size=2)
            s = rng.normal(size=2)
            prod = ccr_phase(t, s, self.THETA) * ccr_phase(s, t, self.THETA)
            assert prod == pytest.approx(1.0, abs=1e-14)

    def test_equal_shifts_give_phase_one(self):
        assert ccr_phase((1.5, -2.0), (1.5, -2.0), self.THETA) == pytest.approx(1.0, abs=1e-15)

    def test_unit_shift_residual(self):
        grid = UniformGrid(2, 64, 0.5)
        assert ccr_phase_residual((1.0, 0.0), (0.0, 1.0), self.THETA, grid) < 1e-14

    def test_equal_shift_residual(self):
        grid = UniformGrid(2, 64, 0.5)
        assert ccr_phase_residual((1.5, -2.0), (1.5, -2.0), self.THETA, grid) < 1e-14

    def test_random_aligned_residual(self):
        grid = UniformGrid(2, 64, 0.5)
        rng = np.random.default_rng(4)
        for _ in range(5):
            t = 0.5 * rng.integers(-4, 5, size=2).astype(float)
            s = 0.5 * rng.integers(-4, 5, size=2).astype(float)
            assert ccr_phase_residual(t, s, self.THETA, grid) < 1e-13

    def test_misaligned_shift_rejected(self):
        grid = UniformGrid(2, 64, 0.5)
        with pytest.raises(ValueError):
            ccr_phase_residual((0.3, 0.0), (0.0, 0.5), self.THETA, grid)

    def test_no_interior_window_rejected(self):
        grid = UniformGrid(2, 8, 1.0)
        with pytest.raises(ValueError):
            ccr_phase_residual((6.0, 0.0), (6.0, 0.0), self.THETA, grid)


class TestMultiplierIdentity:
    def test_identity_transform(self):
        assert multiplier_identity_residual(np.eye(2), SpherePoly.coordinate(2, 1), 2) < 1e-15

    def test_diagonal_stretch(self):
        r = multiplier_identity_residual(np.diag([2.0, 1.0]), SpherePoly.coordinate(2, 1), 2)
        assert r < 1e-14

    def test_random_symplectic_d4(self):
        g = random_sp_block(4, np.random.default_rng(8))
        b = SpherePoly(4, {(1, 1, 0, 0): 1.0})
        assert multiplier_identity_residual(g, b, 4) < 1e-13

    def test_singular_g_rejected(self):
        with pytest.raises(ValueError):
            multiplier_identity_residual(np.diag([1.0, 0.0]), SpherePoly.coordinate(2, 1), 2)


class TestDecayProfiles:
    def test_identity_transform_profile_is_zero(self):
        prof = h_decay_profile(np.eye(2), 2, [10.0, 100.0])
        assert prof.sups == (0.0, 0.0)

    def test_stretch_profile_is_bounded(self):
        prof = h_decay_profile(np.diag([2.0, 0.5]), 2, [10.0, 50.0, 250.0, 1000.0])
        assert prof.bounded_ratio() <= 1.05
        # the last two shells agree to well under the 20% slack
        assert abs(prof.sups[-1] / prof.sups[-2] - 1.0) < 0.2

    def test_cell_sums_stabilise(self):
        prof = h_decay_profile(np.diag([2.0, 0.5]), 2, [10.0, 50.0, 250.0, 1000.0], cell_radii=(200, 400))
        sums = prof.extra["cell_sums"]
        assert prof.extra["cell_radii"] == [200, 400]
        assert sums[1] >= sums[0]  # partial sums of a nonnegative series
        assert abs(sums[1] / sums[0] - 1.0) < 0.01

    def test_bounded_ratio_needs_four_radii(self):
        with pytest.raises(ValueError):
            h_decay_profile(np.diag([2.0, 0.5]), 2, [10.0, 100.0]).bounded_ratio()

    def test_singular_g_rejected(self):
        with pytest.raises(ValueError):
            h_decay_profile(np.diag([1.0, 0.0]), 2, [10.0])

    def test_profile_json_schema(self):
        doc = json.loads(h_decay_profile(np.eye(2), 2, [10.0], cell_radii=(4,)).to_json())
        assert set(doc) == {"radii", "sup", "cell_radii", "cell_sums"}


class TestRieszDifference:
    def test_axis_value_matches_closed_form(self):
        # on the k-th axis: |t|^2 (1 - R / sqrt(1 + R^2)), increasing to 1/2,
        # and the shell [R, 2R] attains its sup at the axis point of radius 2R
        prof = riesz_difference_decay(1, 2, [10.0, 50.0, 250.0, 1000.0])
        closed = lambda R: R * R * (1.0 - R / np.sqrt(1.0 + R * R))
        assert prof.sups[-1] == pytest.approx(closed(2000.0), abs=1e-12)
        assert prof.sups[-1] == pytest.approx(0.5, abs=1e-4)

    def test_profile_below_half_and_bounded(self):
        prof = riesz_difference_decay(2, 3, [10.0, 50.0, 250.0, 1000.0])
        assert max(prof.sups) <= 0.5 + 1e-9
        assert prof.bounded_ratio() <= 1.05

    def test_coordinate_out_of_range(self):
        with pytest.raises(ValueError):
            riesz_difference_decay(3, 2, [10.0])

    def test_json_roundtrip(self):
        prof = riesz_difference_decay(1, 2, [10.0, 20.0])
        doc = json.loads(prof.to_json())
        assert doc["radii"] == [10.0, 20.0]
        assert len(doc["sup"]) == 2
