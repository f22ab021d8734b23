import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blochnoise.rotations import (
    bloch_vector,
    d_matrix,
    rotate_axis,
    rotate_axis_xy,
    rotate_z,
    small_rotation,
)

from conftest import X_HAT, Y_HAT, Z_HAT

angle = st.floats(-20.0, 20.0, allow_nan=False)


def rodrigues(v, n, psi):
    n = np.asarray(n) / np.linalg.norm(n)
    return v * np.cos(psi) + np.cross(n, v) * np.sin(psi) + n * (n @ v) * (1 - np.cos(psi))


class TestRotateAxisXY:
    def test_identity(self):
        assert np.allclose(rotate_axis_xy(0.0, 0.0), np.eye(3), atol=1e-15)

    def test_pi_pulse_inverts_z(self):
        assert np.allclose(rotate_axis_xy(0.0, np.pi) @ Z_HAT, -Z_HAT, atol=1e-15)

    def test_quarter_turn_about_y(self):
        assert np.allclose(rotate_axis_xy(np.pi / 2, np.pi / 2) @ X_HAT, -Z_HAT, atol=1e-15)

    @given(angle, angle, st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_matches_rodrigues(self, phi, psi, v):
        v = np.array(v)
        n = (np.cos(phi), np.sin(phi), 0.0)
        assert np.allclose(rotate_axis_xy(phi, psi) @ v, rodrigues(v, n, psi), atol=1e-12)

    @given(angle, angle)
    def test_orthogonal_unit_determinant(self, phi, psi):
        R = rotate_axis_xy(phi, psi)
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(R) - 1.0) < 1e-12

    @given(angle, angle, angle)
    def test_same_axis_composition(self, phi, a, b):
        lhs = rotate_axis_xy(phi, a) @ rotate_axis_xy(phi, b)
        assert np.allclose(lhs, rotate_axis_xy(phi, a + b), atol=1e-12)

    @given(angle, angle)
    def test_conjugation_by_rz(self, phi, psi):
        lhs = rotate_axis_xy(phi, psi)
        rhs = rotate_z(phi) @ rotate_axis_xy(0.0, psi) @ rotate_z(-phi)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_negative_angle_is_inverse(self):
        R = rotate_axis_xy(0.4, 1.3)
        assert np.allclose(rotate_axis_xy(0.4, -1.3), R.T, atol=1e-15)

    @given(angle, angle, st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
    def test_norm_preserved(self, phi, psi, v):
        v = np.array(v)
        out = rotate_axis_xy(phi, psi) @ v
        assert abs(np.linalg.norm(out) - np.linalg.norm(v)) <= 1e-12 * max(1.0, np.linalg.norm(v))


class TestRotateZ:
    def test_identity(self):
        assert np.allclose(rotate_z(0.0), np.eye(3))

    def test_quarter_turn(self):
        assert np.allclose(rotate_z(np.pi / 2) @ X_HAT, Y_HAT, atol=1e-15)

    def test_inverse_pair(self):
        assert np.allclose(rotate_z(0.3) @ rotate_z(-0.3), np.eye(3), atol=1e-15)


class TestSmallRotation:
    def test_zero_is_identity(self):
        assert np.array_equal(small_rotation(0.0, 0.0, 0.0), np.eye(3))

    def test_literal_first_order_matrix(self):
        expected = np.array([[1.0, -0.01, -0.02], [0.01, 1.0, 0.0], [0.02, 0.0, 1.0]])
        assert np.allclose(small_rotation(0.0, 0.01, 0.02), expected, atol=1e-15)

    def test_conjugated_deflects_y(self):
        j = (small_rotation(np.pi / 2, 0.01, 0.0) - np.eye(3)) @ Y_HAT
        assert np.allclose(j, [-0.01, 0.0, 0.0], atol=1e-15)

    @given(angle, st.floats(-1e-4, 1e-4), st.floats(-1e-4, 1e-4))
    def test_orthogonal_to_first_order(self, phi, jy, jz):
        M = small_rotation(phi, jy, jz)
        assert np.abs(M.T @ M - np.eye(3)).max() <= 1e-7


class TestDMatrix:
    def test_special_case_is_yz_identity(self):
        D = d_matrix(0.0, X_HAT)
        assert np.allclose(D, np.diag([0.0, 1.0, 1.0]))

    def test_polar_final_vector(self):
        D = d_matrix(0.0, Z_HAT)
        expected = np.zeros((3, 3))
        expected[0, 2] = -1.0
        assert np.allclose(D, expected, atol=1e-15)

    @given(angle, st.floats(-1.6, 1.6), angle)
    def test_first_column_zero(self, phi, th, ph):
        assert np.array_equal(d_matrix(phi, bloch_vector(th, ph))[:, 0], np.zeros(3))

    @given(angle, st.floats(-1.6, 1.6), angle, st.floats(-1, 1), st.floats(-1, 1))
    def test_consistent_with_small_rotation(self, phi, th, ph, a, b):
        # D maps (., jy, jz) to the first-order deflection of J
        J = bloch_vector(th, ph)
        jy, jz = 1e-3 * a, 1e-3 * b
        direct = (small_rotation(phi, jy, jz) - np.eye(3)) @ J
        assert np.allclose(d_matrix(phi, J) @ [0.0, jy, jz], direct, atol=1e-15)


def test_rotate_axis_normalizes():
    assert np.allclose(rotate_axis((0, 0, 5.0), np.pi / 2) @ X_HAT, Y_HAT, atol=1e-15)


def test_rotate_axis_rejects_zero_axis():
    with pytest.raises(ValueError):
        rotate_axis((0, 0, 0), 1.0)


def test_bloch_vector_convention():
    assert np.allclose(bloch_vector(0.0, 0.0), X_HAT)
    assert np.allclose(bloch_vector(np.pi / 2, 0.3), Z_HAT)
    assert np.allclose(bloch_vector(0.0, np.pi / 2), Y_HAT)
