"""SO(3) rotations of the Bloch vector.

Conventions: a rotation R(phi_R, psi) turns vectors counterclockwise (right-hand
rule) through ``psi`` about the in-plane axis (cos phi_R, sin phi_R, 0).
All matrices are dense 3x3 float arrays.
"""

import numpy as np

__all__ = [
    "rotate_axis",
    "rotate_axis_xy",
    "rotate_z",
    "small_rotation",
    "d_matrix",
    "bloch_vector",
]


def _skew(n):
    return np.array([[0.0, -n[2], n[1]],
                     [n[2], 0.0, -n[0]],
                     [-n[1], n[0], 0.0]])


def rotate_axis(axis, angle):
    """Rodrigues rotation through ``angle`` about ``axis`` (normalized here)."""
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if not (norm > 0 and np.isfinite(norm)):
        raise ValueError("rotation axis must be finite and nonzero")
    n = n / norm
    k = _skew(n)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotate_axis_xy(phi_R, psi):
    """Rotation through ``psi`` about the equatorial axis at azimuth ``phi_R``.

    Negative ``psi`` rotates by ``|psi|`` in the opposite sense.
    """
    return rotate_axis((np.cos(phi_R), np.sin(phi_R), 0.0), psi)


def rotate_z(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s, 0.0],
                     [s, c, 0.0],
                     [0.0, 0.0, 1.0]])


def small_rotation(phi_R, jy_tilde, jz_tilde):
    """First-order small rotation r(phi_R) = R_z(phi_R) r(0) R_z(-phi_R).

    ``r(0)`` is the linearized ``R_y(-jz) R_z(jy)``; it is orthogonal only to
    first order in the deflection angles, and deliberately not completed to an
    exact rotation.
    """
    r0 = np.array([[1.0, -jy_tilde, -jz_tilde],
                   [jy_tilde, 1.0, 0.0],
                   [jz_tilde, 0.0, 1.0]])
    return rotate_z(phi_R) @ r0 @ rotate_z(-phi_R)


def d_matrix(phi_R, J_f_ideal):
    """Map from special-case deflections (0, jy, jz) to the lab deflection.

    For ideal final vector ``J_f_ideal`` and axis azimuth ``phi_R`` the lab
    deflection is ``D @ (0, jy, jz)``; covariances transform as ``D M D^T``.
    """
    Jx, Jy, Jz = np.asarray(J_f_ideal, dtype=float)
    c, s = np.cos(phi_R), np.sin(phi_R)
    return np.array([[0.0, -Jy, -Jz * c],
                     [0.0, Jx, -Jz * s],
                     [0.0, 0.0, Jx * c + Jy * s]])


def bloch_vector(theta, phi):
    """Unit vector with polar angle ``theta`` measured from the x-y plane."""
    return np.array([np.cos(theta) * np.cos(phi),
                     np.cos(theta) * np.sin(phi),
                     np.sin(theta)])
