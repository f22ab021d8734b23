"""Static amplitude and detuning errors, and how well sequences cancel them.

A fractional amplitude error ``epsilon`` scales each rotation angle to
``psi (1 + epsilon)``; a detuning ``delta = (f_LO - f_a) / f_R`` tilts the
rotation axis out of the x-y plane by ``arctan(delta)``. By default the
rotation angle is not stretched by the generalized Rabi factor
``sqrt(1 + delta^2)``; ``stretch=True`` selects that variant.

Cancellation orders are measured on the squared metrics ``W_zz,st = j_z^2``
and ``1 - F_st = |j|^2 / 4`` by a log-log fit over a geometric error sweep,
evaluated in extended precision so high orders are not swamped by round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .rotations import rotate_axis, rotate_axis_xy

__all__ = [
    "StaticError",
    "StaticErrorMetrics",
    "OrderFit",
    "EXACT_FLOOR",
    "rotation_with_errors",
    "static_error_metrics",
    "cancellation_order",
    "zero_sensitivity_phase",
]

EXACT_FLOOR = 1e-28
AMBIGUOUS_RESIDUAL = 0.2


@dataclass(frozen=True)
class StaticError:
    epsilon: float = 0.0
    delta: float = 0.0

    @property
    def perturbative(self):
        return abs(self.epsilon) < 1 and abs(self.delta) < 1


@dataclass(frozen=True)
class StaticErrorMetrics:
    j_st: np.ndarray
    w_zz: float
    infidelity: float


@dataclass(frozen=True)
class OrderFit:
    """Result of a cancellation-order sweep.

    ``order`` is an even integer, or ``math.inf`` when the metric stays below
    :data:`EXACT_FLOOR` over the whole sweep. ``residual`` is the distance of
    the fitted slope from ``order``; fits with ``residual > 0.2`` are flagged
    ``ambiguous``.
    """

    order: float
    slope: float
    residual: float
    rms: float
    ambiguous: bool
    errors: tuple
    metrics: tuple

    @property
    def exact(self):
        return math.isinf(self.order)


def _tilted_axis(phi_R, delta):
    return (math.cos(phi_R), math.sin(phi_R), delta)


def rotation_with_errors(phi_R, psi, err, *, stretch=False):
    """Rotation matrix of one pulse under static errors ``err``."""
    if err.epsilon == 0 and err.delta == 0:
        return rotate_axis_xy(phi_R, psi)
    angle = psi * (1.0 + err.epsilon)
    if stretch:
        angle *= math.sqrt(1.0 + err.delta**2)
    return rotate_axis(_tilted_axis(phi_R, err.delta), angle)


def static_error_metrics(seq, J_i, err, *, stretch=False):
    """Deflection of ``J_i`` caused by ``err`` and the two squared metrics."""
    J_i = np.asarray(J_i, dtype=float)
    if J_i.shape != (3,) or abs(np.linalg.norm(J_i) - 1.0) > 1e-9:
        raise ValueError("J_i must be a unit 3-vector")
    J, J0 = J_i.copy(), J_i.copy()
    for s in seq.steps:
        J = rotation_with_errors(s.phi, s.psi, err, stretch=stretch) @ J
        J0 = rotate_axis_xy(s.phi, s.psi) @ J0
    j = J - J0
    return StaticErrorMetrics(j, float(j[2] ** 2), float(j @ j / 4.0))


# extended-precision path used by the order fits

def _mp_rotate(v, axis, angle):
    n2 = sum(a * a for a in axis)
    n = [a / mpmath.sqrt(n2) for a in axis]
    c, s = mpmath.cos(angle), mpmath.sin(angle)
    dot = n[0] * v[0] + n[1] * v[1] + n[2] * v[2]
    cross = (n[1] * v[2] - n[2] * v[1], n[2] * v[0] - n[0] * v[2], n[0] * v[1] - n[1] * v[0])
    return [v[i] * c + cross[i] * s + n[i] * dot * (1 - c) for i in range(3)]


def _mp_deflection(seq, J_i, eps, delta, stretch):
    eps, delta = mpmath.mpf(eps), mpmath.mpf(delta)
    J = [mpmath.mpf(float(c)) for c in J_i]
    J0 = list(J)
    for s in seq.steps:
        phi, psi = mpmath.mpf(s.phi), mpmath.mpf(s.psi)
        ax0 = (mpmath.cos(phi), mpmath.sin(phi), mpmath.mpf(0))
        angle = psi * (1 + eps)
        if stretch:
            angle *= mpmath.sqrt(1 + delta**2)
        J = _mp_rotate(J, (ax0[0], ax0[1], delta), angle)
        J0 = _mp_rotate(J0, ax0, psi)
    return [a - b for a, b in zip(J, J0)]


def _metric(j, metric):
    if metric == "w_zz":
        return j[2] ** 2
    if metric == "infidelity":
        return (j[0] ** 2 + j[1] ** 2 + j[2] ** 2) / 4
    raise ValueError("metric must be 'w_zz' or 'infidelity'")


def cancellation_order(seq, J_i, which, metric="w_zz", *, start=1e-3, n_points=7,
                       ratio=2.0, dps=50, stretch=False):
    """Fit the power law ``metric ~ error^p`` and round ``p`` to an even integer.

    Parameters
    ----------
    seq : PulseSequence
    J_i : array_like
        Initial unit Bloch vector.
    which : {'amplitude', 'detuning'}
        Error swept; the other is held at zero.
    metric : {'w_zz', 'infidelity'}
    start, n_points, ratio : float, int, float
        Sweep ``start * ratio**k`` for ``k = 0 .. n_points - 1``.
    dps : int
        Decimal digits used for the propagation.
    """
    if which not in ("amplitude", "detuning"):
        raise ValueError("which must be 'amplitude' or 'detuning'")
    errors = [start * ratio**k for k in range(n_points)]
    values = []
    with mpmath.workdps(dps):
        for e in errors:
            args = (e, 0) if which == "amplitude" else (0, e)
            values.append(_metric(_mp_deflection(seq, J_i, *args, stretch), metric))
        if max(values) < EXACT_FLOOR:
            return OrderFit(math.inf, math.inf, 0.0, 0.0, False, tuple(errors),
                            tuple(float(v) for v in values))
        if min(values) <= 0:
            raise ArithmeticError("metric vanished at part of the sweep; cannot fit a power law")
        lx = np.array([float(mpmath.log(e)) for e in errors])
        ly = np.array([float(mpmath.log(v)) for v in values])
    slope, icpt = np.polyfit(lx, ly, 1)
    rms = float(np.sqrt(np.mean((slope * lx + icpt - ly) ** 2)))
    order = 2 * int(round(slope / 2.0))
    residual = float(abs(slope - order))
    return OrderFit(order, float(slope), residual, rms, residual > AMBIGUOUS_RESIDUAL,
                    tuple(errors), tuple(float(v) for v in values))


def zero_sensitivity_phase(seq, which, *, probe=1e-4, dps=60, stretch=False):
    """Azimuth ``phi_i`` in ``[0, pi)`` (with ``theta_i = 0``) where ``j_z`` cancels to leading order.

    The static deflection is linear in the initial vector, ``j = M J_i``, so
    ``j_z`` vanishes on the equator where ``M_zx cos(phi) + M_zy sin(phi) = 0``.
    The root drifts linearly with the probe error, so it is solved at
    ``probe`` and ``probe / 2`` and extrapolated to zero. A very small probe
    is avoided on purpose: sequence phases are doubles, and their rounding
    leaves a residual linear term that swamps high-order coefficients.
    """
    if which not in ("amplitude", "detuning"):
        raise ValueError("which must be 'amplitude' or 'detuning'")

    def root(p):
        args = (p, 0) if which == "amplitude" else (0, p)
        mzx = _mp_deflection(seq, (1.0, 0.0, 0.0), *args, stretch)[2]
        mzy = _mp_deflection(seq, (0.0, 1.0, 0.0), *args, stretch)[2]
        return mpmath.atan2(-mzx, mzy) % mpmath.pi

    with mpmath.workdps(dps):
        r1, r2 = root(mpmath.mpf(probe)), root(mpmath.mpf(probe) / 2)
        if abs(r1 - r2) > mpmath.pi / 2:  # straddles the wrap at pi
            r1 += mpmath.pi if r1 < r2 else -mpmath.pi
        return float((2 * r2 - r1) % mpmath.pi)
