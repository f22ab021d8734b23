"""Pulse sequences under white LO phase noise.

Steps are stored in execution order. The composite-pulse literature writes
sequences as operator products (time runs right to left); the builders here
reverse that once so every consumer can iterate ``seq.steps`` forwards.

White phase noise decorrelates successive pulses, so noise added by pulse k
is carried forward by later rotations and accumulates as

    W_k = R_k W_{k-1} R_k^T + V_k,   V_k = D(phi_k, J_k) L0 NEB(psi_k) D^T.

Free-evolution delays add no noise in this model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .covariance import neb_matrix
from .rotations import bloch_vector, d_matrix, rotate_axis_xy

__all__ = [
    "RotationStep",
    "PulseSequence",
    "PropagationResult",
    "BB1_PHASE",
    "KINDS",
    "build_sequence",
    "propagate_noise",
    "fidelity_metrics",
    "closed_form_noise",
    "load_sequence",
    "sequence_to_dict",
]

BB1_PHASE = math.acos(-0.25)
KINDS = ("single_pi", "corpse_pi", "scrofulous_pi", "bb1_pi", "spin_echo")


@dataclass(frozen=True)
class RotationStep:
    phi: float
    psi: float
    delay_before: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.phi) and math.isfinite(self.psi)
                and math.isfinite(self.delay_before)):
            raise ValueError("rotation step fields must be finite")
        if self.psi < 0:
            raise ValueError("rotation angle psi must be >= 0")
        if self.delay_before < 0:
            raise ValueError("delay must be >= 0")


@dataclass(frozen=True)
class PulseSequence:
    steps: tuple
    f_R: float
    trailing_delay: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        steps = tuple(s if isinstance(s, RotationStep) else RotationStep(*s) for s in self.steps)
        if not steps:
            raise ValueError("a pulse sequence needs at least one step")
        if not (self.f_R > 0 and math.isfinite(self.f_R)):
            raise ValueError("f_R must be finite and > 0")
        if self.trailing_delay < 0:
            raise ValueError("trailing delay must be >= 0")
        object.__setattr__(self, "steps", steps)

    @property
    def total_angle(self):
        return float(sum(s.psi for s in self.steps))

    @property
    def duration(self):
        pulses = self.total_angle / (2.0 * np.pi * self.f_R)
        return pulses + sum(s.delay_before for s in self.steps) + self.trailing_delay

    def ideal_unitary(self):
        """Product of the ideal rotations in execution order."""
        R = np.eye(3)
        for s in self.steps:
            R = rotate_axis_xy(s.phi, s.psi) @ R
        return R


@dataclass
class PropagationResult:
    """Per-step ideal vectors ``J_k`` and cumulative noise matrices ``W_k``."""

    ideal_vectors: np.ndarray
    noise_matrices: np.ndarray
    infidelity: float = field(init=False)

    def __post_init__(self):
        self.infidelity = float(np.trace(self.noise_matrices[-1]) / 4.0)

    @property
    def final_vector(self):
        return self.ideal_vectors[-1]

    @property
    def final_noise(self):
        return self.noise_matrices[-1]


def _reversed_product(*pairs):
    # operator-product notation R(a) R(b) R(c): c acts first
    return [RotationStep(phi, psi) for phi, psi in reversed(pairs)]


def build_sequence(kind, f_R=1.0, *, n=1, tau=0.0, variant="fixed_axis"):
    """Build a named sequence in execution order.

    ``kind`` is one of ``single_pi``, ``corpse_pi``, ``scrofulous_pi``,
    ``bb1_pi`` or ``spin_echo``. Spin echo uses ``n`` pi pulses with delays
    ``tau, 2 tau, ..., 2 tau`` before them and ``tau`` after the last; the
    ``alternating`` variant flips the axis between +x and -x starting at +x.
    """
    pi = np.pi
    if kind == "single_pi":
        steps = [RotationStep(0.0, pi)]
    elif kind == "corpse_pi":
        steps = _reversed_product((0.0, pi / 3), (pi, 5 * pi / 3), (0.0, 7 * pi / 3))
    elif kind == "scrofulous_pi":
        steps = _reversed_product((pi / 3, pi), (5 * pi / 3, pi), (pi / 3, pi))
    elif kind == "bb1_pi":
        p = BB1_PHASE
        steps = _reversed_product((0.0, pi), (p, pi), (3 * p, 2 * pi), (p, pi))
    elif kind == "spin_echo":
        if not (isinstance(n, (int, np.integer)) and n >= 1):
            raise ValueError("spin echo needs an integer number of pulses n >= 1")
        if not (tau >= 0 and math.isfinite(tau)):
            raise ValueError("spin echo delay tau must be finite and >= 0")
        if variant not in ("fixed_axis", "alternating"):
            raise ValueError("spin echo variant must be 'fixed_axis' or 'alternating'")
        steps = []
        for k in range(n):
            phi = pi if (variant == "alternating" and k % 2 == 1) else 0.0
            steps.append(RotationStep(phi, pi, tau if k == 0 else 2 * tau))
        return PulseSequence(tuple(steps), f_R, trailing_delay=tau,
                             name=f"spin_echo_{variant}_{n}")
    else:
        raise ValueError(f"unknown sequence kind {kind!r}; expected one of {KINDS}")
    return PulseSequence(tuple(steps), f_R, name=kind)


def propagate_noise(J_i, seq, l0):
    """Propagate white-noise covariance through ``seq`` starting from ``J_i``."""
    J = np.asarray(J_i, dtype=float)
    if J.shape != (3,) or abs(np.linalg.norm(J) - 1.0) > 1e-9:
        raise ValueError("J_i must be a unit 3-vector")
    if not (l0 >= 0 and math.isfinite(l0)):
        raise ValueError("l0 must be finite and >= 0")
    W = np.zeros((3, 3))
    vecs, mats = [], []
    for step in seq.steps:
        R = rotate_axis_xy(step.phi, step.psi)
        J = R @ J
        D = d_matrix(step.phi, J)
        V = D @ (l0 * neb_matrix(step.psi, seq.f_R)) @ D.T
        W = R @ W @ R.T + V
        vecs.append(J)
        mats.append(W)
    return PropagationResult(np.array(vecs), np.array(mats))


def fidelity_metrics(result, seq, l0):
    """``(1 - F, <1 - F>)``: state infidelity and its average over initial states."""
    avg = seq.total_angle * np.pi * seq.f_R * l0 / 3.0
    return result.infidelity, float(avg)


def _symmetric(xx, yy, zz, xy, yz, xz):
    return np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])


def closed_form_noise(kind, theta_i, phi_i, f_R, l0, *, n=1, variant="fixed_axis"):
    """Closed-form ``(W, 1 - F)`` for the named pi-pulse sequences.

    ``theta_i`` is measured from the x-y plane and ``phi_i`` from x. These
    expressions are an independent oracle for :func:`propagate_noise`.
    """
    pi = np.pi
    c2 = np.cos(theta_i) ** 2
    s2 = np.sin(theta_i) ** 2
    s2t = np.sin(2 * theta_i)
    cp, sp = np.cos(phi_i), np.sin(phi_i)
    s2p, c2p = np.sin(2 * phi_i), np.cos(2 * phi_i)
    unit = f_R * l0
    if kind == "corpse_pi":
        a = 13 * pi - 3 * math.sqrt(3)
        b = 13 * pi + 3 * math.sqrt(3)
        k = pi * unit / 3
        W = _symmetric(k * (a * c2 * sp**2 + b * s2), k * a * c2 * cp**2,
                       k * b * c2 * cp**2, 0.5 * k * a * c2 * s2p, 0.0,
                       0.5 * k * b * s2t * cp)
        infid = pi * unit / 12 * (13 * pi - 3 * math.sqrt(3) * np.cos(2 * theta_i)
                                  + b * c2 * cp**2)
    elif kind == "scrofulous_pi":
        k = 1.5 * pi**2 * unit
        W = _symmetric(k * (2 * c2 * sp**2 + s2), k * (2 * c2 * cp**2 + s2), k * c2,
                       k * c2 * s2p, -0.5 * k * s2t * sp, 0.5 * k * s2t * cp)
        infid = 3 / 16 * pi**2 * unit * (5 + np.cos(2 * theta_i))
    elif kind == "bb1_pi":
        k = 1.25 * pi**2 * unit
        W = _symmetric(k * (4 * c2 * sp**2 + s2), k * (4 * c2 * cp**2 + 3 * s2),
                       k * c2 * (2 - c2p), 2 * k * c2 * s2p, -1.5 * k * s2t * sp,
                       0.5 * k * s2t * cp)
        infid = 5 / 16 * pi**2 * unit * (4 + 2 * c2 - c2 * c2p)
    elif kind == "single_pi":
        k = pi**2 * unit
        cc = c2 * cp**2
        W = _symmetric(k * (1 - cc), k * cc, k * cc, 0.5 * k * c2 * s2p, 0.0,
                       0.5 * k * s2t * cp)
        infid = 0.25 * k * (1 + cc)
    elif kind == "spin_echo":
        if variant not in ("fixed_axis", "alternating"):
            raise ValueError("spin echo variant must be 'fixed_axis' or 'alternating'")
        jx, jy, jz = bloch_vector(theta_i, phi_i)
        s = (-1) ** (n + 1)
        k = n * pi**2 * unit
        W = k * _symmetric(1 - jx**2, jx**2, jx**2, s * jx * jy, 0.0, s * jx * jz)
        infid = 0.25 * k * (1 + jx**2)
    else:
        raise ValueError(f"unknown sequence kind {kind!r}; expected one of {KINDS}")
    return W, float(infid)


def sequence_to_dict(seq):
    return {
        "name": seq.name,
        "f_r_hz": seq.f_R,
        "trailing_delay_s": seq.trailing_delay,
        "steps": [{"phi_rad": s.phi, "psi_rad": s.psi, "delay_s": s.delay_before}
                  for s in seq.steps],
    }


def load_sequence(path_or_dict, f_R=None):
    """Load a sequence from a JSON file or an already-parsed mapping.

    Either explicit ``steps`` (list of ``{phi_rad, psi_rad, delay_s}``) or a
    ``builder`` name with its parameters (``n``, ``tau_s``, ``variant``).
    ``f_R`` overrides ``f_r_hz`` from the file.
    """
    if isinstance(path_or_dict, (str, Path)):
        data = json.loads(Path(path_or_dict).read_text())
    else:
        data = dict(path_or_dict)
    fr = f_R if f_R is not None else data.get("f_r_hz")
    if fr is None:
        raise ValueError("sequence needs f_r_hz (in the file or as an override)")
    if "builder" in data:
        return build_sequence(data["builder"], float(fr), n=int(data.get("n", 1)),
                              tau=float(data.get("tau_s", 0.0)),
                              variant=data.get("variant", "fixed_axis"))
    if "steps" not in data:
        raise ValueError("sequence file needs 'steps' or 'builder'")
    steps = tuple(RotationStep(float(s["phi_rad"]), float(s["psi_rad"]),
                               float(s.get("delay_s", 0.0))) for s in data["steps"])
    return PulseSequence(steps, float(fr), float(data.get("trailing_delay_s", 0.0)),
                         data.get("name", "custom"))
