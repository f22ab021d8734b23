"""Mapping local-oscillator phase noise onto Bloch-vector covariance.

A resonant rotation driven through a noisy LO wobbles its rotation axis in
the x-y plane. To first order in the phase excursion this deflects the final
Bloch vector by ``j``, whose covariance ``W = <j j^T>`` follows from the
phase-noise spectrum through a filter (transfer) function. This package
evaluates that mapping for single pulses, composite pulses and spin-echo
trains, and cross-checks it by direct Monte Carlo integration.
"""

__version__ = "0.1.0"

from .covariance import (
    TransferIntegral,
    integrate_transfer,
    neb_matrix,
    noise_matrix_large_psi,
    noise_matrix_tilde,
    project_variance,
    transfer_tilde,
    transform_covariance,
)
from .deflection import deflect_general, deflection_special
from .montecarlo import McConfig, McEstimate, mc_tone_transfer, mc_white_noise
from .rotations import bloch_vector, d_matrix, rotate_axis, rotate_axis_xy, small_rotation
from .sequences import (
    PulseSequence,
    RotationStep,
    build_sequence,
    closed_form_noise,
    fidelity_metrics,
    load_sequence,
    propagate_noise,
)
from .spectra import PowerLaw, Tabulated, Tones, White, dbc_to_linear, read_datasheet
from .static_errors import StaticError, cancellation_order, static_error_metrics, zero_sensitivity_phase
