"""Acceptance criteria, one test each; verdict lines are printed in the pytest summary.

Run directly with ``python3 tests/test_acceptance.py`` for the verdict lines alone.
"""

import json
import math
import time

import numpy as np
import pytest

from blochnoise.cli import main as cli_main
from blochnoise.covariance import (
    integrate_transfer,
    neb_matrix,
    noise_matrix_tilde,
    transfer_tilde,
    transform_covariance,
)
from blochnoise.deflection import deflection_special
from blochnoise.montecarlo import McConfig, mc_tone_transfer, mc_white_noise, propagate_tone
from blochnoise.rotations import bloch_vector, rotate_axis_xy
from blochnoise.sequences import build_sequence, closed_form_noise, propagate_noise
from blochnoise.spectra import Tones, White
from blochnoise.static_errors import cancellation_order, zero_sensitivity_phase

from conftest import X_HAT, record_criterion

PI = np.pi
COMPOSITES = ("single_pi", "corpse_pi", "scrofulous_pi", "bb1_pi")


def test_criterion_1_closed_form_equivalence():
    F_R, L0 = 1.0, 1.0
    grid = [(th, ph) for th in np.linspace(-PI / 2, PI / 2, 19)
            for ph in np.linspace(0, 2 * PI, 19, endpoint=False)]
    seqs = {k: build_sequence(k, F_R) for k in COMPOSITES}
    t0 = time.perf_counter()
    engine = {k: [propagate_noise(bloch_vector(th, ph), seqs[k], L0).final_noise
                  for th, ph in grid] for k in COMPOSITES}
    runtime = time.perf_counter() - t0
    worst = 0.0
    for k in COMPOSITES:
        for (th, ph), W in zip(grid, engine[k]):
            Wc, _ = closed_form_noise(k, th, ph, F_R, L0)
            worst = max(worst, np.abs(W - Wc).max() / np.trace(Wc))
    ok = worst <= 1e-9 and runtime < 1.0
    record_criterion(1, "engine vs closed-form equivalence", ok,
                     f"max rel err {worst:.2e} (tol 1e-9), engine runtime {runtime:.3f} s (< 1 s)")
    assert ok


def test_criterion_2_white_quadrature():
    worst = 0.0
    for psi in (PI / 2, PI, 2 * PI, 4 * PI):
        res = integrate_transfer(White(1.0), psi, 1.0, x_max=200)
        exact = neb_matrix(psi, 1.0)
        worst = max(worst, np.abs(res.total - exact).max() / np.abs(exact).max())
    ok = worst <= 1e-4
    record_criterion(2, "white-noise quadrature vs NEB", ok,
                     f"max rel err {worst:.2e} over psi in {{pi/2, pi, 2pi, 4pi}} (tol 1e-4)")
    assert ok


def test_criterion_3_tone_monte_carlo():
    t0 = time.perf_counter()
    worst, worst_stat, cases = 0.0, 0.0, 0
    for psi in (PI, 2 * PI, 4 * PI):
        for x in (0.5, 1.0, 1.125, 2.0, 3.0):
            est = mc_tone_transfer(psi, x, McConfig(10000, seed=2024))
            ref = transfer_tilde(psi, x)
            worst = max(worst, np.abs(est.z_scores(ref)).max())
            worst_stat = max(worst_stat, np.abs(est.z_scores(ref, combined=False)).max())
            cases += 1
    runtime = time.perf_counter() - t0
    nulls = abs(transfer_tilde(PI, 3.0)[2, 2]) < 1e-12 and abs(transfer_tilde(2 * PI, 2.0)[2, 2]) < 1e-12
    ok = worst <= 3.0 and runtime < 120 and nulls
    record_criterion(3, "Monte Carlo tone oracle", ok,
                     f"{cases} cases x 9 entries, max |z| {worst:.2f} (tol 3, SE combined with "
                     f"systematic error; statistical-only max |z| {worst_stat:.1f}), "
                     f"runtime {runtime:.1f} s (< 120 s)")
    assert ok


def test_criterion_4_white_monte_carlo():
    F_R, L0 = 1.0, 1e-6
    est = mc_white_noise(build_sequence("single_pi", F_R), X_HAT, L0, McConfig(100000, seed=4))
    exact = PI**2 * F_R * L0 * np.diag([0.0, 1.0, 1.0])
    trace_err = abs(np.trace(est.mean_matrix) / np.trace(exact) - 1)
    cfg = McConfig(20000, seed=5)
    traces = {}
    for n in (1, 2, 4):
        e = mc_white_noise(build_sequence("spin_echo", F_R, n=n, tau=0.25, variant="alternating"),
                           X_HAT, L0, cfg)
        se = math.sqrt(np.sum(e.combined_error.diagonal() ** 2))
        traces[n] = (np.trace(e.mean_matrix), se)
    per_pulse = PI**2 * F_R * L0 * 2
    z_lin = [abs(t - n * per_pulse) / se for n, (t, se) in traces.items()]
    ok = trace_err < 0.05 and max(z_lin) <= 3
    record_criterion(4, "Monte Carlo white-noise oracle", ok,
                     f"single pi trace err {100 * trace_err:.2f}% (tol 5%); spin echo "
                     f"Tr(W_N)/N = {', '.join(f'{traces[n][0] / n:.4g}' for n in traces)} vs "
                     f"{per_pulse:.4g}, max |z| {max(z_lin):.2f}")
    assert ok


def test_criterion_5_average_infidelity():
    rng = np.random.default_rng(55)
    v = rng.standard_normal((10000, 3))
    states = v / np.linalg.norm(v, axis=1, keepdims=True)
    analytic = {"corpse_pi": 13 * PI**2 / 9, "scrofulous_pi": PI**2, "bb1_pi": 5 * PI**2 / 3,
                "single_pi": PI**2 / 3}
    zs = {}
    for kind, target in analytic.items():
        seq = build_sequence(kind, 1.0)
        assert seq.total_angle * PI / 3 == pytest.approx(target)
        vals = np.array([propagate_noise(J, seq, 1.0).infidelity for J in states])
        zs[kind] = (vals.mean() - target) / (vals.std(ddof=1) / math.sqrt(len(vals)))
    ok = all(abs(z) <= 3 for z in zs.values())
    record_criterion(5, "average-infidelity identity", ok,
                     "z = " + ", ".join(f"{k} {z:+.2f}" for k, z in zs.items()) + " (tol 3)")
    assert ok


def test_criterion_6_cos_squared_law():
    b2 = 1e-6
    Vt = noise_matrix_tilde(Tones([(1.125, b2)]), PI, 1.0)
    worst = 0.0
    for phi in np.linspace(0, 2 * PI, 721, endpoint=False):
        J_f = rotate_axis_xy(phi, PI) @ X_HAT
        V = transform_covariance(Vt, phi, J_f)
        worst = max(worst, abs(V[2, 2] - Vt[2, 2] * np.cos(phi) ** 2) / Vt[2, 2])
    V90 = transform_covariance(Vt, PI / 2, rotate_axis_xy(PI / 2, PI) @ X_HAT)[2, 2]
    ok = worst <= 1e-12 and abs(V90) <= 1e-12 * Vt[2, 2]
    record_criterion(6, "cos^2 phi_R law", ok,
                     f"max rel deviation {worst:.1e} over 721 angles (tol 1e-12), "
                     f"V_zz(pi/2)/V~_zz = {V90 / Vt[2, 2]:.1e}")
    assert ok


def test_criterion_7_static_orders():
    corpse, bb1 = build_sequence("corpse_pi"), build_sequence("bb1_pi")
    phi_star = zero_sensitivity_phase(bb1, "amplitude")
    fits = {
        "CORPSE detuning phi_i=0": (cancellation_order(corpse, bloch_vector(0, 0), "detuning"), 6),
        "CORPSE detuning phi_i=pi/2": (cancellation_order(corpse, bloch_vector(0, PI / 2),
                                                          "detuning"), 4),
        f"BB1 amplitude phi_i={phi_star / PI:.4f}pi": (
            cancellation_order(bb1, bloch_vector(0, phi_star), "amplitude"), 10),
        "BB1 detuning phi_i=pi/2": (cancellation_order(bb1, bloch_vector(0, PI / 2), "detuning"),
                                    math.inf),
    }
    anchor = propagate_noise(X_HAT, build_sequence("single_pi", 1.0), 1.0).final_noise[2, 2]
    parts, ok = [], abs(anchor - PI**2) <= 1e-12 * PI**2
    for name, (fit, want) in fits.items():
        good = fit.order == want and fit.residual < 0.2
        ok &= good
        got = "exact" if fit.exact else f"{fit.order} (slope {fit.slope:.3f})"
        parts.append(f"{name} -> {got}")
    parts.append(f"single pi W~_zz(0,0) = {anchor:.6f} = pi^2")
    record_criterion(7, "static cancellation orders", ok, "; ".join(parts))
    assert ok


def test_criterion_8_resonant_growth():
    beta = 1e-3
    psi = np.linspace(4 * PI, 20 * PI, 321)
    jy, jz = deflection_special(psi, 1.0, beta, 0.0)
    J = propagate_tone(psi, 1.0, beta, 0.0, 512)
    analytic = np.hypot(jy, jz) / (beta * psi / 2) - 1
    numeric = np.hypot(J[:, 1], J[:, 2]) / (beta * psi / 2) - 1
    worst = max(np.abs(analytic).max(), np.abs(numeric).max())
    ok = worst <= 0.10
    record_criterion(8, "resonant growth beta psi/2", ok,
                     f"max envelope deviation {100 * worst:.2f}% over psi in [4pi, 20pi] "
                     "(analytic and stepwise; tol 10%)")
    assert ok


def test_criterion_9_determinism(tmp_path):
    runs = {
        "tone": ["--target", "tone", "--psi", "3.141592653589793", "--x", "1.125"],
        "white": ["--target", "white", "--kind", "bb1_pi", "--l0", "1e-6", "--ji", "0,1,0"],
    }
    same = {}
    for name, args in runs.items():
        blobs = []
        for w in (1, 8):
            out = tmp_path / f"{name}_{w}.json"
            cli_main(["mc-verify", *args, "--samples", "6000", "--seed", "31337",
                      "--workers", str(w), "--out", str(out)])
            blobs.append(out.read_bytes())
        same[name] = blobs[0] == blobs[1] and "workers" not in json.loads(blobs[0])
    ok = all(same.values())
    record_criterion(9, "determinism across workers", ok,
                     ", ".join(f"{k} reports byte-identical (1 vs 8 workers): {v}"
                               for k, v in same.items()))
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
