"""Acceptance criteria, one test each.

Every test records a ``PASS``/``FAIL`` line (with the measured numbers) that
is printed in the pytest terminal summary; see ``conftest.py``.
"""
import io
import json
import math
import time

import numpy as np
import pytest

from critsys.bubble import closed_form_symmetric, log_derivative_check, solve_ground_state
from critsys.cli import run
from critsys.constants import boundary_constants, energy_constants, radial_decomposition, sobolev_masses
from critsys.geometry import (
    ellipsoid,
    ellipsoidal_hole,
    find_critical_points,
    mean_curvature,
    shell,
    sphere,
)
from critsys.halfspace import PHI0, PSI0, build_corrector, c3_crosscheck, decay_fit, default_probes, neumann_residual
from critsys.hyperbola import classify, q_from_p, regime_sign, remainder_ledger, threshold_q
from critsys.reduced_energy import d_star, predict_blowup, theta

from test_geometry import grid_search_minima, shape_operator_oracle
from test_reduced_energy import golden_min

RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
    assert ok, RESULTS[n]


def test_criterion_01_symmetric_bubble():
    t0 = time.perf_counter()
    sol = solve_ground_state(classify(4, 3.0, 3.0))
    elapsed = time.perf_counter() - t0
    r = np.linspace(0.0, 50.0, 5001)
    err = float(np.max(np.abs(sol.U(r) - 1.0 / (1.0 + r**2 / 8.0))))
    beta = abs(sol.beta_star - 1.0)
    record(1, err <= 1e-6 and beta <= 1e-8 and elapsed <= 5.0,
           f"sup|U - (1+r^2/8)^-1| = {err:.2e}, |beta*-1| = {beta:.2e}, {elapsed:.2f} s")


def test_criterion_02_sobolev_mass(sym4, asym5):
    S_U, _ = sobolev_masses(sym4)
    exact = 32 * math.pi**2 / 3
    rel = abs(S_U - exact) / exact
    printed = abs(S_U - 105.27544) / 105.27544
    a, b = sobolev_masses(asym5)
    rel_uv = abs(a - b) / abs(a)
    record(2, rel <= 1e-4 and printed <= 1e-4 and rel_uv <= 1e-6,
           f"int U^4 = {S_U:.8f} (rel {rel:.1e} vs 32pi^2/3), (5,11/4,2) mass mismatch {rel_uv:.1e}")


def test_criterion_03_boundary_constants(sym4):
    C1, _, C3, _ = boundary_constants(sym4)
    e1, e3 = 8 * math.sqrt(2) * math.pi**2, 12 * math.sqrt(2) * math.pi**2
    r1, r3 = abs(C1 - e1) / e1, abs(C3 - e3) / e3
    p1, p3 = abs(C1 - 111.65905) / e1, abs(C3 - 167.48858) / e3
    record(3, max(r1, r3, p1, p3) <= 1e-4, f"C1 = {C1:.6f} (rel {r1:.1e}), C3 = {C3:.6f} (rel {r3:.1e})")


def test_criterion_04_identity_asymmetric():
    t0 = time.perf_counter()
    sol = solve_ground_state(classify(5, 2.75, 2.0))
    ec = energy_constants(sol)
    dec = radial_decomposition(sol)["relative"]
    elapsed = time.perf_counter() - t0
    record(4, ec.identity_residual <= 1e-5 and dec <= 1e-5 and elapsed <= 30.0,
           f"identity residual {ec.identity_residual:.1e}, decomposition {dec:.1e}, {elapsed:.2f} s")


def test_criterion_05_lambda_and_positivity(ec_exact4, ec_asym5, below5):
    ecs = [ec_exact4, ec_asym5, energy_constants(below5), energy_constants(solve_ground_state(classify(6, 2.0, 2.0)))]
    spread = max(abs(ec.c4_at(0.3) - ec.c4_at(0.6)) / abs(ec.c4_at(0.3)) for ec in ecs[:2])
    tested = [ec for ec in ecs if ec.p >= ec.q > threshold_q(ec.N)]
    positive = all(ec.c2 > 0 and ec.c4 > 0 for ec in tested)
    record(5, spread <= 1e-6 and positive and len(tested) == 4,
           f"max |c4(0.3)-c4(0.6)|/c4 = {spread:.1e}, c2, c4 > 0 on {len(tested)} pairs")


def test_criterion_06_decay_laws(asym5, below5):
    cases = [(asym5, 3.0, 3.0), (below5, 1.5 * 3 - 2, 3.0)]
    worst_slope = worst_log = 0.0
    for sol, kU, kV in cases:
        t = sol.tail
        assert (t.k_U, t.k_V) == pytest.approx((kU, kV), abs=1e-14)
        worst_slope = max(worst_slope, abs(t.slope_U - kU), abs(t.slope_V - kV))
        lU, lV = log_derivative_check(sol)
        worst_log = max(worst_log, abs(lU + kU), abs(lV + kV))
    record(6, worst_slope <= 0.02 and worst_log <= 0.05,
           f"max tail-exponent error {worst_slope:.1e}, max log-derivative error {worst_log:.1e}")


TRUTH_TABLE = [
    (4, 1.5), (4, 1.9), (4, 2.5), (4, 3.0),
    (5, 1.1), (5, 1.3), (5, 4 / 3), (5, 1.4), (5, 2.0), (5, 2.3),
    (6, 1.2), (6, 1.4), (6, 1.8),
    (7, 1.1), (7, 1.3), (7, 1.7),
    (8, 1.1), (8, 1.2), (8, 1.5), (8, 1.6),
]


def test_criterion_07_exponent_ledger():
    thr = threshold_q(5)
    sigma = remainder_ledger(5, 2.75, 2.0).sigma
    mismatches = 0
    for N, q in TRUTH_TABLE:
        p = q_from_p(N, q)
        assert p >= q
        expected = q >= 4 / (N - 2) - 1e-12
        mismatches += remainder_ledger(N, p, q).hypotheses_ok != expected
    n_true = sum(q >= 4 / (N - 2) - 1e-12 for N, q in TRUTH_TABLE)
    record(7, thr == 1.0 and abs(sigma - 0.5) <= 1e-14 and mismatches == 0 and len(TRUTH_TABLE) == 20,
           f"threshold_q(5) = {thr!r}, sigma = {sigma!r}, truth table {20 - mismatches}/20 ({n_true} admissible)")


def test_criterion_08_corrector_suite(exact4, asym5, ec_exact4, ec_asym5):
    t0 = time.perf_counter()
    worst_neumann = worst_slope = worst_c3 = 0.0
    for sol, ec in ((exact4, ec_exact4), (asym5, ec_asym5)):
        N = sol.N
        rho = (0.5,) * (N - 1)
        phi = build_corrector(sol, rho, PHI0)
        psi = build_corrector(sol, rho, PSI0)
        worst_neumann = max(worst_neumann, neumann_residual(phi, default_probes(N)),
                            neumann_residual(psi, default_probes(N)))
        g = {4: 1.0, 5: 2.0}[N]  # gamma for (4,3,3) and (5,11/4,2)
        worst_slope = max(worst_slope, abs(decay_fit(phi) + g), abs(decay_fit(psi) + (N - 3)))
        lhs, rhs = c3_crosscheck(sol, rho, ec.C3)
        worst_c3 = max(worst_c3, abs(lhs - rhs) / abs(rhs))
    elapsed = time.perf_counter() - t0
    record(8, worst_neumann <= 1e-3 and worst_slope <= 0.1 and worst_c3 <= 1e-3 and elapsed <= 120,
           f"Neumann {worst_neumann:.1e}, slope error {worst_slope:.2f}, c3 {worst_c3:.1e}, {elapsed:.1f} s")


def test_criterion_09_geometry():
    sph = max(abs(mean_curvature(sphere(R, 4), [R, 0, 0, 0]).H - 1 / R) for R in (0.5, 1.0, 2.0, 7.5))
    inner = abs(mean_curvature(shell(1.0, 2.0, 4), [1.0, 0, 0, 0]).H + 1.0)
    axes = np.array([2.0, 1.0, 1.0, 1.0])
    tip = mean_curvature(ellipsoid(axes), [2.0, 0, 0, 0]).H
    kappa = shape_operator_oracle(lambda y: 2 * y / axes**2, lambda y: np.diag(2 / axes**2), np.array([2.0, 0, 0, 0]))
    tip_err = max(abs(tip - 2.0), abs(tip - float(np.mean(kappa))))
    hole = ellipsoidal_hole([1.5, 1, 1, 1], 3.0)
    oracle = grid_search_minima(hole)
    mins = [pt for pt, rep in find_critical_points(hole) if rep.H < 0 and rep.nondegenerate]
    dist = max(min(np.linalg.norm(pt.x - o) for o in oracle) for pt in mins)
    ok = sph <= 1e-10 and inner <= 1e-10 and tip_err <= 1e-8 and len(mins) == 2 and dist <= 1e-6
    record(9, ok, f"sphere {sph:.1e}, shell {inner:.1e}, tip {tip_err:.1e}, "
                  f"{len(mins)} hole minima within {dist:.1e} of grid search")


def test_criterion_10_reduced_energy(ec_exact4):
    d0, _ = d_star(ec_exact4, -1.0)
    err = abs(d0 - 1 / (6 * math.sqrt(2)))
    worst = 0.0
    for H in (-0.5, -1.0, -3.0):
        dh, _ = d_star(ec_exact4, H)
        g = golden_min(lambda d: theta(ec_exact4, H, d), 1e-4, 10.0)
        shifted = lambda d: -ec_exact4.c4 * H * (d - g) - ec_exact4.c2 * math.log1p((d - g) / g)  # noqa: E731
        g = golden_min(shifted, g * (1 - 1e-6), g * (1 + 1e-6), tol=1e-16)
        worst = max(worst, abs(g - dh) / dh)
    hole = ellipsoidal_hole([1.5, 1, 1, 1], 3.0)
    pred = predict_blowup(hole, ec_exact4, classify(4, 3.0, 3.0))
    ratios = [delta / eps for eps, delta in pred.delta_samples]
    spread = (max(ratios) - min(ratios)) / pred.d0
    eps_ok = [e for e, _ in pred.delta_samples] == [1e-2, 1e-3, 1e-4]
    record(10, err <= 1e-8 and worst <= 1e-8 and spread <= 1e-14 and eps_ok,
           f"|d0 - 1/(6 sqrt 2)| = {err:.1e}, golden-section rel {worst:.1e}, delta/eps spread {spread:.1e}")


def test_criterion_11_regime_table():
    p, q = 2.75, 2.0
    table = {s: regime_sign(*s, p, q) for s in ((-1, -1), (1, 1), (1, -1), (-1, 1))}
    expect = {(-1, -1): (1, -1), (1, 1): (-1, 1), (1, -1): (-1, 1), (-1, 1): (1, -1)}
    ok = all((table[s].c2_sign, table[s].admissible_H_sign) == v and not table[s].degenerate
             for s, v in expect.items())
    sym = {s: regime_sign(*s, 3.0, 3.0) for s in expect}
    ok = ok and sym[(1, -1)].degenerate and sym[(-1, 1)].degenerate
    ok = ok and not sym[(1, 1)].degenerate and not sym[(-1, -1)].degenerate
    record(11, ok, "four sign cases reproduced; mixed signs degenerate at p = q")


def test_criterion_12_determinism(tmp_path, monkeypatch):
    monkeypatch.setenv("CRITSYS_CACHE_DIR", str(tmp_path / "cache"))
    monkeypatch.delenv("CRITSYS_CONFIG", raising=False)

    def call(*argv):
        out = io.StringIO()
        return run(list(argv), stdout=out, stderr=io.StringIO()), out.getvalue()

    code, _ = call("bubble", "solve", "--N", "4", "--p", "3", "--out", str(tmp_path / "b4.json"))
    assert code == 0
    first = call("verify", "--bubble", str(tmp_path / "b4.json"))
    second = call("verify", "--bubble", str(tmp_path / "b4.json"))
    doc = json.loads(first[1])
    ok = first[0] == second[0] == 0 and first[1] == second[1] and doc["results"]["passed"]
    n = len(doc["results"]["checks"])
    record(12, ok, f"verify passed {n} checks, outputs byte-identical: {first[1] == second[1]}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
