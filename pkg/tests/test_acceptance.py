"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a single PASS/FAIL line (shown with pytest -v or -s).
Tolerances are pinned here, not configurable.
"""

import math
import time

import numpy as np
import pytest

from kkfields.energyflow import (
    ConformalChange,
    conformal_energy_delta,
    grid_variation_duality_residual,
    parallel_energy,
    random_unit_field,
    unit_flow_torus,
    yano_integral,
)
from kkfields.fields import Conformal, KillingRotation, QuadraticGradient, UnitAngleField
from kkfields.geometry import (
    ConformalTorus,
    FlatTorus,
    RoundSphere,
    product_sine_scalar,
    random_trig_scalar,
)
from kkfields.kkmetrics import (
    KKMetricSpec,
    constant_profile,
    exponential_profile,
    koszul_residuals,
    power_profile,
    presets,
    validate,
)
from kkfields.profiles import Obstruction, closed_form_B, enlarged_metric, obstruction_check
from kkfields.quadrature import sphere2_quadrature
from kkfields.suite import _conformal_spec_sweep, sample_duality_pair
from kkfields.tension import (
    conformal_defect,
    constant_norm_condition,
    evaluate_residuals,
    surface_identity_residual,
    tension,
)

S2 = RoundSphere(2)
S3 = RoundSphere(3)
S4 = RoundSphere(4)
S5 = RoundSphere(5)
S7 = RoundSphere(7)
T2 = FlatTorus()
CT = ConformalTorus(product_sine_scalar(0.3))
HOPF = KillingRotation((1.0, 1.0), 4)


def _spec(B, C=None, t_max=4.0, name="spec"):
    return KKMetricSpec(constant_profile(1.0), B,
                        C if C is not None else constant_profile(0.0), t_max, name)


def _report(criterion: str, passed: bool, detail: str):
    state = "PASS" if passed else "FAIL"
    print(f"[{state}] {criterion}: {detail}")
    assert passed, f"{criterion}: {detail}"


def test_criterion_01_connection_koszul():
    rng = np.random.default_rng(101)
    start = time.monotonic()
    worst = 0.0
    for spec in (presets("sasaki"), presets("cheeger-gromoll"), presets("g_mr", m=2, r=0)):
        compat, torsion = koszul_residuals(S3, spec, rng, samples=50)
        worst = max(worst, compat, torsion)
    elapsed = time.monotonic() - start
    _report("criterion 1 (connection Koszul residuals)",
            worst < 1e-6 and elapsed < 5.0,
            f"max residual {worst:.3e} (tol 1e-6), runtime {elapsed:.2f}s (< 5s)")


def test_criterion_02_duality():
    rng = np.random.default_rng(102)
    spec = _spec(exponential_profile(1.0, -0.5), constant_profile(0.1), t_max=30.0)
    worst32 = 0.0
    worst_ratio = 0.0
    for _ in range(10):
        fld, var = sample_duality_pair(T2, spec, rng)
        r32 = grid_variation_duality_residual(T2, spec, fld, var, 32)
        r64 = grid_variation_duality_residual(T2, spec, fld, var, 64)
        worst32 = max(worst32, r32)
        worst_ratio = max(worst_ratio, r64 / max(r32, 1e-300))
    _report("criterion 2 (tension-energy duality)",
            worst32 < 1e-3 and worst_ratio <= 0.5,
            f"max residual {worst32:.3e} at 32x32 (tol 1e-3), "
            f"worst 64x64 ratio {worst_ratio:.3f} (<= 0.5)")


def test_criterion_03_hopf_harmonic_map():
    rng = np.random.default_rng(103)
    pts = S3.random_points(rng, 100)
    worst = 0.0
    for spec in (_spec(exponential_profile(1.0, -1.0), name="B=e^-t"),
                 presets("g_mr", m=2, r=0)):
        rep = evaluate_residuals(S3, spec, HOPF, pts, tol=1e-8)
        assert rep.verdict == "harmonic map", spec.name
        worst = max(worst, rep.max_norm_G)
    _report("criterion 3 (Hopf harmonic map)", worst < 1e-8,
            f"max |tau|_G {worst:.3e} over 100 points, both metrics (tol 1e-8)")


def test_criterion_04_conformal_rigidity():
    rng = np.random.default_rng(104)
    a = np.array([0.0, 0.0, 1.0])
    fld = Conformal(tuple(a))
    specs = _conformal_spec_sweep(rng, 20)
    worst_gap = 0.0
    min_defect = math.inf
    for spec in specs:
        want = spec.B.value(1.0) + spec.C.value(1.0)
        min_defect = min(min_defect, want)
        for _ in range(5):
            v = rng.normal(size=3)
            v[2] = 0.0
            p = v / np.linalg.norm(v)
            got = conformal_defect(S2, spec, fld, p)
            worst_gap = max(worst_gap, abs(got - want))
    _report("criterion 4 (conformal rigidity defect)",
            worst_gap < 1e-10 and min_defect > 0.0,
            f"max |defect - (B + |a|^2 C)| = {worst_gap:.3e} (tol 1e-10), "
            f"min defect {min_defect:.4f} > 0 over 20 specs")


def test_criterion_05_quadratic_classification():
    rng = np.random.default_rng(105)

    rep5 = evaluate_residuals(S5, _spec(exponential_profile(1.0, -8.0), t_max=1.25),
                              QuadraticGradient(((1.0, 3), (0.0, 3))),
                              S5.random_points(rng, 100))
    B7 = closed_form_B("quadratic", n=7, mu=1.0)
    rep7 = evaluate_residuals(S7, _spec(B7, t_max=1.25),
                              QuadraticGradient(((1.0, 4), (0.0, 4))),
                              S7.random_points(rng, 100))

    sweep_specs = [presets("sasaki"), presets("cheeger-gromoll"),
                   _spec(exponential_profile(1.0, -8.0), name="e-8t"),
                   _spec(exponential_profile(1.0, -2.0), name="e-2t"),
                   _spec(exponential_profile(1.0, -0.5), constant_profile(0.2), name="mix")]
    fld4 = QuadraticGradient(((1.0, 3), (0.0, 2)))
    pts4 = S4.random_points(rng, 100)
    floor = min(evaluate_residuals(S4, s, fld4, pts4).max_vertical for s in sweep_specs)

    cert = obstruction_check("quadratic_n3", {"mu": 1.0}, presets("sasaki"))
    ok = (rep5.max_vertical < 1e-6 and rep7.max_vertical < 1e-6
          and floor > 0.0 and isinstance(cert, Obstruction) and cert.margin > 1e-6)
    _report("criterion 5 (quadratic classification)", ok,
            f"S5 max tau_v {rep5.max_vertical:.3e}, S7 {rep7.max_vertical:.3e} "
            f"(tol 1e-6); S4 sweep min residual {floor:.3e} > 0; "
            f"n=3 obstruction margin {cert.margin:.3e} > 1e-6")


def test_criterion_06_killing_classifications():
    rng = np.random.default_rng(106)
    fld4 = KillingRotation((1.0, 1.0), 5)
    spec4 = _spec(exponential_profile(1.0, -1.5), t_max=2.0)
    pts4 = S4.random_points(rng, 100)
    rep4 = evaluate_residuals(S4, spec4, fld4, pts4)
    worst_h = max(np.linalg.norm(tension(S4, spec4, fld4, p).horizontal) for p in pts4)

    cert = obstruction_check("killing_even_unequal", {"thetas": [1.0, 2.0], "k": 0})

    fld5 = KillingRotation((1.0, 1.0), 6)
    rep5 = evaluate_residuals(S5, _spec(exponential_profile(1.0, -2.0), t_max=2.0),
                              fld5, S5.random_points(rng, 100))

    ok = (rep4.max_vertical < 1e-6 and worst_h > 1e-3
          and isinstance(cert, Obstruction) and cert.margin > 1e-6
          and rep5.max_vertical < 1e-6)
    _report("criterion 6 (Killing classifications)", ok,
            f"S4 k=0 max tau_v {rep4.max_vertical:.3e} with max |tau_h| {worst_h:.3f} != 0; "
            f"unequal-speed margin {cert.margin:.1f}; S5 k=1 max tau_v {rep5.max_vertical:.3e}")


def test_criterion_07_surface_identity():
    rng = np.random.default_rng(107)
    worst = 0.0
    for m in (S2, CT):
        for p in m.random_points(rng, 200):
            angle = float(rng.uniform(0, 2 * math.pi))
            worst = max(worst, surface_identity_residual(m, p, angle))
    _report("criterion 7 (surface divergence identity)", worst < 1e-5,
            f"max |Div[Div(X)X - nabla_X X] + K_g| = {worst:.3e} over 200 points "
            "on S2 and the conformal torus (tol 1e-5)")


def test_criterion_08_yano_integral():
    quad = sphere2_quadrature()
    vol = quad.volume
    v1 = yano_integral(S2, KillingRotation((1.0,), 3), quad)
    v2 = yano_integral(S2, Conformal((0.0, 0.0, 1.0)), quad)
    worst = max(abs(v1), abs(v2))
    _report("criterion 8 (Yano integral)", worst < 1e-6 * vol,
            f"|integral| <= {worst:.3e} for Killing and conformal on S2 "
            f"(tol 1e-6 * Vol = {1e-6 * vol:.3e})")


def test_criterion_09_torus_flow():
    rng = np.random.default_rng(109)
    spec = _spec(exponential_profile(1.0, -1.0))
    ok = True
    details = []
    for m, name in ((T2, "flat"), (CT, "conformal")):
        ref = parallel_energy(m, spec, 64) if m.kind == "flat_torus" else None
        for k in range(5):
            start = time.monotonic()
            out = unit_flow_torus(m, spec, random_unit_field(m, 64, rng),
                                  target_residual=1e-4)
            elapsed = time.monotonic() - start
            ok = ok and out.converged and elapsed < 60.0
            msg = f"{name}[{k}]: res {out.final_residual:.2e} in {elapsed:.0f}s"
            if ref is not None:
                gap = abs(out.final_energy - ref) / ref
                ok = ok and gap < 1e-3
                msg += f", energy gap {gap:.2e}"
            details.append(msg)
    _report("criterion 9 (torus unit flow)", ok, "; ".join(details))


def test_criterion_10_conformal_energy_identity():
    rng = np.random.default_rng(110)
    spec = _spec(exponential_profile(1.0, -1.0))
    change = ConformalChange(product_sine_scalar(0.3))
    measured = []
    worst_gap = 0.0
    for _ in range(5):
        fld = UnitAngleField(random_trig_scalar(rng, max_mode=2, amplitude=1.0))
        got, want = conformal_energy_delta(T2, change, fld, spec, n=48)
        measured.append(got)
        worst_gap = max(worst_gap, abs(got - want) / abs(want))
    spread = (max(measured) - min(measured)) / abs(measured[0])
    _report("criterion 10 (conformal energy identity)",
            worst_gap < 1e-6 and spread < 1e-6,
            f"max relative gap {worst_gap:.3e} (tol 1e-6), "
            f"spread across 5 sections {spread:.3e} (tol 1e-6)")


def test_criterion_11_constant_norm_condition():
    checks = [
        ("K e^{-t/k^2}, k=1.2", exponential_profile(2.0, -1.0 / 1.44), 1.2),
        ("K (1+t)^{-(1+1/lam^2)}, lam=1", power_profile(3.0, 1.0, 1.0, -2.0), 1.0),
        ("(1+t)^{-2}, k=1", power_profile(1.0, 1.0, 1.0, -2.0), 1.0),
    ]
    worst = max(abs(constant_norm_condition(B, k)) for _, B, k in checks)
    _report("criterion 11 (constant-norm condition zeros)", worst < 1e-12,
            f"max |B(k^2) + k^2 B'(k^2)| = {worst:.3e} over the three families "
            "(tol 1e-12)")


def test_criterion_12_enlarged_class():
    rng = np.random.default_rng(112)

    B2 = closed_form_B("enlargedA_conformal", n=2, a_sq=1.0)
    spec2 = enlarged_metric(B2, A0=0.5, t_max=2.0, name="enl_s2")
    assert validate(spec2).passed
    rep2 = evaluate_residuals(S2, spec2, Conformal((0.0, 0.0, 1.0)),
                              S2.random_points(rng, 100), tol=1e-6)

    B4 = closed_form_B("enlargedA_conformal", n=4, a_sq=1.0)
    spec4 = enlarged_metric(B4, A0=0.5, t_max=2.0, name="enl_s4")
    assert validate(spec4).passed
    fld4 = Conformal((0.0, 0.0, 0.0, 0.0, 1.0))
    pts4 = S4.random_points(rng, 100)
    rep4 = evaluate_residuals(S4, spec4, fld4, pts4)
    worst_h = max(np.linalg.norm(tension(S4, spec4, fld4, p).horizontal) for p in pts4)

    ok = (rep2.max_norm_G < 1e-6 and rep4.max_vertical < 1e-6 and worst_h > 1e-3)
    _report("criterion 12 (enlarged metric class)", ok,
            f"S2 conformal |tau|_G {rep2.max_norm_G:.3e} (harmonic map, tol 1e-6); "
            f"S4 tau_v {rep4.max_vertical:.3e} with max |tau_h| {worst_h:.3f} > 1e-3 "
            "(not a harmonic map)")
