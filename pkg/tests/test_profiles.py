"""Profile solver: closed forms, ODE construction, obstruction certificates."""

import math

import numpy as np
import pytest

from kkfields.fields import KillingRotation, QuadraticGradient
from kkfields.geometry import RoundSphere
from kkfields.kkmetrics import (
    KKMetricSpec,
    constant_profile,
    exponential_profile,
    presets,
    validate,
)
from kkfields.profiles import (
    FEASIBLE,
    Obstruction,
    ProfileConstructionError,
    ProfileProblem,
    closed_form_B,
    constant_B_enlarged_metric,
    construct_B_from_C,
    enlarged_metric,
    obstruction_check,
    peak_norm_sq,
    profile_ode_residual,
)
from kkfields.tension import constant_norm_condition, evaluate_residuals


def spec_with(B, C=None, t_max=4.0, name="test"):
    return KKMetricSpec(constant_profile(1.0), B,
                        C if C is not None else constant_profile(0.0), t_max, name)


def test_closed_form_quadratic_n5():
    B = closed_form_B("quadratic", n=5, mu=1.0)
    for t in np.linspace(0, 0.25, 11):
        assert abs(B.value(t) - math.exp(-8.0 * t)) < 1e-14
    prob = ProfileProblem("quadratic", {"n": 5, "mu": 1.0}, constant_profile(0.0), 0.25)
    assert profile_ode_residual(prob, B) < 1e-10


def test_closed_form_quadratic_n7_power_law():
    mu = 1.0
    B = closed_form_B("quadratic", n=7, mu=mu)
    # K [2 mu^2 - 2t]^5 on the attained interval
    for t in np.linspace(0, 0.25, 11):
        assert abs(B.value(t) - (2.0 - 2.0 * t) ** 5) < 1e-11
    prob = ProfileProblem("quadratic", {"n": 7, "mu": mu}, constant_profile(0.0), 0.25)
    assert profile_ode_residual(prob, B) < 1e-10
    # extension keeps it positive far past the blow-down of the power law
    assert B.value(3.0) > 0


def test_closed_form_killing_profiles():
    B = closed_form_B("killing_even", p=2, k=0, lam=1.0)
    for t in np.linspace(0, 1, 9):
        assert abs(B.value(t) - math.exp(-1.5 * t)) < 1e-14

    B = closed_form_B("killing_odd", p=1, k=0, lam=1.0)
    for t in np.linspace(0, 1, 9):
        assert abs(B.value(t) - math.exp(-t)) < 1e-14
    assert abs(constant_norm_condition(B, 1.0)) < 1e-15

    Bpow = closed_form_B("killing_odd", p=1, k=0, lam=1.0, variant="power")
    assert abs(constant_norm_condition(Bpow, 1.0)) < 1e-15

    B21 = closed_form_B("killing_odd", p=2, k=1, lam=1.0)
    for t in np.linspace(0, 1, 9):
        assert abs(B21.value(t) - math.exp(-2.0 * t)) < 1e-14


def test_closed_form_inadmissible_cases_return_obstructions():
    out = closed_form_B("quadratic", n=3, mu=1.0)
    assert isinstance(out, Obstruction)
    assert abs(out.witness_point - 0.25) < 1e-15
    assert out.margin > 1e-6

    out = closed_form_B("quadratic", n=4, mu=1.0)
    assert isinstance(out, Obstruction)

    out = closed_form_B("killing_even", p=2, k=1, lam=1.0)
    assert isinstance(out, Obstruction)

    out = closed_form_B("killing_odd", p=2, k=2, lam=1.0)
    assert isinstance(out, Obstruction)


def test_construct_recovers_closed_forms():
    prob = ProfileProblem("quadratic", {"n": 5, "mu": 1.0}, constant_profile(0.0), 0.25)
    B = construct_B_from_C(prob)
    for t in np.linspace(0, 0.25, 26):
        assert abs(B.value(t) - math.exp(-8.0 * t)) < 1e-9

    prob = ProfileProblem("killing_odd", {"p": 2, "k": 1, "lam": 1.0},
                          constant_profile(0.0), 1.0)
    B = construct_B_from_C(prob)
    for t in np.linspace(0, 1, 21):
        assert abs(B.value(t) - math.exp(-2.0 * t)) < 1e-9


def test_construct_killing_even_with_positive_C(rng):
    prob = ProfileProblem("killing_even", {"p": 2, "k": 0, "lam": 1.0},
                          constant_profile(0.1), 1.0)
    B = construct_B_from_C(prob, t_max=2.0)
    assert profile_ode_residual(prob, B) < 1e-8
    spec = spec_with(B, C=constant_profile(0.1), t_max=2.0, name="killing_ode")
    assert validate(spec).passed
    # full vertical tension of the associated field vanishes
    m = RoundSphere(4)
    fld = KillingRotation((1.0, 1.0), 5)
    rep = evaluate_residuals(m, spec, fld, m.random_points(rng, 100))
    assert rep.max_vertical < 1e-6


def test_construct_quadratic_with_C(rng):
    prob = ProfileProblem("quadratic", {"n": 5, "mu": 1.0},
                          exponential_profile(0.2, -0.5), 0.25)
    B = construct_B_from_C(prob, t_max=2.0)
    assert profile_ode_residual(prob, B) < 1e-8
    spec = spec_with(B, C=exponential_profile(0.2, -0.5), t_max=2.0, name="quad_ode")
    assert validate(spec).passed
    m = RoundSphere(5)
    fld = QuadraticGradient(((1.0, 3), (0.0, 3)))
    rep = evaluate_residuals(m, spec, fld, m.random_points(rng, 100))
    assert rep.max_vertical < 1e-6


def test_construction_failure_reported():
    # a strongly negative C drives B through zero before t_peak
    prob = ProfileProblem("killing_even", {"p": 2, "k": 0, "lam": 1.0},
                          constant_profile(-30.0), 1.0)
    with pytest.raises(ProfileConstructionError):
        construct_B_from_C(prob)


def test_scale_invariance_in_K(rng):
    m = RoundSphere(4)
    fld = KillingRotation((1.0, 1.0), 5)
    pts = m.random_points(rng, 25)
    for K in (1.0, 3.7):
        B = closed_form_B("killing_even", p=2, k=0, lam=1.0, K=K)
        rep = evaluate_residuals(m, spec_with(B, t_max=2.0), fld, pts)
        assert rep.max_vertical < 1e-10


def test_obstruction_margins():
    out = obstruction_check("quadratic_n3", {"mu": 1.0}, presets("sasaki"))
    assert isinstance(out, Obstruction) and out.margin > 1e-6

    out = obstruction_check("conformal", {"a_sq": 1.0}, presets("sasaki"))
    assert abs(out.witness_value - 1.0) < 1e-15

    out = obstruction_check("killing_even_unequal", {"thetas": [1.0, 2.0], "k": 0})
    assert abs(out.witness_value + 5.0) < 1e-12 and abs(out.margin - 5.0) < 1e-12

    assert obstruction_check("killing_even_unequal",
                             {"thetas": [1.0, 1.0], "k": 0}) == FEASIBLE

    out = obstruction_check("killing_odd_unequal", {"thetas": [1.0, 2.0], "k": 1})
    assert abs(out.margin - 5.0) < 1e-12

    # k = 0 falls back to the fastest-plane inequality
    out = obstruction_check("killing_odd_unequal", {"thetas": [1.0, 2.0], "k": 0})
    assert out.margin > 1e-6

    out = obstruction_check("killing_even_maximal", {"lam": 1.0}, presets("sasaki"))
    assert out.witness_value > 0

    with pytest.raises(ValueError):
        obstruction_check("bogus", {})


def test_peak_norm_matches_field_peaks(rng):
    assert abs(peak_norm_sq("quadratic", mu=2.0) - 1.0) < 1e-15
    assert abs(peak_norm_sq("killing_even", lam=1.3) - 1.69) < 1e-12
    # attained maxima of |sigma|^2 agree with the closed-form peaks
    m = RoundSphere(5)
    fld = QuadraticGradient(((2.0, 3), (0.0, 3)))
    worst = max(float(np.sum(fld.value(m, p) ** 2)) for p in m.random_points(rng, 4000))
    assert worst <= 1.0 + 1e-12
    assert worst > 0.9


def test_enlarged_metrics():
    B = closed_form_B("enlargedA_conformal", n=2, a_sq=1.0)
    for t in np.linspace(0, 1, 5):
        assert abs(B.value(t) - math.exp(-0.5 * t)) < 1e-14
    spec = enlarged_metric(B, A0=0.7, t_max=2.0, name="enl2")
    assert validate(spec).passed
    assert abs(spec.A.value(0.3) - (B.value(0.3) + 0.7)) < 1e-15

    B4 = closed_form_B("enlargedA_conformal", n=4, a_sq=1.0)
    # K [ n + (n-2)|a|^2 - (n-2) t ]^{1/(n-2)} = sqrt(6 - 2t)
    for t in np.linspace(0, 1, 5):
        assert abs(B4.value(t) - math.sqrt(6.0 - 2.0 * t)) < 1e-12

    Bk = closed_form_B("enlargedA_killing", p=1)
    for t in np.linspace(0, 1, 5):
        assert abs(Bk.value(t) - math.exp(-0.5 * t)) < 1e-14

    spec = constant_B_enlarged_metric(p=2, B0=1.0, A0=2.0, t_max=2.0)
    assert validate(spec).passed
    assert abs(spec.A.value(1.0) - (2.0 - 0.75)) < 1e-15
    with pytest.raises(ValueError):
        enlarged_metric(B, A0=0.0)
