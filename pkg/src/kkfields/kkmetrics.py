"""Kaluza-Klein metric specifications on TM and their Levi-Civita connection.

A metric is a triple of scalar profiles (A, B, C) of t = |e|^2:

    G(X^h, Y^h) = A g(X, Y)
    G(X^h, Y^v) = 0
    G(X^v, Y^v) = B g(X, Y) + C g(X, e) g(e, Y)

with A > 0 and the vertical block positive definite, i.e. B > 0 and
B + t C > 0 on the validation horizon.  connection_eval implements the
four connection cases on lifts; koszul_residuals certifies them against
finite-difference metric compatibility and torsion on the tangent bundle
of a sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Manifold, RoundSphere


class MetricDegeneracyError(ValueError):
    """B + |e|^2 C is not positive at the evaluated squared norm."""


# ---------------------------------------------------------------------------
# scalar profiles

@dataclass(frozen=True)
class ScalarProfile:
    """C^1 function of t = |e|^2 >= 0 with its derivative."""

    value: Callable[[float], float]
    derivative: Callable[[float], float]
    provenance: str = "closed-form"
    label: str = "profile"

    def __call__(self, t: float) -> float:
        return self.value(t)


def constant_profile(c: float) -> ScalarProfile:
    return ScalarProfile(lambda t: c, lambda t: 0.0, "constant", f"{c:g}")


def exponential_profile(K: float, rate: float) -> ScalarProfile:
    """K * exp(rate * t)."""
    return ScalarProfile(
        lambda t: K * math.exp(rate * t),
        lambda t: K * rate * math.exp(rate * t),
        "closed-form",
        f"{K:g}*exp({rate:g}t)",
    )


def power_profile(K: float, const: float, slope: float, exponent: float) -> ScalarProfile:
    """K * (const + slope * t)^exponent on the domain where the base is positive."""
    def val(t):
        base = const + slope * t
        if base <= 0:
            raise ValueError(f"power profile base {base:.3e} <= 0 at t = {t:g}")
        return K * base ** exponent

    def der(t):
        base = const + slope * t
        if base <= 0:
            raise ValueError(f"power profile base {base:.3e} <= 0 at t = {t:g}")
        return K * exponent * slope * base ** (exponent - 1.0)

    return ScalarProfile(val, der, "closed-form",
                         f"{K:g}*({const:g}{slope:+g}t)^{exponent:g}")


def shifted_profile(base: ScalarProfile, offset: float) -> ScalarProfile:
    return ScalarProfile(
        lambda t: base.value(t) + offset,
        base.derivative,
        base.provenance,
        f"{base.label}+{offset:g}",
    )


def linear_profile(intercept: float, slope: float) -> ScalarProfile:
    return ScalarProfile(
        lambda t: intercept + slope * t,
        lambda t: slope,
        "closed-form",
        f"{intercept:g}{slope:+g}t",
    )


def extend_c1(profile: ScalarProfile, t_cut: float, label: str | None = None) -> ScalarProfile:
    """Continue a profile beyond t_cut by a positive exponential tail.

    The tail B(t_cut) * exp(B'(t_cut)/B(t_cut) * (t - t_cut)) matches value
    and slope, stays positive, and leaves [0, t_cut] untouched.
    """
    v0 = profile.value(t_cut)
    d0 = profile.derivative(t_cut)
    if v0 <= 0:
        raise ValueError(f"cannot extend a profile that is nonpositive at t = {t_cut:g}")
    rate = d0 / v0

    def val(t):
        if t <= t_cut:
            return profile.value(t)
        return v0 * math.exp(rate * (t - t_cut))

    def der(t):
        if t <= t_cut:
            return profile.derivative(t)
        return v0 * rate * math.exp(rate * (t - t_cut))

    return ScalarProfile(val, der, profile.provenance,
                         label or f"{profile.label}|ext@{t_cut:g}")


def derivative_consistency(profile: ScalarProfile, t_max: float,
                           samples: int = 41, h: float = 1e-5) -> float:
    """Max relative gap between the stored derivative and central differences."""
    worst = 0.0
    for t in np.linspace(h, max(t_max, 2 * h), samples):
        def fd(step):
            return (profile.value(t + step) - profile.value(t - step)) / (2 * step)
        approx = (4.0 * fd(h / 2) - fd(h)) / 3.0
        exact = profile.derivative(t)
        scale = max(abs(exact), abs(approx), 1.0)
        worst = max(worst, abs(approx - exact) / scale)
    return worst


# ---------------------------------------------------------------------------
# metric specs

@dataclass(frozen=True)
class KKMetricSpec:
    """Profiles (A, B, C) of t = |e|^2 plus a validation horizon."""

    A: ScalarProfile
    B: ScalarProfile
    C: ScalarProfile
    t_max: float = 4.0
    name: str = "kk"

    def vertical_denominator(self, t: float) -> float:
        denom = self.B.value(t) + t * self.C.value(t)
        if denom <= 0.0:
            raise MetricDegeneracyError(
                f"{self.name}: B + t C = {denom:.3e} <= 0 at t = {t:g}")
        return denom

    def describe(self) -> str:
        return f"{self.name}[A={self.A.label},B={self.B.label},C={self.C.label}]"


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    min_A: float
    min_B: float
    min_B_tC: float
    argmin_A: float
    argmin_B: float
    argmin_B_tC: float
    certified_min_B_tC: float
    derivative_gaps: tuple[float, float, float]

    def summary(self) -> str:
        state = "pass" if self.passed else "fail"
        return (f"{state}: min A = {self.min_A:.6g} @ {self.argmin_A:.3g}, "
                f"min B = {self.min_B:.6g} @ {self.argmin_B:.3g}, "
                f"min B+tC = {self.min_B_tC:.6g} @ {self.argmin_B_tC:.3g}")


def validate(spec: KKMetricSpec, grid_step: float = 1e-3,
             derivative_tol: float = 1e-7) -> ValidationReport:
    """Positivity report for A, B and B + tC on [0, t_max].

    Dense sampling on a grid_step grid; a first-order slack using the
    sampled derivative bound gives a certified lower bound for B + tC.
    Profile derivatives are checked against finite differences first.
    """
    gaps = tuple(derivative_consistency(pr, spec.t_max) for pr in (spec.A, spec.B, spec.C))
    if max(gaps) > derivative_tol:
        raise ValueError(
            f"{spec.name}: profile derivative inconsistent with finite differences "
            f"(gaps {gaps}, tol {derivative_tol:g})")

    ts = np.arange(0.0, spec.t_max + grid_step, grid_step)
    A_vals = np.array([spec.A.value(t) for t in ts])
    B_vals = np.array([spec.B.value(t) for t in ts])
    BC_vals = np.array([spec.B.value(t) + t * spec.C.value(t) for t in ts])
    iA, iB, iBC = np.argmin(A_vals), np.argmin(B_vals), np.argmin(BC_vals)

    # d/dt (B + tC) = B' + C + t C'; bound it on the grid for the slack
    slope = np.array([abs(spec.B.derivative(t) + spec.C.value(t) + t * spec.C.derivative(t))
                      for t in ts])
    certified = float(BC_vals.min() - slope.max() * grid_step / 2.0)

    passed = bool(A_vals.min() > 0.0 and B_vals.min() > 0.0 and BC_vals.min() > 0.0)
    return ValidationReport(
        passed=passed,
        min_A=float(A_vals.min()), min_B=float(B_vals.min()), min_B_tC=float(BC_vals.min()),
        argmin_A=float(ts[iA]), argmin_B=float(ts[iB]), argmin_B_tC=float(ts[iBC]),
        certified_min_B_tC=certified,
        derivative_gaps=gaps,
    )


def presets(name: str, t_max: float = 4.0, **params) -> KKMetricSpec:
    """Named metric families.

    sasaki            A = B = 1, C = 0
    cheeger-gromoll   A = 1, B = C = 1/(1+t)
    g_mr              A = 1, B = (1+t)^-m, C = r (1+t)^-m   (r >= 0)
    """
    if name == "sasaki":
        return KKMetricSpec(constant_profile(1.0), constant_profile(1.0),
                            constant_profile(0.0), t_max, "sasaki")
    if name == "cheeger-gromoll":
        omega = power_profile(1.0, 1.0, 1.0, -1.0)
        return KKMetricSpec(constant_profile(1.0), omega, omega, t_max, "cheeger-gromoll")
    if name == "g_mr":
        m = params.get("m")
        r = params.get("r")
        if m is None or r is None:
            raise ValueError("g_mr needs parameters m and r")
        if r < 0:
            raise ValueError(f"g_mr needs r >= 0 for positive definiteness, got r = {r:g}")
        B = power_profile(1.0, 1.0, 1.0, -float(m))
        C = power_profile(float(r), 1.0, 1.0, -float(m)) if r > 0 else constant_profile(0.0)
        return KKMetricSpec(constant_profile(1.0), B, C, t_max, f"g_{m:g},{r:g}")
    raise ValueError(f"unknown metric preset {name!r}")


# ---------------------------------------------------------------------------
# lifts and the connection

@dataclass(frozen=True)
class LiftPair:
    """Horizontal + vertical decomposition of a bundle tangent vector at (p, e)."""

    point: np.ndarray
    base: np.ndarray
    horizontal: np.ndarray
    vertical: np.ndarray

    def __add__(self, other: "LiftPair") -> "LiftPair":
        return LiftPair(self.point, self.base,
                        self.horizontal + other.horizontal,
                        self.vertical + other.vertical)

    def __sub__(self, other: "LiftPair") -> "LiftPair":
        return LiftPair(self.point, self.base,
                        self.horizontal - other.horizontal,
                        self.vertical - other.vertical)


def lift_pair(m: Manifold, p, e, horizontal, vertical) -> LiftPair:
    p = m.check_point(p)
    return LiftPair(p, np.asarray(e, float),
                    np.asarray(horizontal, float), np.asarray(vertical, float))


def metric_on_lifts(m: Manifold, spec: KKMetricSpec, l1: LiftPair, l2: LiftPair) -> float:
    """G at (p, e); the horizontal-vertical block is exactly zero."""
    if not np.allclose(l1.point, l2.point, atol=1e-10) or \
       not np.allclose(l1.base, l2.base, atol=1e-10):
        raise ValueError("metric_on_lifts needs both lifts at the same (p, e)")
    p, e = l1.point, l1.base
    t = m.inner(p, e, e)
    A = spec.A.value(t)
    B = spec.B.value(t)
    C = spec.C.value(t)
    return (A * m.inner(p, l1.horizontal, l2.horizontal)
            + B * m.inner(p, l1.vertical, l2.vertical)
            + C * m.inner(p, l1.vertical, e) * m.inner(p, e, l2.vertical))


def connection_eval(m: Manifold, spec: KKMetricSpec, p, e, case: str, X, Y,
                    cov_deriv=None) -> LiftPair:
    """One case of the bundle Levi-Civita connection at (p, e).

    case is 'hh', 'hv', 'vh' or 'vv' for the lift types of the direction
    and the differentiated field.  cov_deriv is nabla_X Y of the underlying
    base fields where the case formula needs it (hh horizontal and hv
    vertical parts); it defaults to zero, which is exact for vectors
    extended parallelly.  The vv case never produces a horizontal part.
    """
    p = m.check_point(p)
    e = np.asarray(e, float)
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    t = m.inner(p, e, e)
    A = spec.A.value(t)
    Ap = spec.A.derivative(t)
    B = spec.B.value(t)
    Bp = spec.B.derivative(t)
    C = spec.C.value(t)
    Cp = spec.C.derivative(t)
    denom = spec.vertical_denominator(t)
    zero = np.zeros_like(e)
    cov = np.asarray(cov_deriv, float) if cov_deriv is not None else zero

    if case == "hh":
        h = cov
        v = -(Ap / denom) * m.inner(p, X, Y) * e - 0.5 * m.riemann(p, X, Y, e)
        return LiftPair(p, e, h, v)
    if case == "hv":
        h = (-B / (2.0 * A)) * m.riemann(p, Y, e, X) + (Ap / A) * m.inner(p, Y, e) * X
        v = cov
        return LiftPair(p, e, h, v)
    if case == "vh":
        h = (B / (2.0 * A)) * m.riemann(p, e, X, Y) + (Ap / A) * m.inner(p, X, e) * Y
        return LiftPair(p, e, h, zero)
    if case == "vv":
        v = (Bp / B) * (m.inner(p, X, e) * Y + m.inner(p, Y, e) * X)
        v = v + ((Cp - 2.0 * Bp * C / B) / denom) * m.inner(p, X, e) * m.inner(p, Y, e) * e
        v = v + ((C - Bp) / denom) * m.inner(p, X, Y) * e
        return LiftPair(p, e, zero, v)
    raise ValueError(f"unknown connection case {case!r}; expected hh, hv, vh or vv")


# ---------------------------------------------------------------------------
# Koszul certification on spheres: finite-difference metric compatibility
# and torsion of connection_eval against G

@dataclass(frozen=True)
class ProjectedConstant:
    """Base field Y(q) = c - <c, q> q on a sphere; nabla_X Y = -<c, q> X."""

    c: np.ndarray

    def value(self, q: np.ndarray) -> np.ndarray:
        return self.c - float(self.c @ q) * q

    def nabla(self, q: np.ndarray, X: np.ndarray) -> np.ndarray:
        return -float(self.c @ q) * X


@dataclass(frozen=True)
class LiftField:
    """Bundle field (q, f) -> Y(q)^h + W(q)^v built from two base fields."""

    Y: ProjectedConstant
    W: ProjectedConstant

    def at(self, q: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.Y.value(q), self.W.value(q)

    def ambient(self, q: np.ndarray, f: np.ndarray) -> np.ndarray:
        """Velocity components in R^{2N} of a curve with this bundle velocity."""
        y = self.Y.value(q)
        w = self.W.value(q)
        return np.concatenate([y, -float(f @ y) * q + w])


def bundle_curve(m: RoundSphere, p, e, X, V):
    """Curve s -> (q(s), f(s)) in TM with velocity X^h + V^v at (p, e)."""
    X = np.asarray(X, float)
    V = np.asarray(V, float)

    def gamma(s: float):
        if np.linalg.norm(X) < 1e-14:
            return p.copy(), e + s * V
        q = m.exp(p, X, s)
        f = m.transport(p, X, e, s) + s * m.transport(p, X, V, s)
        return q, f

    return gamma


def connection_on_lift_field(m: RoundSphere, spec: KKMetricSpec, p, e,
                             X, V, target: LiftField) -> LiftPair:
    """nabla-bar of a lift field along the direction X^h + V^v at (p, e)."""
    Y2 = target.Y.value(p)
    W2 = target.W.value(p)
    out = connection_eval(m, spec, p, e, "hh", X, Y2, cov_deriv=target.Y.nabla(p, X))
    out = out + connection_eval(m, spec, p, e, "hv", X, W2, cov_deriv=target.W.nabla(p, X))
    out = out + connection_eval(m, spec, p, e, "vh", V, Y2)
    out = out + connection_eval(m, spec, p, e, "vv", V, W2)
    return out


def _richardson(fd: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    return (4.0 * fd(h / 2.0) - fd(h)) / 3.0


def metric_compatibility_residual(m: RoundSphere, spec: KKMetricSpec, p, e,
                                  X, V, f1: LiftField, f2: LiftField,
                                  h: float = 1e-5) -> float:
    """|X-hat G(Y-hat, Z-hat) - G(nabla Y-hat, Z-hat) - G(Y-hat, nabla Z-hat)|."""
    gamma = bundle_curve(m, p, e, X, V)

    def G_along(s: float) -> float:
        q, f = gamma(s)
        y1, w1 = f1.at(q, f)
        y2, w2 = f2.at(q, f)
        l1 = LiftPair(q, f, m.tangent_project(q, y1), m.tangent_project(q, w1))
        l2 = LiftPair(q, f, m.tangent_project(q, y2), m.tangent_project(q, w2))
        return metric_on_lifts(m, spec, l1, l2)

    def fd(step):
        return np.array([(G_along(step) - G_along(-step)) / (2.0 * step)])

    lhs = float(_richardson(fd, h)[0])
    d1 = connection_on_lift_field(m, spec, p, e, X, V, f1)
    d2 = connection_on_lift_field(m, spec, p, e, X, V, f2)
    y2, w2 = f2.at(p, e)
    y1, w1 = f1.at(p, e)
    l1 = LiftPair(p, e, y1, w1)
    l2 = LiftPair(p, e, y2, w2)
    rhs = metric_on_lifts(m, spec, d1, l2) + metric_on_lifts(m, spec, l1, d2)
    return abs(lhs - rhs)


def torsion_residual(m: RoundSphere, spec: KKMetricSpec, p, e,
                     f1: LiftField, f2: LiftField, h: float = 1e-5) -> float:
    """|nabla_{F1} F2 - nabla_{F2} F1 - [F1, F2]| at (p, e), bracket by FD.

    The bracket is computed in the R^{2N} embedding of TM, where the Lie
    bracket of tangent fields is the antisymmetrized directional derivative.
    """
    y1, w1 = f1.at(p, e)
    y2, w2 = f2.at(p, e)

    def directional(direction: LiftField, target: LiftField) -> np.ndarray:
        Xd, Vd = direction.at(p, e)
        gamma = bundle_curve(m, p, e, Xd, Vd)

        def fd(step):
            qp, fp = gamma(step)
            qm, fm = gamma(-step)
            return (target.ambient(qp, fp) - target.ambient(qm, fm)) / (2.0 * step)

        return _richardson(fd, h)

    bracket = directional(f1, f2) - directional(f2, f1)
    N = m.ambient_dim
    xi = bracket[:N]
    eta = bracket[N:]
    bracket_h = m.tangent_project(p, xi)
    bracket_v = m.tangent_project(p, eta)

    d12 = connection_on_lift_field(m, spec, p, e, y1, w1, f2)
    d21 = connection_on_lift_field(m, spec, p, e, y2, w2, f1)
    res_h = d12.horizontal - d21.horizontal - bracket_h
    res_v = d12.vertical - d21.vertical - bracket_v
    return float(np.linalg.norm(res_h) + np.linalg.norm(res_v))


def koszul_residuals(m: RoundSphere, spec: KKMetricSpec, rng: np.random.Generator,
                     samples: int = 50) -> tuple[float, float]:
    """Worst metric-compatibility and torsion residuals over random samples."""
    worst_compat = 0.0
    worst_torsion = 0.0
    for _ in range(samples):
        p = m.random_points(rng, 1)[0]
        e = m.tangent_project(p, rng.normal(size=m.ambient_dim))
        scale = rng.uniform(0.2, 1.2)
        e = scale * e / max(np.linalg.norm(e), 1e-12)
        X = m.tangent_project(p, rng.normal(size=m.ambient_dim))
        V = m.tangent_project(p, rng.normal(size=m.ambient_dim))
        fields = [LiftField(ProjectedConstant(rng.normal(size=m.ambient_dim)),
                            ProjectedConstant(rng.normal(size=m.ambient_dim)))
                  for _ in range(2)]
        worst_compat = max(worst_compat, metric_compatibility_residual(
            m, spec, p, e, X, V, fields[0], fields[1]))
        worst_torsion = max(worst_torsion, torsion_residual(
            m, spec, p, e, fields[0], fields[1]))
    return worst_compat, worst_torsion
