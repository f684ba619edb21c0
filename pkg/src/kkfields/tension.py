"""Tension field of a vector field into (TM, G) and residual classification.

For sigma : (M, g) -> (TM, G) with G a Kaluza-Klein metric the tension
splits into horizontal and vertical parts,

  tau_h = -(B/A) sum_i R(nabla_{e_i} s, s) e_i + (2A'/A) X(s)
  tau_v = -nabla*nabla s + (2B'/B) nabla_{X(s)} s
          + [-m A' + (C' - 2B'C/B)|X(s)|^2 + (C - B')|nabla s|^2] s / (B + |s|^2 C)

with X(s) = grad |s|^2 / 2 and every profile evaluated at t = |s|^2.
Vanishing of tau classifies harmonic maps, of tau_v harmonic sections, and
proportionality tau_v || s unit-harmonic criticality.

tension_via_connection recomputes tau as the trace of the pullback
derivative of d sigma through connection_eval; agreement of the two routes
plus the Koszul certification of the connection pins all signs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .fields import Conformal, Normalized, UnitAngleField
from .geometry import (
    FieldCalculus,
    Manifold,
    SmoothScalar2D,
    UnsupportedOperation,
    field_calculus,
)
from .kkmetrics import KKMetricSpec, LiftPair, ScalarProfile, connection_eval

DEFAULT_TOL_ANALYTIC = 1e-8
DEFAULT_TOL_STENCIL = 1e-4


@dataclass(frozen=True)
class TensionResult:
    """Tension components with the G-norm and classification flags at a point."""

    horizontal: np.ndarray
    vertical: np.ndarray
    norm_G: float
    flags: dict[str, bool]
    vertical_norm: float
    unit_residual_norm: float


def _profile_values(spec: KKMetricSpec, t: float):
    A = spec.A.value(t)
    Ap = spec.A.derivative(t)
    B = spec.B.value(t)
    Bp = spec.B.derivative(t)
    C = spec.C.value(t)
    Cp = spec.C.derivative(t)
    denom = spec.vertical_denominator(t)
    return A, Ap, B, Bp, C, Cp, denom


def _frame_vector(frame: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    return coeffs @ frame


def tension(m: Manifold, spec: KKMetricSpec, fld, p: np.ndarray,
            tol: float = DEFAULT_TOL_ANALYTIC,
            calculus: FieldCalculus | None = None) -> TensionResult:
    """Horizontal and vertical tension of the field at p, with flags at tol."""
    p = m.check_point(p)
    fc = calculus if calculus is not None else field_calculus(m, fld, p)
    s = fld.value(m, p)
    t = fc.norm_sq
    A, Ap, B, Bp, C, Cp, denom = _profile_values(spec, t)
    frame = fc.frame
    J = fc.covariant_jacobian
    n = frame.shape[0]

    # columns of J are the frame derivatives nabla_{e_j} s
    nabla_cols = [_frame_vector(frame, J[:, j]) for j in range(n)]
    curv = np.zeros_like(s)
    for j in range(n):
        curv = curv + m.riemann(p, nabla_cols[j], s, frame[j])
    tau_h = -(B / A) * curv + (2.0 * Ap / A) * fc.grad_half_norm

    X = fc.grad_half_norm
    x_coeffs = np.array([m.inner(p, X, frame[i]) for i in range(n)])
    nabla_X = _frame_vector(frame, J @ x_coeffs)
    X_sq = m.inner(p, X, X)
    coeff = (-m.dim * Ap + (Cp - 2.0 * Bp * C / B) * X_sq
             + (C - Bp) * fc.jacobian_norm_sq) / denom
    tau_v = -fc.rough_laplacian + (2.0 * Bp / B) * nabla_X + coeff * s

    tv_s = m.inner(p, tau_v, s)
    norm_G = math.sqrt(max(
        A * m.inner(p, tau_h, tau_h) + B * m.inner(p, tau_v, tau_v) + C * tv_s * tv_s, 0.0))
    v_norm = m.norm(p, tau_v)
    if t > 1e-18:
        unit_res = tau_v - (tv_s / t) * s
        unit_norm = m.norm(p, unit_res)
    else:
        unit_norm = v_norm
    flags = {
        "harmonic_map": norm_G < tol,
        "harmonic_section": v_norm < tol,
        "unit_section": unit_norm < tol,
    }
    return TensionResult(tau_h, tau_v, norm_G, flags, v_norm, unit_norm)


def tension_via_connection(m: Manifold, spec: KKMetricSpec, fld,
                           p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """tau as trace nabla-bar d sigma through the four connection cases.

    Uses a geodesic frame at p (so frame derivatives vanish) and the second
    covariant derivatives of the field for the derivative terms.  Cross-
    check route; tension() is the production formula.
    """
    p = m.check_point(p)
    frame = m.frame(p)
    s = fld.value(m, p)
    d2 = geometry.second_covariant_diag(m, fld, p, frame)
    total = LiftPair(p, s, np.zeros_like(s), np.zeros_like(s))
    for i in range(frame.shape[0]):
        e_i = frame[i]
        W_i = geometry.covariant_derivative(m, fld, p, e_i)
        total = total + connection_eval(m, spec, p, s, "hh", e_i, e_i)
        total = total + connection_eval(m, spec, p, s, "hv", e_i, W_i, cov_deriv=d2[i])
        total = total + connection_eval(m, spec, p, s, "vh", W_i, e_i)
        total = total + connection_eval(m, spec, p, s, "vv", W_i, W_i)
    return total.horizontal, total.vertical


def constant_norm_condition(B: ScalarProfile, k: float) -> float:
    """B(k^2) + k^2 B'(k^2); zero is the non-parallel constant-norm condition."""
    if k <= 0:
        raise ValueError(f"constant norm must be positive, got {k:g}")
    t = k * k
    return B.value(t) + t * B.derivative(t)


def unit_section_residual(m: Manifold, fld, p: np.ndarray,
                          calculus: FieldCalculus | None = None) -> np.ndarray:
    """nabla*nabla alpha - |nabla alpha|^2 alpha for a unit field alpha."""
    p = m.check_point(p)
    fc = calculus if calculus is not None else field_calculus(m, fld, p)
    if abs(fc.norm_sq - 1.0) > 1e-9:
        raise ValueError(f"unit_section_residual needs |field| = 1, got |.|^2 = {fc.norm_sq:.12g}")
    s = fld.value(m, p)
    return fc.rough_laplacian - fc.jacobian_norm_sq * s


def conformal_defect(m: Manifold, spec: KKMetricSpec, fld, p: np.ndarray) -> float:
    """-(B + tC) <tau_v, s> / |s|^2, the harmonic-section defect scalar.

    For the conformal gradient field at a zero of the height function this
    equals B(|a|^2) + |a|^2 C(|a|^2), which positivity of G keeps away
    from zero; that is the rigidity obstruction.
    """
    p = m.check_point(p)
    fc = field_calculus(m, fld, p)
    if fc.norm_sq < 1e-14:
        raise ValueError("defect undefined where the field vanishes")
    res = tension(m, spec, fld, p, calculus=fc)
    s = fld.value(m, p)
    denom = spec.vertical_denominator(fc.norm_sq)
    return -denom * m.inner(p, res.vertical, s) / fc.norm_sq


# ---------------------------------------------------------------------------
# identity checks

class _DerivedField:
    """Field wrapper exposing only values, for finite-difference divergences."""

    def __init__(self, fn):
        self._fn = fn

    def value(self, m, p):
        return self._fn(m, p)

    def jacobian(self, m, p):
        return None

    def hessian(self, m, p):
        return None


def _unit_frame_field(m: Manifold, p: np.ndarray, angle: float):
    """A local orthonormal frame field X through p, rotated by angle."""
    if m.kind == "sphere":
        if m.dim != 2:
            raise UnsupportedOperation("surface identity needs a 2-sphere or torus")
        frame = m.frame(p)
        c = math.cos(angle) * frame[0] + math.sin(angle) * frame[1]
        return Normalized(Conformal(tuple(c)))
    theta = SmoothScalar2D(lambda q: angle,
                           lambda q: np.zeros(2),
                           lambda q: np.zeros((2, 2)),
                           label=f"{angle:g}")
    return UnitAngleField(theta)


def surface_identity_residual(m: Manifold, p: np.ndarray, angle: float = 0.0) -> float:
    """|Div[Div(X) X - nabla_X X] + K_g| for a local orthonormal frame field X."""
    p = m.check_point(p)
    if m.dim != 2:
        raise UnsupportedOperation("surface identity needs a surface")
    X = _unit_frame_field(m, p, angle)

    def W_value(mm, q):
        fc = field_calculus(mm, X, q)
        xval = X.value(mm, q)
        frame = fc.frame
        coeffs = np.array([mm.inner(q, xval, frame[i]) for i in range(2)])
        nabla_XX = _frame_vector(frame, fc.covariant_jacobian @ coeffs)
        return fc.divergence * xval - nabla_XX

    W = _DerivedField(W_value)
    JW = geometry.covariant_jacobian(m, W, p)
    div_W = float(np.trace(JW))
    return abs(div_W + m.gaussian_curvature(p))


def yano_integrand(m: Manifold, fld, p: np.ndarray,
                   calculus: FieldCalculus | None = None) -> float:
    """<nabla*nabla s, s> - Ric(s, s) - |L_s g|^2 / 2 + (Div s)^2 at p."""
    p = m.check_point(p)
    fc = calculus if calculus is not None else field_calculus(m, fld, p)
    s = fld.value(m, p)
    return (m.inner(p, fc.rough_laplacian, s) - m.ricci(p, s, s)
            - 0.5 * fc.lie_norm_sq + fc.divergence ** 2)


def identity_checks(m: Manifold, spec: KKMetricSpec, fld, p: np.ndarray,
                    harmonic_gate: float = 1e-6) -> dict[str, float | str]:
    """Named residuals of the pointwise identities; inapplicable ones carry a reason.

    eq2_norm_laplacian    Delta |s|^2/2 against the harmonic-section identity
                          (only meaningful when tau_v vanishes at p; gated).
    surface_identity      Div[Div(X)X - nabla_X X] + K_g on surfaces.
    constant_curvature_h  tau_h against -(B/A) kappa (nabla_s s - (Div s) s)
                          + (2A'/A) X(s) on constant-curvature bases.
    """
    p = m.check_point(p)
    fc = field_calculus(m, fld, p)
    s = fld.value(m, p)
    t = fc.norm_sq
    A, Ap, B, Bp, C, Cp, denom = _profile_values(spec, t)
    res = tension(m, spec, fld, p, calculus=fc)
    out: dict[str, float | str] = {}

    tv_s = m.inner(p, res.vertical, s)
    if abs(tv_s) > harmonic_gate * max(1.0, abs(t)):
        out["eq2_norm_laplacian"] = f"skipped: not a harmonic section here (<tau_v, s> = {tv_s:.3e})"
    else:
        def half_norm(q):
            v = fld.value(m, q)
            return 0.5 * m.inner(q, v, v)

        lhs = geometry.scalar_laplacian(m, half_norm, p)
        X_sq = m.inner(p, fc.grad_half_norm, fc.grad_half_norm)
        rhs = (-(B + t * Bp) * fc.jacobian_norm_sq
               + (2.0 * Bp + t * Cp) * X_sq) / denom - m.dim * Ap * t / denom
        out["eq2_norm_laplacian"] = abs(lhs - rhs)

    if m.dim == 2:
        out["surface_identity"] = surface_identity_residual(m, p)
    else:
        out["surface_identity"] = "skipped: needs a surface"

    if m.kind in ("sphere", "flat_torus"):
        kappa = 1.0 if m.kind == "sphere" else 0.0
        frame = fc.frame
        s_coeffs = np.array([m.inner(p, s, frame[i]) for i in range(frame.shape[0])])
        nabla_ss = _frame_vector(frame, fc.covariant_jacobian @ s_coeffs)
        closed = (-(B / A) * kappa * (nabla_ss - fc.divergence * s)
                  + (2.0 * Ap / A) * fc.grad_half_norm)
        out["constant_curvature_h"] = float(m.norm(p, res.horizontal - closed))
    else:
        out["constant_curvature_h"] = "skipped: base curvature is not constant"

    return out


# ---------------------------------------------------------------------------
# residual aggregation

@dataclass(frozen=True)
class ResidualReport:
    """Worst-case and mean tension residuals of a (field, metric) pair."""

    field_id: str
    metric_id: str
    sample_count: int
    max_norm_G: float
    mean_norm_G: float
    max_vertical: float
    mean_vertical: float
    max_unit: float
    mean_unit: float
    tol: float
    verdict: str


def classify(max_norm_G: float, max_vertical: float, max_unit: float, tol: float) -> str:
    if max_norm_G < tol:
        return "harmonic map"
    if max_vertical < tol:
        return "harmonic section"
    if max_unit < tol:
        return "unit harmonic section"
    return "none"


def evaluate_residuals(m: Manifold, spec: KKMetricSpec, fld, points: np.ndarray,
                       tol: float = DEFAULT_TOL_ANALYTIC) -> ResidualReport:
    """Pointwise tension flags aggregated with max over the sample set."""
    norms, verts, units = [], [], []
    for p in points:
        res = tension(m, spec, fld, p, tol=tol)
        norms.append(res.norm_G)
        verts.append(res.vertical_norm)
        units.append(res.unit_residual_norm)
    norms = np.array(norms)
    verts = np.array(verts)
    units = np.array(units)
    return ResidualReport(
        field_id=getattr(fld, "label", str(fld)),
        metric_id=spec.name,
        sample_count=len(points),
        max_norm_G=float(norms.max()),
        mean_norm_G=float(norms.mean()),
        max_vertical=float(verts.max()),
        mean_vertical=float(verts.mean()),
        max_unit=float(units.max()),
        mean_unit=float(units.mean()),
        tol=tol,
        verdict=classify(float(norms.max()), float(verts.max()), float(units.max()), tol),
    )
