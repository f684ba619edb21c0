"""Energy of sections, tension-energy duality, the torus unit flow, and the
conformal-change energy identity.

The energy of sigma : (M, g) -> (TM, G) is

    E(sigma) = 1/2 int [ m A(t) + B(t) |nabla sigma|^2 + C(t) |X(sigma)|^2 ] v_g

with t = |sigma|^2 pointwise.  The first variation along section
variations sigma + s V pairs the vertical tension against the vertical
lift of V,

    dE/ds|_0 = - int ( B <tau_v, V> + C <tau_v, sigma><sigma, V> ) v_g,

which is the sign arbiter every other module leans on.  The torus flow is
projected gradient descent on the discrete energy of unit grids; its
reported residual is the pointwise norm of the constraint-tangential
discrete energy gradient, scaled back to the continuum unit-section
operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import LinearCombination, UnitAngleField
from .geometry import (
    ConformalTorus,
    FlatTorus,
    Manifold,
    SmoothScalar2D,
    random_trig_scalar,
)
from .kkmetrics import KKMetricSpec
from .quadrature import Quadrature, torus_quadrature
from .tension import tension, yano_integrand


def _energy_density(m: Manifold, spec: KKMetricSpec, fld, p: np.ndarray) -> float:
    """Integrand m A + B |nabla s|^2 + C |X(s)|^2 without the 1/2."""
    frame = m.frame(p)
    n = frame.shape[0]
    s = fld.value(m, p)
    J = np.zeros((n, n))
    from .geometry import covariant_derivative
    for j in range(n):
        dj = covariant_derivative(m, fld, p, frame[j])
        for i in range(n):
            J[i, j] = m.inner(p, dj, frame[i])
    t = m.inner(p, s, s)
    s_frame = np.array([m.inner(p, s, e) for e in frame])
    x_frame = J.T @ s_frame
    jn_sq = float(np.sum(J * J))
    x_sq = float(x_frame @ x_frame)
    return (m.dim * spec.A.value(t) + spec.B.value(t) * jn_sq
            + spec.C.value(t) * x_sq)


def energy(m: Manifold, spec: KKMetricSpec, fld, quad: Quadrature) -> float:
    """E(sigma) by quadrature with the analytic covariant derivative."""
    total = 0.0
    for p, w in zip(quad.points, quad.weights):
        total += w * _energy_density(m, spec, fld, p)
    return 0.5 * total


def energy_section_part(m: Manifold, spec: KKMetricSpec, fld, quad: Quadrature) -> float:
    """E(sigma) minus the section-independent 1/2 int m A(t) term at t = |sigma|^2.

    For unit fields this is the part conformal-change comparisons see.
    """
    total = 0.0
    for p, w in zip(quad.points, quad.weights):
        frame = m.frame(p)
        s = fld.value(m, p)
        t = m.inner(p, s, s)
        total += w * (_energy_density(m, spec, fld, p) - m.dim * spec.A.value(t))
    return 0.5 * total


def variation_duality_residual(m: Manifold, spec: KKMetricSpec, fld, variation,
                               quad: Quadrature, h: float = 1e-4) -> float:
    """Relative first-variation residual along sigma + s V, analytic path.

    dE/ds at 0 by central differences in s against the vertical pairing of
    the tension; both sides use the same quadrature.
    """
    def E_at(s: float) -> float:
        if s == 0.0:
            return energy(m, spec, fld, quad)
        return energy(m, spec, LinearCombination(((1.0, fld), (s, variation))), quad)

    dE = (E_at(h) - E_at(-h)) / (2.0 * h)

    pairing = 0.0
    for p, w in zip(quad.points, quad.weights):
        res = tension(m, spec, fld, p)
        s = fld.value(m, p)
        V = variation.value(m, p)
        t = m.inner(p, s, s)
        pairing += w * (spec.B.value(t) * m.inner(p, res.vertical, V)
                        + spec.C.value(t) * m.inner(p, res.vertical, s) * m.inner(p, s, V))
    return abs(dE + pairing) / max(abs(pairing), abs(dE), 1e-12)


def yano_integral(m: Manifold, fld, quad: Quadrature) -> float:
    """int <nabla*nabla s, s> - Ric(s,s) - |L_s g|^2/2 + (Div s)^2 v_g."""
    return quad.integrate(lambda p: yano_integrand(m, fld, p))


# ---------------------------------------------------------------------------
# discrete torus machinery

def _grid_points(m, n: int):
    Lx, Ly = m.periods
    xs = np.arange(n) * (Lx / n)
    ys = np.arange(n) * (Ly / n)
    return xs, ys


@lru_cache(maxsize=64)
def _conformal_arrays(m, n: int):
    """u, du, exp(2u) sampled on the grid; zeros for the flat torus.

    Cached per (manifold, resolution): the flow evaluates these every
    line-search step.  Manifolds are frozen dataclasses, hence hashable.
    """
    xs, ys = _grid_points(m, n)
    u = np.zeros((n, n))
    du = np.zeros((n, n, 2))
    if m.kind == "conformal_torus":
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                p = np.array([x, y])
                u[i, j] = m.u.value(p)
                du[i, j] = m.u.grad(p)
    return u, du, np.exp(2.0 * u)


def _d_forward(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(f, -1, axis=axis) - f) / h


def _d_backward(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (f - np.roll(f, 1, axis=axis)) / h


def _d_central4(f: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (8.0 * (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis))
            - (np.roll(f, -2, axis=axis) - np.roll(f, 2, axis=axis))) / (12.0 * h)


def _christoffel_action(du: np.ndarray, sigma: np.ndarray, axis: int) -> np.ndarray:
    """(Gamma_i sigma)^k = Gamma^k_{il} sigma^l on the grid, i = axis.

    Gamma^k_{il} = delta_{ki} u_l + delta_{kl} u_i - delta_{il} u_k for the
    conformal metric e^{2u} (flat).
    """
    u_dot_s = du[..., 0] * sigma[..., 0] + du[..., 1] * sigma[..., 1]
    ui = du[..., axis]
    out = ui[..., None] * sigma - sigma[..., axis][..., None] * du
    out[..., axis] += u_dot_s
    return out


def _christoffel_action_T(du: np.ndarray, v: np.ndarray, axis: int) -> np.ndarray:
    """Transpose action (Gamma_i^T v)^l = Gamma^k_{il} v^k on the grid."""
    u_dot_v = du[..., 0] * v[..., 0] + du[..., 1] * v[..., 1]
    ui = du[..., axis]
    out = v[..., axis][..., None] * du + ui[..., None] * v
    out[..., axis] -= u_dot_v
    return out


@dataclass
class DiscreteField:
    """n x n grid of torus tangent vectors in coordinate components."""

    values: np.ndarray
    manifold: FlatTorus | ConformalTorus
    unit_constrained: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def copy(self) -> "DiscreteField":
        return DiscreteField(self.values.copy(), self.manifold, self.unit_constrained)


def sample_field(m, fld, n: int, unit_constrained: bool = False) -> DiscreteField:
    xs, ys = _grid_points(m, n)
    vals = np.zeros((n, n, 2))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            vals[i, j] = fld.value(m, np.array([x, y]))
    return DiscreteField(vals, m, unit_constrained)


def project_unit(field: DiscreteField) -> DiscreteField:
    """Pointwise projection onto |sigma|_g = 1 (flat norm e^{-u})."""
    m = field.manifold
    n = field.n
    u, _, _ = _conformal_arrays(m, n)
    norms = np.sqrt(np.sum(field.values ** 2, axis=-1))
    target = np.exp(-u)
    if np.any(norms < 1e-12):
        raise ValueError("cannot project a grid field with near-zero vectors")
    out = field.values * (target / norms)[..., None]
    return DiscreteField(out, m, True)


def random_unit_field(m, n: int, rng: np.random.Generator,
                      max_mode: int = 2) -> DiscreteField:
    """Smooth random unit section with zero winding: angle = trig polynomial."""
    theta = random_trig_scalar(rng, max_mode=max_mode, amplitude=1.5, periods=m.periods)
    xs, ys = _grid_points(m, n)
    vals = np.zeros((n, n, 2))
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            th = theta.value(np.array([x, y]))
            vals[i, j] = (math.cos(th), math.sin(th))
    return project_unit(DiscreteField(vals, m, True))


def _unit_energy_terms(field: DiscreteField):
    m = field.manifold
    n = field.n
    Lx, Ly = m.periods
    hx, hy = Lx / n, Ly / n
    _, du, vfac = _conformal_arrays(m, n)
    return (hx, hy), du, vfac


def discrete_unit_energy(field: DiscreteField, spec: KKMetricSpec) -> float:
    """Energy of an exactly-unit grid: const A-part + B(1)/2 int |nabla sigma|^2.

    Forward differences plus the Christoffel action; the weight carries the
    metric volume factor.  The X(sigma)-term vanishes for unit sections and
    is not discretized.
    """
    (hx, hy), du, vfac = _unit_energy_terms(field)
    m = field.manifold
    s = field.values
    B1 = spec.B.value(1.0)
    A1 = spec.A.value(1.0)
    total = 0.0
    for axis, h in ((0, hx), (1, hy)):
        T = _d_forward(s, axis, h) + _christoffel_action(du, s, axis)
        total += float(np.sum(np.sum(T * T, axis=-1) * vfac))
    vol = float(np.sum(vfac)) * hx * hy
    return 0.5 * B1 * total * hx * hy + m.dim * A1 * vol / 2.0


def _unit_flow_gradient(field: DiscreteField, spec: KKMetricSpec):
    """Euclidean gradient of the discrete energy plus bookkeeping arrays."""
    (hx, hy), du, vfac = _unit_energy_terms(field)
    s = field.values
    B1 = spec.B.value(1.0)
    w = hx * hy
    grad = np.zeros_like(s)
    for axis, h in ((0, hx), (1, hy)):
        T = _d_forward(s, axis, h) + _christoffel_action(du, s, axis)
        weighted = T * vfac[..., None]
        grad += B1 * w * (-_d_backward(weighted, axis, h)
                          + _christoffel_action_T(du, weighted, axis))
    return grad, vfac, w, B1


def _tangential(grad: np.ndarray, s: np.ndarray) -> np.ndarray:
    s_norm_sq = np.sum(s * s, axis=-1)
    coeff = np.sum(grad * s, axis=-1) / s_norm_sq
    return grad - coeff[..., None] * s


@dataclass
class FlowResult:
    field: DiscreteField
    energies: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: bool
    final_residual: float
    final_energy: float


def unit_flow_residual(field: DiscreteField, spec: KKMetricSpec) -> float:
    """Sup over nodes of the g-norm of the tangential unit-section operator."""
    m = field.manifold
    grad, vfac, w, B1 = _unit_flow_gradient(field, spec)
    tang = _tangential(grad, field.values)
    u = 0.5 * np.log(vfac)
    gnorm = np.exp(-u) * np.sqrt(np.sum(tang * tang, axis=-1)) / (w * B1)
    return float(gnorm.max())


def unit_flow_torus(m, spec: KKMetricSpec, init: DiscreteField,
                    target_residual: float = 1e-4, max_iters: int = 60000,
                    step0: float = 0.1, max_step: float = 2.0,
                    record_every: int = 25) -> FlowResult:
    """Projected gradient descent on the unit-section energy.

    Backtracking line search starting from step0, halving on energy
    increase and regrowing on success up to max_step; unit reprojection
    after each step keeps the constraint exact.  The energy is monotone
    nonincreasing across accepted steps up to the 1e-12 line-search
    tolerance.  Non-convergence is reported in the result, not raised.
    """
    if not init.unit_constrained:
        init = project_unit(init)
    field = init.copy()
    energies = [discrete_unit_energy(field, spec)]
    residuals = [unit_flow_residual(field, spec)]
    step = step0
    iterations = 0
    converged = residuals[-1] < target_residual

    while not converged and iterations < max_iters:
        grad, vfac, w, B1 = _unit_flow_gradient(field, spec)
        tang = _tangential(grad, field.values)
        # scale-free residual for termination
        u = 0.5 * np.log(vfac)
        res = float((np.exp(-u) * np.sqrt(np.sum(tang * tang, axis=-1)) / (w * B1)).max())
        current = energies[-1]
        if res < target_residual:
            converged = True
            residuals.append(res)
            energies.append(current)
            break

        accepted = False
        for _ in range(60):
            trial = project_unit(DiscreteField(field.values - step * tang, m, True))
            e_trial = discrete_unit_energy(trial, spec)
            if e_trial <= current + 1e-12:
                field = trial
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        step = min(step * 1.3, max_step)
        iterations += 1
        if iterations % record_every == 0:
            energies.append(e_trial)
            residuals.append(unit_flow_residual(field, spec))
        else:
            energies.append(e_trial)
            residuals.append(res)

    final_res = unit_flow_residual(field, spec)
    final_energy = discrete_unit_energy(field, spec)
    return FlowResult(field, np.array(energies), np.array(residuals),
                      iterations, converged and final_res < target_residual,
                      final_res, final_energy)


def parallel_energy(m, spec: KKMetricSpec, n: int = 64) -> float:
    """Reference energy of a parallel unit field on the flat torus grid."""
    flat = FlatTorus(m.periods)
    vals = np.zeros((n, n, 2))
    vals[..., 0] = 1.0
    return discrete_unit_energy(DiscreteField(vals, flat, True), spec)


# ---------------------------------------------------------------------------
# grid duality (discretization-limited path)

def _grid_energy_general(m, spec: KKMetricSpec, vals: np.ndarray) -> float:
    """Energy of a sampled (not necessarily unit) grid, fourth-order stencils."""
    n = vals.shape[0]
    Lx, Ly = m.periods
    hx, hy = Lx / n, Ly / n
    _, du, vfac = _conformal_arrays(m, n)
    t = np.sum(vals * vals, axis=-1) * vfac
    A = np.vectorize(spec.A.value)(t)
    B = np.vectorize(spec.B.value)(t)
    C = np.vectorize(spec.C.value)(t)

    nab_sq = np.zeros((n, n))
    for axis, h in ((0, hx), (1, hy)):
        D = _d_central4(vals, axis, h) + _christoffel_action(du, vals, axis)
        nab_sq += np.sum(D * D, axis=-1)

    half_t = 0.5 * t
    gx = _d_central4(half_t, 0, hx)
    gy = _d_central4(half_t, 1, hy)
    x_sq = (gx * gx + gy * gy) / vfac

    density = m.dim * A + B * nab_sq + C * x_sq
    return 0.5 * float(np.sum(density * vfac)) * hx * hy


def grid_pairing_stats(m, spec: KKMetricSpec, fld, variation, n: int) -> tuple[float, float]:
    """(signed pairing integral, integral of its absolute integrand).

    The ratio of the two detects near-cancelling (field, variation) pairs
    for which a residual relative to the signed integral is meaningless.
    """
    V = sample_field(m, variation, n).values
    xs, ys = _grid_points(m, n)
    Lx, Ly = m.periods
    hx, hy = Lx / n, Ly / n
    pairing = 0.0
    pairing_abs = 0.0
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            p = np.array([x, y])
            res = tension(m, spec, fld, p)
            s = fld.value(m, p)
            t = m.inner(p, s, s)
            w = hx * hy * m.conformal_factor(p)
            term = (spec.B.value(t) * m.inner(p, res.vertical, V[i, j])
                    + spec.C.value(t) * m.inner(p, res.vertical, s)
                    * m.inner(p, s, V[i, j]))
            pairing += w * term
            pairing_abs += w * abs(term)
    return pairing, pairing_abs


def grid_variation_duality_residual(m, spec: KKMetricSpec, fld, variation,
                                    n: int, h: float = 1e-4) -> float:
    """Duality residual with the discrete energy against the analytic tension.

    Returns |dE/ds + int <tau, V-lift>_G| / max(|int <tau, V-lift>_G|, 1e-12).
    The gap is dominated by the grid discretization of the energy, so it
    shrinks under refinement; that behavior is itself part of the contract.
    Callers sampling random pairs should reject near-cancelling pairings
    (see grid_pairing_stats), where this relative measure degenerates.
    """
    sigma = sample_field(m, fld, n).values
    V = sample_field(m, variation, n).values

    def E_at(s: float) -> float:
        return _grid_energy_general(m, spec, sigma + s * V)

    dE = (E_at(h) - E_at(-h)) / (2.0 * h)
    pairing, _ = grid_pairing_stats(m, spec, fld, variation, n)
    return abs(dE + pairing) / max(abs(pairing), 1e-12)


# ---------------------------------------------------------------------------
# conformal change of the unit-section energy

@dataclass(frozen=True)
class ConformalChange:
    """Conformal move g -> e^{2u} g with the section rescaling e^{s u} sigma.

    The default exponent s = -1 keeps unit sections unit in the new
    metric; that invariant is what the energy identity is stated for.
    """

    u: SmoothScalar2D
    sigma_exponent: float = -1.0


def _add_scalars(a: SmoothScalar2D, b: SmoothScalar2D) -> SmoothScalar2D:
    return SmoothScalar2D(
        value=lambda p: a.value(p) + b.value(p),
        grad=lambda p: a.grad(p) + b.grad(p),
        hess=lambda p: a.hess(p) + b.hess(p),
        label=f"{a.label}+{b.label}",
    )


def changed_torus(m, change: ConformalChange) -> ConformalTorus:
    if m.kind == "conformal_torus":
        return ConformalTorus(_add_scalars(m.u, change.u), m.periods)
    return ConformalTorus(change.u, m.periods)


def conformal_energy_delta(m, change: ConformalChange, fld: UnitAngleField,
                           spec: KKMetricSpec, n: int = 64) -> tuple[float, float]:
    """(measured, predicted) change of the section energy under g -> e^{2u} g.

    measured: quadrature energies (section-dependent part) of the same unit
    section before and after the change.  predicted:
    1/2 B(1) int [ |grad u|^2_g + 2 u K_g ] v_g, a function of u alone.
    """
    if abs(change.sigma_exponent + 1.0) > 1e-12:
        raise ValueError("only the unit-preserving exponent -1 keeps the "
                         "identity applicable; rescale u instead")
    m2 = changed_torus(m, change)
    q1 = torus_quadrature(m, n)
    q2 = torus_quadrature(m2, n)
    e1 = energy_section_part(m, spec, fld, q1)
    e2 = energy_section_part(m2, spec, fld, q2)
    measured = e2 - e1

    # flat-coordinate form: int |grad_d u|^2 - 2 u (flat div-grad of u_base)
    B1 = spec.B.value(1.0)
    Lx, Ly = m.periods
    hx, hy = Lx / n, Ly / n
    xs, ys = _grid_points(m, n)
    total = 0.0
    for x in xs:
        for y in ys:
            p = np.array([x, y])
            g = change.u.grad(p)
            term = float(g @ g)
            if m.kind == "conformal_torus":
                hb = m.u.hess(p)
                term -= 2.0 * change.u.value(p) * (hb[0, 0] + hb[1, 1])
            total += term
    predicted = 0.5 * B1 * total * hx * hy
    return measured, predicted
