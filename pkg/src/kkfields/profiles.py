"""Metric profiles B(t) that solve the harmonic-section ODEs, plus the
obstruction certificates for the impossible cases.

Each solvable family reduces the vertical tension of its field to a linear
first-order scalar ODE in t = |sigma|^2 on the attained interval
[0, t_peak]:

  quadratic (S^n, n odd > 3, eigenvalue gap mu, equal multiplicities):
      p(t) B' + (n+3) B = t (mu^2 - 4t) C' + ((n+1)/2 mu^2 - 2(n+3) t) C,
      p(t) = (n-3)/2 mu^2 - (n-5) t,                    t_peak = mu^2/4
  killing_even (S^{2p}, k < p-1, speed lam):
      2 lam^2 (p-k-1) B' + (2p-1) B
          = (2 lam^2 (p-k) - (2p+1) t) C + t (lam^2 - t) C',  t_peak = lam^2
  killing_odd (S^{2p+1}, k < p, speed lam):
      lam^2 (p-k) B' + p B
          = (lam^2 (p+1-k) - (p+1) t) C + t/2 (lam^2 - t) C', t_peak = lam^2

plus the enlarged families with A = B + A0 (C = 0 only).  Closed forms are
returned when the integrating factor collapses; otherwise a
classical fixed-step RK4 integrates the ODE and the residual of the
back-substitution certifies the construction.  Profiles are prolonged past
t_peak by a positive C^1 exponential tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kkmetrics import (
    KKMetricSpec,
    ScalarProfile,
    constant_profile,
    exponential_profile,
    extend_c1,
    linear_profile,
    power_profile,
    shifted_profile,
)

FEASIBLE = "feasible"


@dataclass(frozen=True)
class Obstruction:
    """Numeric witness that a positivity requirement rules a case out."""

    case_id: str
    inequality: str
    witness_point: float
    witness_value: float
    margin: float

    def describe(self) -> str:
        return (f"{self.case_id}: {self.inequality} "
                f"(witness {self.witness_value:.6g} at {self.witness_point:.6g}, "
                f"margin {self.margin:.3e})")


@dataclass(frozen=True)
class ProfileProblem:
    """A solvable family with its C profile and attained t-interval."""

    family: str
    params: dict
    C: ScalarProfile
    t_peak: float


class ProfileConstructionError(ValueError):
    """The integrated profile failed positivity or its residual certificate."""


# ---------------------------------------------------------------------------
# family coefficient tables: p(t) B' + q B = r(t)

def _ode_coefficients(problem: ProfileProblem) -> tuple[Callable, float, Callable]:
    fam = problem.family
    C = problem.C
    if fam == "quadratic":
        n = problem.params["n"]
        mu = problem.params["mu"]
        if n % 2 == 0 or n <= 3:
            raise ValueError(f"quadratic family solvable only for odd n > 3, got n = {n}")

        def pcoef(t):
            return (n - 3) / 2.0 * mu * mu - (n - 5) * t

        def rhs(t):
            return (t * (mu * mu - 4 * t) * C.derivative(t)
                    + ((n + 1) / 2.0 * mu * mu - 2 * (n + 3) * t) * C.value(t))

        return pcoef, float(n + 3), rhs
    if fam == "killing_even":
        p = problem.params["p"]
        k = problem.params["k"]
        lam = problem.params["lam"]
        if not 0 <= k < p - 1:
            raise ValueError(f"killing_even needs 0 <= k < p-1, got k = {k}, p = {p}")

        def pcoef(t):
            return 2.0 * lam * lam * (p - k - 1)

        def rhs(t):
            return ((2 * lam * lam * (p - k) - (2 * p + 1) * t) * C.value(t)
                    + t * (lam * lam - t) * C.derivative(t))

        return pcoef, float(2 * p - 1), rhs
    if fam == "killing_odd":
        p = problem.params["p"]
        k = problem.params["k"]
        lam = problem.params["lam"]
        if not 0 <= k < p:
            raise ValueError(f"killing_odd needs 0 <= k < p, got k = {k}, p = {p}")

        def pcoef(t):
            return lam * lam * (p - k)

        def rhs(t):
            return ((lam * lam * (p + 1 - k) - (p + 1) * t) * C.value(t)
                    + 0.5 * t * (lam * lam - t) * C.derivative(t))

        return pcoef, float(p), rhs
    raise ValueError(f"no ODE family named {fam!r}")


def peak_norm_sq(family: str, **params) -> float:
    """Attained maximum of |sigma|^2 for the family's field."""
    if family == "quadratic":
        return params["mu"] ** 2 / 4.0
    if family in ("killing_even", "killing_odd", "enlargedA_killing"):
        return params["lam"] ** 2
    if family == "enlargedA_conformal":
        return params["a_sq"]
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# closed forms

def closed_form_B(family: str, K: float = 1.0, **params) -> ScalarProfile | Obstruction:
    """Closed-form solving profile of a family, or its Obstruction.

    Families and their parameters:

    quadratic            n, mu     exp for n = 5, extended power law for n > 5;
                                   n = 3 and even n return Obstructions
    killing_even         p, k, lam exp, needs k != p - 1 (else Obstruction)
    killing_odd          p, k, lam exp for k < p (k = p returns Obstruction);
                                   k = 0 also admits variant="power"
    enlargedA_conformal  n, a_sq   pairs with A = B + A0, C = 0
    enlargedA_killing    p, lam    the k = p - 1 equal-speed case with A = B + A0
    """
    if K <= 0:
        raise ValueError(f"profile scale K must be positive, got {K:g}")

    if family == "quadratic":
        n, mu = params["n"], params["mu"]
        if n == 3:
            return obstruction_check("quadratic_n3", {"mu": mu, "B0": K})
        if n % 2 == 0:
            return obstruction_check("quadratic_even", {"mu": mu, "B0": K})
        if n == 5:
            return exponential_profile(K, -8.0 / mu ** 2)
        prof = power_profile(K, (n - 3) / 2.0 * mu * mu, -(n - 5.0), (n + 3.0) / (n - 5.0))
        return extend_c1(prof, mu * mu / 4.0)

    if family == "killing_even":
        p, k, lam = params["p"], params["k"], params["lam"]
        if k == p - 1:
            return obstruction_check("killing_even_maximal", {"lam": lam, "B0": K})
        return exponential_profile(K, -(2.0 * p - 1) / (2.0 * lam * lam * (p - 1 - k)))

    if family == "killing_odd":
        p, k, lam = params["p"], params["k"], params["lam"]
        if k == p:
            return obstruction_check("killing_odd_maximal", {"lam": lam, "B0": K})
        if k == 0 and params.get("variant") == "power":
            return power_profile(K, 1.0, 1.0, -(1.0 + 1.0 / lam ** 2))
        return exponential_profile(K, -p / (lam * lam * (p - k)))

    if family == "enlargedA_conformal":
        n, a_sq = params["n"], params["a_sq"]
        if n == 2:
            return exponential_profile(K, -0.5)
        prof = power_profile(K, n + (n - 2.0) * a_sq, -(n - 2.0), 1.0 / (n - 2.0))
        return extend_c1(prof, a_sq)

    if family == "enlargedA_killing":
        p = params["p"]
        return exponential_profile(K, 1.0 / (2.0 * p) - 1.0)

    raise ValueError(f"unknown profile family {family!r}")


def enlarged_metric(B: ScalarProfile, A0: float, t_max: float = 4.0,
                    name: str = "enlarged") -> KKMetricSpec:
    """A = B + A0, C = 0: the metric class with a non-constant horizontal block."""
    if A0 <= 0:
        raise ValueError(f"A0 must be positive, got {A0:g}")
    return KKMetricSpec(shifted_profile(B, A0), B, constant_profile(0.0), t_max, name)


def constant_B_enlarged_metric(p: int, B0: float, A0: float, t_max: float,
                               name: str = "enlarged_constB") -> KKMetricSpec:
    """B constant, A(t) = A0 - (2p-1)/(2p) B0 t: the unequal-speed Killing fix.

    A stays positive on [0, t_max] only if A0 is large enough; validated by
    the caller like any other spec.
    """
    slope = -(2.0 * p - 1) / (2.0 * p) * B0
    return KKMetricSpec(linear_profile(A0, slope), constant_profile(B0),
                        constant_profile(0.0), t_max, name)


# ---------------------------------------------------------------------------
# ODE-constructed profiles

def construct_B_from_C(problem: ProfileProblem, K: float = 1.0,
                       step: float = 1e-4, t_max: float | None = None,
                       residual_tol: float = 1e-8) -> ScalarProfile:
    """Integrate the family ODE for B given C with RK4, certify, extend.

    B(0) = K; the residual of the back-substitution on a 1e-3 grid is the
    accuracy certificate, and the profile continues past t_peak with a
    positive C^1 exponential tail.
    """
    pcoef, q, rhs = _ode_coefficients(problem)
    t_peak = problem.t_peak

    def slope(t, B):
        return (rhs(t) - q * B) / pcoef(t)

    n_steps = max(int(math.ceil(t_peak / step)), 8)
    h = t_peak / n_steps
    ts = np.linspace(0.0, t_peak, n_steps + 1)
    Bs = np.empty(n_steps + 1)
    Bs[0] = K
    for i in range(n_steps):
        t, B = ts[i], Bs[i]
        k1 = slope(t, B)
        k2 = slope(t + h / 2, B + h / 2 * k1)
        k3 = slope(t + h / 2, B + h / 2 * k2)
        k4 = slope(t + h, B + h * k3)
        Bs[i + 1] = B + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    if np.any(Bs <= 0.0):
        bad = float(ts[np.argmax(Bs <= 0.0)])
        raise ProfileConstructionError(
            f"{problem.family}: integrated profile loses positivity near t = {bad:g}")

    def value_interior(t):
        # cubic Hermite between RK4 nodes; slopes come from the ODE itself
        idx = min(int(t / h), n_steps - 1)
        t0, t1 = ts[idx], ts[idx + 1]
        b0, b1 = Bs[idx], Bs[idx + 1]
        d0, d1 = slope(t0, b0), slope(t1, b1)
        x = (t - t0) / (t1 - t0)
        h00 = 2 * x ** 3 - 3 * x ** 2 + 1
        h10 = x ** 3 - 2 * x ** 2 + x
        h01 = -2 * x ** 3 + 3 * x ** 2
        h11 = x ** 3 - x ** 2
        return (h00 * b0 + h10 * (t1 - t0) * d0 + h01 * b1 + h11 * (t1 - t0) * d1)

    def deriv_interior(t):
        return slope(t, value_interior(t))

    core = ScalarProfile(value_interior, deriv_interior, "ode-constructed",
                         f"{problem.family}-ode")
    out = extend_c1(core, t_peak, label=f"{problem.family}|B(0)={K:g}")

    worst = profile_ode_residual(problem, out)
    if worst > residual_tol:
        raise ProfileConstructionError(
            f"{problem.family}: ODE residual {worst:.3e} exceeds {residual_tol:g}")
    if t_max is not None:
        for t in np.linspace(0.0, t_max, 101):
            if out.value(t) <= 0:
                raise ProfileConstructionError(
                    f"{problem.family}: extension not positive at t = {t:g}")
    return out


def profile_ode_residual(problem: ProfileProblem, B: ScalarProfile,
                         grid_step: float = 1e-3) -> float:
    """Max |p B' + q B - r| over the attained interval, relative to max(|B|, 1)."""
    pcoef, q, rhs = _ode_coefficients(problem)
    worst = 0.0
    for t in np.arange(0.0, problem.t_peak + grid_step / 2, grid_step):
        t = min(t, problem.t_peak)
        res = abs(pcoef(t) * B.derivative(t) + q * B.value(t) - rhs(t))
        worst = max(worst, res / max(abs(B.value(t)), 1.0))
    return worst


# ---------------------------------------------------------------------------
# obstruction certificates

def obstruction_check(case_id: str, params: dict,
                      spec: KKMetricSpec | None = None) -> Obstruction | str:
    """Certificate for the impossible cases, or "feasible" for solvable ones.

    quadratic_n3           mu, B0 or spec: (mu^2 - 4t) C(t) >= 2 B(t) fails at
                           t = mu^2/4 with margin 2 B(mu^2/4)
    quadratic_even         like quadratic_n3 via the forced B' = C reduction:
                           B + tC > 0 fails at t = mu^2/4
    quadratic_multiplicity same reduction for odd n with 2p != n + 1
    conformal              a_sq, spec: B(|a|^2) = -|a|^2 C(|a|^2) impossible
    killing_even_maximal   lam (+ spec): B(lam^2) + lam^2 C(lam^2) = 0 impossible
    killing_odd_maximal    lam (+ spec): B(lam^2) = -lam^2 C(lam^2) impossible
    killing_even_unequal   thetas, k: summed inequality -(2k+1) sum theta^2 > 0
    killing_odd_unequal    thetas, k: -k sum theta^2 > 0; for k = 0 the
                           strongest single-plane inequality is the witness
    """
    def B_at(t):
        if spec is not None:
            return spec.B.value(t)
        return params.get("B0", 1.0)

    def C_at(t):
        if spec is not None:
            return spec.C.value(t)
        return params.get("C0", 0.0)

    if case_id == "quadratic_n3":
        mu = params["mu"]
        t = mu * mu / 4.0
        margin = 2.0 * B_at(t)
        return Obstruction(case_id,
                           "(mu^2 - 4t) C(t) >= 2 B(t) forced, but the left side "
                           "vanishes at t = mu^2/4 while B stays positive",
                           t, -margin, margin)

    if case_id in ("quadratic_even", "quadratic_multiplicity"):
        mu = params["mu"]
        t = mu * mu / 4.0
        witness = B_at(t) + t * C_at(t)
        return Obstruction(case_id,
                           "B(mu^2/4) + mu^2/4 C(mu^2/4) = 0 forced, which breaks "
                           "positive definiteness",
                           t, witness, witness)

    if case_id == "conformal":
        a_sq = params["a_sq"]
        witness = B_at(a_sq) + a_sq * C_at(a_sq)
        return Obstruction(case_id,
                           "B(|a|^2) = -|a|^2 C(|a|^2) forced at a zero of the "
                           "height function, which breaks positive definiteness",
                           a_sq, witness, witness)

    if case_id in ("killing_even_maximal", "killing_odd_maximal"):
        lam = params["lam"]
        t = lam * lam
        witness = B_at(t) + t * C_at(t)
        return Obstruction(case_id,
                           "B(lam^2) + lam^2 C(lam^2) = 0 forced on the maximal "
                           "invariant axis, which breaks positive definiteness",
                           t, witness, witness)

    if case_id == "killing_even_unequal":
        thetas = np.asarray(params["thetas"], dtype=float)
        k = int(params["k"])
        if np.ptp(np.abs(thetas[thetas != 0])) < 1e-15:
            return FEASIBLE
        total = float(np.sum(thetas ** 2))
        margin = (2 * k + 1) * total
        return Obstruction(case_id,
                           "-(2k+1) sum theta^2 > 0 required by the summed "
                           "plane inequalities",
                           float(2 * k + 1), -margin, margin)

    if case_id == "killing_odd_unequal":
        thetas = np.asarray(params["thetas"], dtype=float)
        k = int(params["k"])
        nz = thetas[thetas != 0]
        if np.ptp(np.abs(nz)) < 1e-15:
            return FEASIBLE
        total = float(np.sum(thetas ** 2))
        if k >= 1:
            margin = k * total
            return Obstruction(case_id,
                               "-k sum theta^2 > 0 required by the summed "
                               "plane inequalities",
                               float(k), -margin, margin)
        # k = 0: the summed form degenerates; use the largest-speed plane
        p_plus_1 = len(nz)
        theta_max_sq = float(np.max(nz ** 2))
        margin = p_plus_1 * theta_max_sq - total
        return Obstruction(case_id,
                           "sum theta^2 - (p+1) theta_j^2 > 0 fails at the "
                           "fastest plane",
                           theta_max_sq, total - p_plus_1 * theta_max_sq, margin)

    raise ValueError(f"unknown obstruction case {case_id!r}")
