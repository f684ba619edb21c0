"""Catalog of explicit vector fields with closed-form derived quantities.

Sphere fields carry their natural ambient formulas; torus fields carry
coordinate components.  Each field exposes

* ``value(m, p)``     the (tangent) vector at p,
* ``jacobian(m, p)``  ambient Jacobian (spheres) / coordinate partials (tori),
* ``hessian(m, p)``   second derivatives, or None to trigger stencil paths,

plus ``label`` for reports.  ``closed_form_oracle`` returns the textbook
derived quantities independently of geometry.field_calculus and is used as
the oracle against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    FieldCalculus,
    Manifold,
    SmoothScalar2D,
    UnsupportedOperation,
    is_torus,
)

NORMALIZATION_FLOOR = 1e-9


class DegenerateFieldError(ValueError):
    """Normalized field evaluated too close to a zero of its denominator."""


# ---------------------------------------------------------------------------
# sphere fields

@dataclass(frozen=True)
class Conformal:
    """Gradient on S^n of the height function lam(x) = <a, x>: sigma = a - lam x."""

    a: tuple[float, ...]

    @property
    def a_vec(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float)

    @property
    def label(self) -> str:
        return "conformal(a=" + ",".join(f"{c:g}" for c in self.a) + ")"

    def height(self, p: np.ndarray) -> float:
        return float(self.a_vec @ p)

    def value(self, m, p):
        return self.a_vec - self.height(p) * p

    def jacobian(self, m, p):
        a = self.a_vec
        return -(np.outer(p, a) + self.height(p) * np.eye(a.size))

    def hessian(self, m, p):
        a = self.a_vec
        N = a.size
        H = np.zeros((N, N, N))
        for c in range(N):
            for i in range(N):
                H[c, i, c] -= a[i]
                H[c, c, i] -= a[i]
        return H


@dataclass(frozen=True)
class QuadraticGradient:
    """Half-gradient on S^n of a diagonalized quadratic form.

    eigs is a tuple of (eigenvalue, multiplicity) pairs summing to n + 1;
    the field is sigma(x) = D x - <D x, x> x for the expanded diagonal D.
    """

    eigs: tuple[tuple[float, int], ...]

    @classmethod
    def from_matrix(cls, M: np.ndarray, cluster_tol: float = 1e-10) -> "QuadraticGradient":
        """Canonicalize an arbitrary symmetric matrix by eigendecomposition."""
        M = np.asarray(M, dtype=float)
        if not np.allclose(M, M.T, atol=1e-12):
            raise ValueError("quadratic form matrix must be symmetric")
        vals = np.sort(np.linalg.eigvalsh(M))[::-1]
        eigs: list[tuple[float, int]] = []
        for v in vals:
            if eigs and abs(v - eigs[-1][0]) <= cluster_tol:
                eigs[-1] = (eigs[-1][0], eigs[-1][1] + 1)
            else:
                eigs.append((float(v), 1))
        return cls(tuple(eigs))

    @property
    def diag(self) -> np.ndarray:
        out = []
        for val, mult in self.eigs:
            out.extend([val] * mult)
        return np.asarray(out, dtype=float)

    @property
    def label(self) -> str:
        return "quadratic(" + ",".join(f"{v:g}x{m}" for v, m in self.eigs) + ")"

    def lam(self, p: np.ndarray) -> float:
        return float(p @ (self.diag * p))

    def value(self, m, p):
        d = self.diag
        return d * p - self.lam(p) * p

    def jacobian(self, m, p):
        d = self.diag
        lam = self.lam(p)
        return np.diag(d) - 2.0 * np.outer(p, d * p) - lam * np.eye(d.size)

    def hessian(self, m, p):
        d = self.diag
        N = d.size
        dp = d * p
        # H[c,i,j] = -2 D_ij x_c - 2 (Dx)_i delta_cj - 2 (Dx)_j delta_ci
        H = np.zeros((N, N, N))
        for c in range(N):
            for i in range(N):
                H[c, i, i] += -2.0 * d[i] * p[c]
                H[c, i, c] += -2.0 * dp[i]
                H[c, c, i] += -2.0 * dp[i]
        return H


@dataclass(frozen=True)
class KillingRotation:
    """Sum of coordinate-plane rotations on S^{n}: xi(x) = S x, S antisymmetric.

    thetas are the per-plane speeds on planes (x1,x2), (x3,x4), ...; any
    trailing zeros pad toward the invariant axis.
    """

    thetas: tuple[float, ...]
    ambient_dim: int

    def __post_init__(self):
        if 2 * len(self.thetas) > self.ambient_dim:
            raise ValueError("more rotation planes than the ambient dimension allows")

    @property
    def spin_matrix(self) -> np.ndarray:
        S = np.zeros((self.ambient_dim, self.ambient_dim))
        for i, th in enumerate(self.thetas):
            S[2 * i, 2 * i + 1] = -th
            S[2 * i + 1, 2 * i] = th
        return S

    @property
    def speed_diag(self) -> np.ndarray:
        d = np.zeros(self.ambient_dim)
        for i, th in enumerate(self.thetas):
            d[2 * i] = th * th
            d[2 * i + 1] = th * th
        return d

    @property
    def label(self) -> str:
        return "killing(theta=" + ",".join(f"{t:g}" for t in self.thetas) + f";N={self.ambient_dim})"

    def constant_norm(self) -> float | None:
        """Return the constant |xi| when the field has one, else None."""
        nz = [abs(t) for t in self.thetas if t != 0.0]
        if 2 * len(self.thetas) == self.ambient_dim and len(nz) == len(self.thetas):
            if max(nz) - min(nz) < 1e-15:
                return nz[0]
        return None

    def value(self, m, p):
        return self.spin_matrix @ p

    def jacobian(self, m, p):
        return self.spin_matrix

    def hessian(self, m, p):
        N = self.ambient_dim
        return np.zeros((N, N, N))


# ---------------------------------------------------------------------------
# torus fields

@dataclass(frozen=True)
class ParallelTorus:
    """Constant-component field on a 2-torus; parallel for the flat metric."""

    v: tuple[float, float]

    @property
    def label(self) -> str:
        return f"parallel(v={self.v[0]:g},{self.v[1]:g})"

    def value(self, m, p):
        return np.asarray(self.v, dtype=float)

    def jacobian(self, m, p):
        return np.zeros((2, 2))

    def hessian(self, m, p):
        return np.zeros((2, 2, 2))


@dataclass(frozen=True)
class TrigVectorField:
    """Torus field whose components are trigonometric polynomials.

    components[k] is a tuple of (amp, kx, ky, phase) terms giving
    sum amp * cos(kx x + ky y + phase); wavenumbers are integers for
    2pi-periodic tori.
    """

    components: tuple[tuple[tuple[float, int, int, float], ...], ...]

    @property
    def label(self) -> str:
        return f"trigfield[{len(self.components[0])},{len(self.components[1])}]"

    def _comp(self, k: int, p) -> float:
        return sum(a * math.cos(kx * p[0] + ky * p[1] + ph)
                   for a, kx, ky, ph in self.components[k])

    def value(self, m, p):
        return np.array([self._comp(0, p), self._comp(1, p)])

    def jacobian(self, m, p):
        J = np.zeros((2, 2))
        for k in range(2):
            for a, kx, ky, ph in self.components[k]:
                s = math.sin(kx * p[0] + ky * p[1] + ph)
                J[k, 0] -= a * kx * s
                J[k, 1] -= a * ky * s
        return J

    def hessian(self, m, p):
        H = np.zeros((2, 2, 2))
        for k in range(2):
            for a, kx, ky, ph in self.components[k]:
                c = math.cos(kx * p[0] + ky * p[1] + ph)
                H[k, 0, 0] -= a * kx * kx * c
                H[k, 0, 1] -= a * kx * ky * c
                H[k, 1, 0] -= a * kx * ky * c
                H[k, 1, 1] -= a * ky * ky * c
        return H


def random_trig_field(rng: np.random.Generator, max_mode: int = 2,
                      amplitude: float = 1.0) -> TrigVectorField:
    comps = []
    for _ in range(2):
        terms = [(amplitude * rng.normal() * 0.5, 0, 0, 0.0)]
        for kx in range(0, max_mode + 1):
            for ky in range(-max_mode, max_mode + 1):
                if kx == 0 and ky <= 0:
                    continue
                decay = 1.0 / (1.0 + (kx * kx + ky * ky))
                terms.append((amplitude * decay * rng.normal(),
                              kx, ky, rng.uniform(0.0, 2 * math.pi)))
        comps.append(tuple(terms))
    return TrigVectorField(tuple(comps))


@dataclass(frozen=True)
class UnitAngleField:
    """Unit torus field e^{-u} (cos theta, sin theta) for an angle scalar.

    The same spec evaluated on a conformally changed torus automatically
    rescales to stay unit there, which is what the conformal energy
    comparison needs.
    """

    theta: SmoothScalar2D

    @property
    def label(self) -> str:
        return f"unit_angle({self.theta.label})"

    @staticmethod
    def _u(m):
        if m.kind == "conformal_torus":
            return m.u
        return None

    def value(self, m, p):
        th = self.theta.value(p)
        scale = 1.0
        u = self._u(m)
        if u is not None:
            scale = math.exp(-u.value(p))
        return scale * np.array([math.cos(th), math.sin(th)])

    def jacobian(self, m, p):
        th = self.theta.value(p)
        dth = self.theta.grad(p)
        c, s = math.cos(th), math.sin(th)
        u = self._u(m)
        if u is None:
            uval, du = 0.0, np.zeros(2)
        else:
            uval, du = u.value(p), u.grad(p)
        scale = math.exp(-uval)
        J = np.zeros((2, 2))
        for i in range(2):
            J[0, i] = scale * (-du[i] * c - s * dth[i])
            J[1, i] = scale * (-du[i] * s + c * dth[i])
        return J

    def hessian(self, m, p):
        return None


# ---------------------------------------------------------------------------
# wrappers

@dataclass(frozen=True)
class Scaled:
    """Constant multiple of another field."""

    inner: object
    factor: float

    @property
    def label(self) -> str:
        return f"scaled({self.factor:g}*{self.inner.label})"

    def value(self, m, p):
        return self.factor * self.inner.value(m, p)

    def jacobian(self, m, p):
        J = self.inner.jacobian(m, p)
        return None if J is None else self.factor * J

    def hessian(self, m, p):
        H = self.inner.hessian(m, p)
        return None if H is None else self.factor * H


@dataclass(frozen=True)
class Normalized:
    """inner / |inner|_g, defined away from zeros of the inner field."""

    inner: object

    @property
    def label(self) -> str:
        return f"normalized({self.inner.label})"

    def _norm_euclid(self, m, p) -> float:
        return float(np.linalg.norm(self.inner.value(m, p)))

    def value(self, m, p):
        v = self.inner.value(m, p)
        if is_torus(m):
            gnorm = m.norm(p, v)
            if gnorm < NORMALIZATION_FLOOR:
                raise DegenerateFieldError(
                    f"{self.label}: |inner| = {gnorm:.2e} below {NORMALIZATION_FLOOR:g} at {p}")
            return v / gnorm
        n = np.linalg.norm(v)
        if n < NORMALIZATION_FLOOR:
            raise DegenerateFieldError(
                f"{self.label}: |inner| = {n:.2e} below {NORMALIZATION_FLOOR:g} at {p}")
        return v / n

    def jacobian(self, m, p):
        J = self.inner.jacobian(m, p)
        if J is None:
            return None
        v = self.inner.value(m, p)
        if is_torus(m):
            q = float(v @ v)
            if m.kind == "conformal_torus":
                uval = m.u.value(p)
                du = m.u.grad(p)
            else:
                uval, du = 0.0, np.zeros(2)
            g = math.exp(uval) * math.sqrt(q)
            if g < NORMALIZATION_FLOOR:
                raise DegenerateFieldError(f"{self.label}: degenerate at {p}")
            # d_i g = g * (u_i + (v . d_i v) / q)
            dg = np.array([g * (du[i] + float(v @ J[:, i]) / q) for i in range(2)])
            out = np.zeros((2, 2))
            for i in range(2):
                out[:, i] = J[:, i] / g - v * dg[i] / (g * g)
            return out
        n = np.linalg.norm(v)
        if n < NORMALIZATION_FLOOR:
            raise DegenerateFieldError(f"{self.label}: degenerate at {p}")
        return J / n - np.outer(v, v @ J) / n ** 3

    def hessian(self, m, p):
        return None


@dataclass(frozen=True)
class LinearCombination:
    """Pointwise linear combination sum_k coeff_k * field_k (same manifold)."""

    terms: tuple[tuple[float, object], ...]

    @property
    def label(self) -> str:
        return "+".join(f"{c:g}*{f.label}" for c, f in self.terms)

    def value(self, m, p):
        return sum(c * f.value(m, p) for c, f in self.terms)

    def jacobian(self, m, p):
        out = None
        for c, f in self.terms:
            J = f.jacobian(m, p)
            if J is None:
                return None
            out = c * J if out is None else out + c * J
        return out

    def hessian(self, m, p):
        out = None
        for c, f in self.terms:
            H = f.hessian(m, p)
            if H is None:
                return None
            out = c * H if out is None else out + c * H
        return out


# ---------------------------------------------------------------------------
# operations

def evaluate(fld, m: Manifold, p: np.ndarray) -> np.ndarray:
    """Field value at p, after validating the point."""
    p = m.check_point(p)
    return fld.value(m, p)


@dataclass(frozen=True)
class AxisInfo:
    """Dimension bookkeeping of a rotation field's invariant axis."""

    dim: int
    maximal: bool
    k: int
    planes: int


def axis_info(thetas, ambient_dim: int) -> AxisInfo:
    """Invariant-axis dimension of a Killing rotation field.

    thetas must list its nonzero plane speeds first; the axis dimension is
    ambient_dim - 2 * (number of active planes); maximality follows the
    parity of the sphere.
    """
    thetas = tuple(float(t) for t in thetas)
    nz = 0
    for t in thetas:
        if t != 0.0:
            nz += 1
        else:
            break
    if any(t != 0.0 for t in thetas[nz:]):
        raise ValueError("nonzero plane speeds must come before the zero padding")
    if 2 * nz > ambient_dim:
        raise ValueError("too many rotation planes for the ambient dimension")
    dim_axis = ambient_dim - 2 * nz
    if ambient_dim % 2 == 1:
        # even sphere S^{2p} in R^{2p+1}: dim F = 2k + 1
        p = (ambient_dim - 1) // 2
        k = (dim_axis - 1) // 2
        maximal = k == p - 1
    else:
        # odd sphere S^{2p+1} in R^{2p+2}: dim F = 2k
        p = ambient_dim // 2 - 1
        k = dim_axis // 2
        maximal = k == p
    return AxisInfo(dim=dim_axis, maximal=maximal, k=k, planes=nz)


def _scaled_calculus(base: FieldCalculus, c: float) -> FieldCalculus:
    return FieldCalculus(
        norm_sq=c * c * base.norm_sq,
        covariant_jacobian=c * base.covariant_jacobian,
        rough_laplacian=c * base.rough_laplacian,
        grad_half_norm=c * c * base.grad_half_norm,
        jacobian_norm_sq=c * c * base.jacobian_norm_sq,
        divergence=c * base.divergence,
        lie_norm_sq=c * c * base.lie_norm_sq,
        frame=base.frame,
    )


def closed_form_oracle(m: Manifold, fld, p: np.ndarray,
                       frame: np.ndarray | None = None) -> FieldCalculus:
    """Derived quantities from the catalog's closed forms, as an oracle.

    Raises UnsupportedOperation for field kinds (or field/manifold pairs)
    without closed forms; those are checked against stencil paths instead.
    """
    p = m.check_point(p)
    if frame is None:
        frame = m.frame(p)

    if isinstance(fld, Scaled):
        return _scaled_calculus(closed_form_oracle(m, fld.inner, p, frame), fld.factor)

    if isinstance(fld, Normalized):
        inner = fld.inner
        if isinstance(inner, KillingRotation):
            k = inner.constant_norm()
            if k is not None:
                return _scaled_calculus(closed_form_oracle(m, inner, p, frame), 1.0 / k)
        raise UnsupportedOperation(f"no closed forms for {fld.label}")

    if isinstance(fld, Conformal):
        if m.kind != "sphere":
            raise UnsupportedOperation("conformal gradient fields live on spheres")
        n = m.dim
        a = fld.a_vec
        lam = fld.height(p)
        sigma = fld.value(m, p)
        return FieldCalculus(
            norm_sq=float(a @ a) - lam * lam,
            covariant_jacobian=-lam * np.eye(n),
            rough_laplacian=sigma.copy(),
            grad_half_norm=-lam * sigma,
            jacobian_norm_sq=n * lam * lam,
            divergence=-n * lam,
            lie_norm_sq=4.0 * n * lam * lam,
            frame=frame,
        )

    if isinstance(fld, QuadraticGradient):
        if m.kind != "sphere":
            raise UnsupportedOperation("quadratic gradient fields live on spheres")
        n = m.dim
        d = fld.diag
        lam = fld.lam(p)
        lam2 = float(p @ (d * d * p))
        sigma = fld.value(m, p)
        sigma2 = d * d * p - lam2 * p
        J = np.zeros((n, n))
        for j in range(n):
            for i in range(n):
                J[i, j] = float(frame[i] @ (d * frame[j])) - lam * (i == j)
        jn2 = float(d @ d) - 2.0 * lam2 - 2.0 * lam * float(np.sum(d)) + (n + 3) * lam * lam
        return FieldCalculus(
            norm_sq=lam2 - lam * lam,
            covariant_jacobian=J,
            rough_laplacian=(n + 3) * sigma,
            grad_half_norm=sigma2 - 2.0 * lam * sigma,
            jacobian_norm_sq=jn2,
            divergence=float(np.sum(d)) - (n + 1) * lam,
            lie_norm_sq=4.0 * jn2,
            frame=frame,
        )

    if isinstance(fld, KillingRotation):
        if m.kind != "sphere":
            raise UnsupportedOperation("rotation fields live on spheres")
        n = m.dim
        S = fld.spin_matrix
        d = fld.speed_diag
        xi = S @ p
        norm_sq = float(xi @ xi)
        J = np.zeros((n, n))
        for j in range(n):
            Sej = S @ frame[j]
            for i in range(n):
                J[i, j] = float(frame[i] @ Sej)
        dp = d * p
        theta_sq = float(sum(t * t for t in fld.thetas))
        return FieldCalculus(
            norm_sq=norm_sq,
            covariant_jacobian=J,
            rough_laplacian=(n - 1) * xi,
            grad_half_norm=dp - float(dp @ p) * p,
            jacobian_norm_sq=2.0 * (theta_sq - norm_sq),
            divergence=0.0,
            lie_norm_sq=0.0,
            frame=frame,
        )

    if isinstance(fld, ParallelTorus):
        if m.kind != "flat_torus":
            raise UnsupportedOperation("parallel-field closed forms hold on the flat torus")
        v = np.asarray(fld.v, dtype=float)
        return FieldCalculus(
            norm_sq=float(v @ v),
            covariant_jacobian=np.zeros((2, 2)),
            rough_laplacian=np.zeros(2),
            grad_half_norm=np.zeros(2),
            jacobian_norm_sq=0.0,
            divergence=0.0,
            lie_norm_sq=0.0,
            frame=frame,
        )

    raise UnsupportedOperation(f"no closed forms for {getattr(fld, 'label', fld)}")
