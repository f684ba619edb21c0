"""Concrete Riemannian manifolds with pointwise covariant calculus.

Supported base manifolds: round spheres S^n embedded in R^{n+1}, flat
2-tori, and conformally flat 2-tori with metric e^{2u} (dx^2 + dy^2).

Sign conventions, fixed once and used by every module:

* curvature       R(X, Y)Z = g(Y, Z) X - g(X, Z) Y on the unit sphere,
                  so R(X, Y)Y = X for orthonormal X, Y (sectional +1);
* Laplacians      nonnegative spectrum: scalar Delta = -div grad and the
                  rough Laplacian is -trace of the second covariant
                  derivative, so Delta <a, x> = n <a, x> on S^n.

Every operation is a pure function of immutable inputs.  Fields are duck
typed: they provide ``value(m, p)``, ``jacobian(m, p)`` and optionally
``hessian(m, p)`` (see fields.py).  On spheres these are ambient-space
quantities of the field's own smooth ambient extension; on tori they are
coordinate components and coordinate partial derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TOL_ON_MANIFOLD = 1e-8


class OffManifoldError(ValueError):
    """Input point does not lie on the manifold within tolerance."""


class UnsupportedOperation(ValueError):
    """Operation not defined for this manifold or field combination."""


# ---------------------------------------------------------------------------
# smooth doubly periodic scalars (conformal factors, torus angle functions)

@dataclass(frozen=True)
class SmoothScalar2D:
    """Doubly periodic scalar with analytic gradient and Hessian."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    label: str = "scalar"


def zero_scalar() -> SmoothScalar2D:
    return SmoothScalar2D(
        value=lambda p: 0.0,
        grad=lambda p: np.zeros(2),
        hess=lambda p: np.zeros((2, 2)),
        label="0",
    )


def product_sine_scalar(amplitude: float, kx: int = 1, ky: int = 1,
                        periods: tuple[float, float] = (2 * math.pi, 2 * math.pi)) -> SmoothScalar2D:
    """amplitude * sin(ax x) * sin(ay y), wavenumbers commensurate with the periods."""
    ax = 2 * math.pi * kx / periods[0]
    ay = 2 * math.pi * ky / periods[1]

    def val(p):
        return amplitude * math.sin(ax * p[0]) * math.sin(ay * p[1])

    def grad(p):
        sx, cx = math.sin(ax * p[0]), math.cos(ax * p[0])
        sy, cy = math.sin(ay * p[1]), math.cos(ay * p[1])
        return amplitude * np.array([ax * cx * sy, ay * sx * cy])

    def hess(p):
        sx, cx = math.sin(ax * p[0]), math.cos(ax * p[0])
        sy, cy = math.sin(ay * p[1]), math.cos(ay * p[1])
        hxx = -ax * ax * sx * sy
        hxy = ax * ay * cx * cy
        hyy = -ay * ay * sx * sy
        return amplitude * np.array([[hxx, hxy], [hxy, hyy]])

    return SmoothScalar2D(val, grad, hess, label=f"{amplitude}*sin({kx}x)sin({ky}y)")


def trig_sum_scalar(terms: Sequence[tuple[float, int, int, float]],
                    periods: tuple[float, float] = (2 * math.pi, 2 * math.pi)) -> SmoothScalar2D:
    """Sum of amp * cos(kx x + ky y + phase) terms; analytic derivatives."""
    terms = tuple((float(a), int(kx), int(ky), float(ph)) for a, kx, ky, ph in terms)
    fx = 2 * math.pi / periods[0]
    fy = 2 * math.pi / periods[1]

    def val(p):
        return sum(a * math.cos(fx * kx * p[0] + fy * ky * p[1] + ph)
                   for a, kx, ky, ph in terms)

    def grad(p):
        g = np.zeros(2)
        for a, kx, ky, ph in terms:
            s = math.sin(fx * kx * p[0] + fy * ky * p[1] + ph)
            g[0] -= a * fx * kx * s
            g[1] -= a * fy * ky * s
        return g

    def hess(p):
        h = np.zeros((2, 2))
        for a, kx, ky, ph in terms:
            c = math.cos(fx * kx * p[0] + fy * ky * p[1] + ph)
            wx, wy = fx * kx, fy * ky
            h[0, 0] -= a * wx * wx * c
            h[0, 1] -= a * wx * wy * c
            h[1, 1] -= a * wy * wy * c
        h[1, 0] = h[0, 1]
        return h

    return SmoothScalar2D(val, grad, hess, label=f"trig[{len(terms)}]")


def random_trig_scalar(rng: np.random.Generator, max_mode: int = 2, amplitude: float = 1.0,
                       periods: tuple[float, float] = (2 * math.pi, 2 * math.pi)) -> SmoothScalar2D:
    """Random low-frequency trigonometric polynomial, reproducible from rng."""
    terms = []
    for kx in range(0, max_mode + 1):
        for ky in range(-max_mode, max_mode + 1):
            if kx == 0 and ky <= 0:
                continue
            decay = 1.0 / (1.0 + kx * kx + ky * ky)
            amp = amplitude * decay * rng.normal()
            ph = rng.uniform(0.0, 2 * math.pi)
            terms.append((amp, kx, ky, ph))
    return trig_sum_scalar(terms, periods)


# ---------------------------------------------------------------------------
# manifolds

@dataclass(frozen=True)
class RoundSphere:
    """Unit sphere S^n in R^{n+1}, n >= 2, constant sectional curvature +1."""

    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"sphere dimension must be >= 2, got {self.dim}")

    kind = "sphere"

    @property
    def ambient_dim(self) -> int:
        return self.dim + 1

    def contains(self, p: np.ndarray, tol: float = TOL_ON_MANIFOLD) -> bool:
        return abs(np.linalg.norm(p) - 1.0) <= tol

    def check_point(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.ambient_dim,):
            raise OffManifoldError(f"expected point in R^{self.ambient_dim}, got shape {p.shape}")
        if not self.contains(p):
            raise OffManifoldError(f"|p| = {np.linalg.norm(p):.3e} is not 1 within {TOL_ON_MANIFOLD:g}")
        return p

    def project_point(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(p, dtype=float) / np.linalg.norm(p)

    def tangent_project(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return v - (v @ p) * p

    def inner(self, p: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
        return float(X @ Y)

    def norm(self, p: np.ndarray, X: np.ndarray) -> float:
        return float(np.linalg.norm(X))

    def frame(self, p: np.ndarray) -> np.ndarray:
        """Orthonormal tangent frame, rows of shape (dim, ambient_dim).

        Gram-Schmidt on the projected ambient basis, pivoted deterministically
        by largest projected norm so frame-dependent intermediates reproduce.
        """
        N = self.ambient_dim
        proj = np.eye(N) - np.outer(p, p)
        norms = np.linalg.norm(proj, axis=0)
        order = np.argsort(-norms, kind="stable")
        frame = []
        for idx in order:
            v = proj[:, idx].copy()
            for e in frame:
                v -= (e @ v) * e
            nv = np.linalg.norm(v)
            if nv > 1e-10:
                frame.append(v / nv)
            if len(frame) == self.dim:
                break
        return np.array(frame)

    def exp(self, p: np.ndarray, X: np.ndarray, s: float = 1.0) -> np.ndarray:
        nx = np.linalg.norm(X)
        if nx < 1e-300:
            return p.copy()
        return math.cos(s * nx) * p + math.sin(s * nx) * (X / nx)

    def transport(self, p: np.ndarray, X: np.ndarray, w: np.ndarray, s: float) -> np.ndarray:
        """Parallel transport of w from p to exp_p(s X) along the great circle."""
        nx = np.linalg.norm(X)
        if nx < 1e-300:
            return w.copy()
        xhat = X / nx
        a = w @ xhat
        return (w - a * xhat) + a * (math.cos(s * nx) * xhat - math.sin(s * nx) * p)

    def riemann(self, p: np.ndarray, X: np.ndarray, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
        return (Y @ Z) * X - (X @ Z) * Y

    def ricci(self, p: np.ndarray, X: np.ndarray, Y: np.ndarray) -> float:
        return (self.dim - 1) * float(X @ Y)

    def gaussian_curvature(self, p: np.ndarray) -> float:
        if self.dim != 2:
            raise UnsupportedOperation("Gaussian curvature needs a 2-dimensional manifold")
        return 1.0

    def sectional_curvature(self) -> float:
        return 1.0

    def volume(self) -> float:
        n = self.ambient_dim
        return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Normalized Gaussian samples (documented generator: numpy PCG64)."""
        pts = rng.normal(size=(count, self.ambient_dim))
        norms = np.linalg.norm(pts, axis=1)
        while np.any(norms < 1e-6):
            bad = norms < 1e-6
            pts[bad] = rng.normal(size=(int(bad.sum()), self.ambient_dim))
            norms = np.linalg.norm(pts, axis=1)
        return pts / norms[:, None]

    def describe(self) -> str:
        return f"S{self.dim}"


@dataclass(frozen=True)
class FlatTorus:
    """Flat 2-torus, coordinates in [0, L1) x [0, L2), identically zero curvature."""

    periods: tuple[float, float] = (2 * math.pi, 2 * math.pi)

    def __post_init__(self):
        if min(self.periods) <= 0:
            raise ValueError("torus periods must be positive")

    kind = "flat_torus"
    dim = 2

    @property
    def ambient_dim(self) -> int:
        return 2

    def contains(self, p: np.ndarray, tol: float = TOL_ON_MANIFOLD) -> bool:
        return np.asarray(p).shape == (2,)

    def check_point(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (2,):
            raise OffManifoldError(f"expected a 2-coordinate torus point, got shape {p.shape}")
        return p

    def wrap(self, p: np.ndarray) -> np.ndarray:
        return np.mod(p, np.asarray(self.periods))

    def tangent_project(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float)

    def inner(self, p, X, Y) -> float:
        return float(np.dot(X, Y))

    def norm(self, p, X) -> float:
        return float(np.linalg.norm(X))

    def frame(self, p: np.ndarray) -> np.ndarray:
        return np.eye(2)

    def christoffel(self, p: np.ndarray) -> np.ndarray:
        return np.zeros((2, 2, 2))

    def christoffel_grad(self, p: np.ndarray) -> np.ndarray:
        return np.zeros((2, 2, 2, 2))

    def conformal_factor(self, p: np.ndarray) -> float:
        return 1.0

    def riemann(self, p, X, Y, Z) -> np.ndarray:
        return np.zeros(2)

    def ricci(self, p, X, Y) -> float:
        return 0.0

    def gaussian_curvature(self, p: np.ndarray) -> float:
        return 0.0

    def volume(self) -> float:
        return self.periods[0] * self.periods[1]

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(size=(count, 2)) * np.asarray(self.periods)

    def describe(self) -> str:
        return f"T2({self.periods[0]:g}x{self.periods[1]:g})"


@dataclass(frozen=True)
class ConformalTorus:
    """2-torus with metric e^{2u} (dx^2 + dy^2), u smooth and doubly periodic.

    Gaussian curvature is K = -e^{-2u} (u_xx + u_yy), the flat second
    derivatives taken with the analyst (div grad) sign.
    """

    u: SmoothScalar2D
    periods: tuple[float, float] = (2 * math.pi, 2 * math.pi)

    kind = "conformal_torus"
    dim = 2

    @property
    def ambient_dim(self) -> int:
        return 2

    def contains(self, p, tol: float = TOL_ON_MANIFOLD) -> bool:
        return np.asarray(p).shape == (2,)

    def check_point(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (2,):
            raise OffManifoldError(f"expected a 2-coordinate torus point, got shape {p.shape}")
        return p

    def wrap(self, p: np.ndarray) -> np.ndarray:
        return np.mod(p, np.asarray(self.periods))

    def tangent_project(self, p, v) -> np.ndarray:
        return np.asarray(v, dtype=float)

    def conformal_factor(self, p: np.ndarray) -> float:
        return math.exp(2.0 * self.u.value(p))

    def inner(self, p, X, Y) -> float:
        return self.conformal_factor(p) * float(np.dot(X, Y))

    def norm(self, p, X) -> float:
        return math.sqrt(max(self.inner(p, X, X), 0.0))

    def frame(self, p: np.ndarray) -> np.ndarray:
        return math.exp(-self.u.value(p)) * np.eye(2)

    def christoffel(self, p: np.ndarray) -> np.ndarray:
        """Gamma[k, i, j] with nabla_{d_i} d_j = Gamma[k, i, j] d_k."""
        du = self.u.grad(p)
        g = np.zeros((2, 2, 2))
        for k in range(2):
            for i in range(2):
                for j in range(2):
                    g[k, i, j] = ((k == i) * du[j] + (k == j) * du[i]
                                  - (i == j) * du[k])
        return g

    def christoffel_grad(self, p: np.ndarray) -> np.ndarray:
        """dGamma[k, i, j, l] = partial_l Gamma[k, i, j]."""
        hu = self.u.hess(p)
        dg = np.zeros((2, 2, 2, 2))
        for k in range(2):
            for i in range(2):
                for j in range(2):
                    for l in range(2):
                        dg[k, i, j, l] = ((k == i) * hu[j, l] + (k == j) * hu[i, l]
                                          - (i == j) * hu[k, l])
        return dg

    def gaussian_curvature(self, p: np.ndarray) -> float:
        hu = self.u.hess(p)
        return -math.exp(-2.0 * self.u.value(p)) * (hu[0, 0] + hu[1, 1])

    def riemann(self, p, X, Y, Z) -> np.ndarray:
        K = self.gaussian_curvature(p)
        return K * (self.inner(p, Y, Z) * np.asarray(X) - self.inner(p, X, Z) * np.asarray(Y))

    def ricci(self, p, X, Y) -> float:
        return self.gaussian_curvature(p) * self.inner(p, X, Y)

    def volume(self, resolution: int = 512) -> float:
        xs = np.arange(resolution) * self.periods[0] / resolution
        ys = np.arange(resolution) * self.periods[1] / resolution
        total = 0.0
        for x in xs:
            for y in ys:
                total += self.conformal_factor(np.array([x, y]))
        return total * (self.periods[0] / resolution) * (self.periods[1] / resolution)

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(size=(count, 2)) * np.asarray(self.periods)

    def describe(self) -> str:
        return f"T2conf({self.u.label})"


Manifold = RoundSphere | FlatTorus | ConformalTorus


def is_torus(m: Manifold) -> bool:
    return m.kind in ("flat_torus", "conformal_torus")


# ---------------------------------------------------------------------------
# derived quantities

@dataclass(frozen=True)
class PointTangent:
    """A base point with a vector constrained tangent there."""

    point: np.ndarray
    vector: np.ndarray


def point_tangent(m: Manifold, p, v) -> PointTangent:
    """Validated (point, tangent vector) pair; spheres enforce <p, v> = 0."""
    p = m.check_point(p)
    v = np.asarray(v, dtype=float)
    if m.kind == "sphere" and abs(float(p @ v)) > 1e-12 * max(1.0, float(np.linalg.norm(v))):
        raise OffManifoldError(f"vector is not tangent: <p, v> = {float(p @ v):.3e}")
    return PointTangent(p, v)


@dataclass(frozen=True)
class FieldCalculus:
    """Bundle of covariant quantities of a vector field at a point.

    covariant_jacobian is taken in the deterministic orthonormal frame of
    the manifold: J[i, j] = <nabla_{e_j} sigma, e_i>, so columns are the
    frame derivatives and grad_half_norm is the transpose action J^T s.
    """

    norm_sq: float
    covariant_jacobian: np.ndarray
    rough_laplacian: np.ndarray
    grad_half_norm: np.ndarray
    jacobian_norm_sq: float
    divergence: float
    lie_norm_sq: float
    frame: np.ndarray = field(repr=False, default=None)


def tangent_project(m: Manifold, p: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project an ambient vector onto the tangent space at p (idempotent)."""
    p = m.check_point(p)
    return m.tangent_project(p, np.asarray(v, dtype=float))


def covariant_derivative(m: Manifold, fld, p: np.ndarray, X: np.ndarray) -> np.ndarray:
    """nabla_X sigma at p, analytic path through the field's Jacobian."""
    p = m.check_point(p)
    X = np.asarray(X, dtype=float)
    J = fld.jacobian(m, p)
    if J is None:
        return covariant_derivative_fd(m, fld, p, X)
    if m.kind == "sphere":
        return m.tangent_project(p, J @ X)
    gamma = m.christoffel(p)
    val = fld.value(m, p)
    return J @ X + np.einsum("kil,i,l->k", gamma, X, val)


def covariant_derivative_fd(m: Manifold, fld, p: np.ndarray, X: np.ndarray,
                            h: float = 1e-5) -> np.ndarray:
    """Finite-difference oracle for nabla_X sigma.

    Central differences at steps h and h/2 with one Richardson step.  On
    spheres the derivative runs along the great circle through p in
    direction X and is projected; on tori it runs along the coordinate
    line and adds the analytic Christoffel correction.
    """
    p = m.check_point(p)
    X = np.asarray(X, dtype=float)
    nx = np.linalg.norm(X)
    if nx < 1e-14:
        return np.zeros(m.ambient_dim)

    if m.kind == "sphere":
        def deriv(step):
            plus = fld.value(m, m.exp(p, X, step / nx))
            minus = fld.value(m, m.exp(p, X, -step / nx))
            return (plus - minus) / (2.0 * step / nx)
        d = (4.0 * deriv(h / 2) - deriv(h)) / 3.0
        return m.tangent_project(p, d)

    def deriv(step):
        plus = fld.value(m, p + step * X / nx)
        minus = fld.value(m, p - step * X / nx)
        return (plus - minus) / (2.0 * step / nx)

    d = (4.0 * deriv(h / 2) - deriv(h)) / 3.0
    if m.kind == "conformal_torus":
        d = d + np.einsum("kil,i,l->k", m.christoffel(p), X, fld.value(m, p))
    return d


def covariant_jacobian(m: Manifold, fld, p: np.ndarray,
                       frame: np.ndarray | None = None) -> np.ndarray:
    if frame is None:
        frame = m.frame(p)
    n = frame.shape[0]
    J_amb = fld.jacobian(m, p)
    J = np.zeros((n, n))
    if J_amb is None:
        for j in range(n):
            dj = covariant_derivative_fd(m, fld, p, frame[j])
            for i in range(n):
                J[i, j] = m.inner(p, dj, frame[i])
        return J
    if m.kind == "sphere":
        for j in range(n):
            dj = m.tangent_project(p, J_amb @ frame[j])
            for i in range(n):
                J[i, j] = float(dj @ frame[i])
        return J
    gamma = m.christoffel(p)
    val = fld.value(m, p)
    fac = m.conformal_factor(p) if m.kind == "conformal_torus" else 1.0
    for j in range(n):
        dj = J_amb @ frame[j] + np.einsum("kil,i,l->k", gamma, frame[j], val)
        for i in range(n):
            J[i, j] = fac * float(dj @ frame[i])
    return J


def _second_covariant_sphere(m: RoundSphere, fld, p: np.ndarray, X: np.ndarray,
                             data: tuple | None = None) -> np.ndarray:
    """(nabla^2 sigma)(X, X) on the sphere for a unit tangent X, analytic."""
    if data is None:
        data = (fld.hessian(m, p), fld.jacobian(m, p), fld.value(m, p))
    H, J, s = data
    if H is None or J is None:
        return _second_covariant_sphere_stencil(m, fld, p, X)
    d2 = np.einsum("cij,i,j->c", H, X, X)
    return d2 - J @ p + 2.0 * float(X @ (J @ X)) * p + float(s @ X) * X


def _second_covariant_sphere_stencil(m: RoundSphere, fld, p: np.ndarray, X: np.ndarray,
                                     h: float = 1e-4) -> np.ndarray:
    """Symmetric geodesic stencil: transported values along exp_p(s X)."""
    def transported(s):
        q = m.exp(p, X, s)
        w = fld.value(m, q)
        # transport back: inverse rotation in the (p, X)-plane
        T = -math.sin(s) * p + math.cos(s) * X
        return w - float(w @ T) * (T - X)

    f0 = fld.value(m, p)
    return (transported(h) - 2.0 * f0 + transported(-h)) / (h * h)


def _second_covariant_torus_diag(m: Manifold, fld, p: np.ndarray) -> list[np.ndarray]:
    """[(nabla^2 sigma)(d_i, d_i)] in torus coordinates, i = x, y."""
    gamma = m.christoffel(p)
    dgamma = m.christoffel_grad(p)
    val = fld.value(m, p)
    J = fld.jacobian(m, p)
    H = fld.hessian(m, p)
    if J is None:
        J = _fd_component_jacobian(m, fld, p)
    if H is None:
        H = _fd_component_hessian(m, fld, p)
    out = []
    for i in range(2):
        nabla_i = J[:, i] + gamma[:, i, :] @ val
        # partial_i of (nabla_i sigma)^k, then Christoffel corrections
        d_i_of_nabla = (H[:, i, i] + dgamma[:, i, :, i] @ val + gamma[:, i, :] @ J[:, i])
        term = d_i_of_nabla + gamma[:, i, :] @ nabla_i
        for mm in range(2):
            nabla_m = J[:, mm] + gamma[:, mm, :] @ val
            term = term - gamma[mm, i, i] * nabla_m
        out.append(term)
    return out


def _fd_component_jacobian(m: Manifold, fld, p: np.ndarray, h: float = 1e-5) -> np.ndarray:
    J = np.zeros((2, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1.0
        def d(step):
            return (fld.value(m, p + step * e) - fld.value(m, p - step * e)) / (2 * step)
        J[:, i] = (4.0 * d(h / 2) - d(h)) / 3.0
    return J


def _fd_component_hessian(m: Manifold, fld, p: np.ndarray, h: float = 1e-4) -> np.ndarray:
    H = np.zeros((2, 2, 2))
    f0 = fld.value(m, p)
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1.0
        H[:, i, i] = (fld.value(m, p + h * e) - 2 * f0 + fld.value(m, p - h * e)) / (h * h)
    exy = np.array([h, h])
    emx = np.array([h, -h])
    mixed = (fld.value(m, p + exy) + fld.value(m, p - exy)
             - fld.value(m, p + emx) - fld.value(m, p - emx)) / (4 * h * h)
    H[:, 0, 1] = mixed
    H[:, 1, 0] = mixed
    return H


def second_covariant_diag(m: Manifold, fld, p: np.ndarray,
                          frame: np.ndarray) -> list[np.ndarray]:
    """[(nabla^2 sigma)(e_i, e_i)] over an orthonormal frame."""
    if m.kind == "sphere":
        data = (fld.hessian(m, p), fld.jacobian(m, p), fld.value(m, p))
        return [_second_covariant_sphere(m, fld, p, e, data) for e in frame]
    coord = _second_covariant_torus_diag(m, fld, p)
    # frame vectors are multiples of the coordinate basis, so the second
    # covariant derivative just rescales (no mixed terms)
    return [e[0] * e[0] * coord[0] + e[1] * e[1] * coord[1] for e in frame]


def rough_laplacian(m: Manifold, fld, p: np.ndarray,
                    frame: np.ndarray | None = None) -> np.ndarray:
    """nabla* nabla sigma = -trace nabla^2 sigma (nonnegative spectrum)."""
    p = m.check_point(p)
    if frame is None:
        frame = m.frame(p)
    diag = second_covariant_diag(m, fld, p, frame)
    return -sum(diag)


def rough_laplacian_stencil(m: Manifold, fld, p: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Value-only stencil route for nabla* nabla, ignoring analytic Jacobians."""
    p = m.check_point(p)
    if m.kind == "sphere":
        frame = m.frame(p)
        return -sum(_second_covariant_sphere_stencil(m, fld, p, e, h=h) for e in frame)

    class _ValueOnly:
        def value(self, mm, q):
            return fld.value(mm, q)

        def jacobian(self, mm, q):
            return None

        def hessian(self, mm, q):
            return None

    diag = _second_covariant_torus_diag(m, _ValueOnly(), p)
    fac = m.conformal_factor(p) if m.kind == "conformal_torus" else 1.0
    return -(diag[0] + diag[1]) / fac


def field_calculus(m: Manifold, fld, p: np.ndarray) -> FieldCalculus:
    """All covariant quantities the tension assembly needs at one point."""
    p = m.check_point(p)
    frame = m.frame(p)
    s = fld.value(m, p)
    J = covariant_jacobian(m, fld, p, frame)
    s_frame = np.array([m.inner(p, s, e) for e in frame])
    grad_half = J.T @ s_frame
    grad_half_vec = sum(grad_half[i] * frame[i] for i in range(len(frame)))
    lap = rough_laplacian(m, fld, p, frame)
    return FieldCalculus(
        norm_sq=float(m.inner(p, s, s)),
        covariant_jacobian=J,
        rough_laplacian=lap,
        grad_half_norm=grad_half_vec,
        jacobian_norm_sq=float(np.sum(J * J)),
        divergence=float(np.trace(J)),
        lie_norm_sq=float(np.sum((J + J.T) ** 2)),
        frame=frame,
    )


def riemann(m: Manifold, p: np.ndarray, X, Y, Z) -> np.ndarray:
    """Curvature tensor R(X, Y)Z with the fixed sign convention."""
    p = m.check_point(p)
    return m.riemann(p, np.asarray(X, float), np.asarray(Y, float), np.asarray(Z, float))


def gaussian_curvature(m: Manifold, p: np.ndarray) -> float:
    p = m.check_point(p)
    if m.dim != 2:
        raise UnsupportedOperation("Gaussian curvature needs a surface")
    return m.gaussian_curvature(p)


def ricci(m: Manifold, p: np.ndarray, X, Y) -> float:
    p = m.check_point(p)
    return m.ricci(p, np.asarray(X, float), np.asarray(Y, float))


def scalar_laplacian(m: Manifold, f: Callable[[np.ndarray], float], p: np.ndarray,
                     h: float = 1e-4) -> float:
    """Delta f with nonnegative spectrum (Delta <a,x> = n <a,x> on S^n).

    Symmetric second differences: geodesic stencils on spheres, coordinate
    stencils with the conformal factor on tori.
    """
    p = m.check_point(p)
    if m.kind == "sphere":
        total = 0.0
        f0 = f(p)
        for e in m.frame(p):
            total += (f(m.exp(p, e, h)) - 2.0 * f0 + f(m.exp(p, e, -h))) / (h * h)
        return -total

    f0 = f(p)
    total = 0.0
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1.0
        total += (f(p + h * e) - 2.0 * f0 + f(p - h * e)) / (h * h)
    fac = m.conformal_factor(p) if m.kind == "conformal_torus" else 1.0
    return -total / fac


def sample_points(m: Manifold, rng: np.random.Generator, count: int) -> np.ndarray:
    """Reproducible random points; spheres use normalized PCG64 Gaussians."""
    return m.random_points(rng, count)
