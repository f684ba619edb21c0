"""Quadrature rules for the supported manifolds.

Product Gauss-Legendre x uniform rules on S^2 and S^3 (exact to machine
precision for the polynomial integrands the catalog fields produce),
trapezoid grids on tori (spectrally accurate for smooth periodic
integrands), and a fixed-seed Monte Carlo fallback for spheres of
dimension >= 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import roots_legendre

from .geometry import ConformalTorus, FlatTorus, Manifold, RoundSphere


@dataclass(frozen=True)
class Quadrature:
    """Nodes with positive weights summing to the manifold volume."""

    points: np.ndarray
    weights: np.ndarray
    label: str
    monte_carlo: bool = False

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def integrate(self, fn: Callable[[np.ndarray], float]) -> float:
        return float(sum(w * fn(p) for p, w in zip(self.points, self.weights)))

    def integrate_with_error(self, fn: Callable[[np.ndarray], float]) -> tuple[float, float]:
        """Integral and, for Monte Carlo rules, the standard-error estimate."""
        vals = np.array([fn(p) for p in self.points])
        total = float(np.dot(self.weights, vals))
        if not self.monte_carlo:
            return total, 0.0
        vol = self.volume
        se = float(vol * vals.std(ddof=1) / math.sqrt(len(vals)))
        return total, se


def sphere2_quadrature(n_polar: int = 24, n_azimuth: int = 48) -> Quadrature:
    """Gauss-Legendre in cos(theta) times uniform azimuth on S^2."""
    z, wz = roots_legendre(n_polar)
    phis = 2 * math.pi * np.arange(n_azimuth) / n_azimuth
    wphi = 2 * math.pi / n_azimuth
    pts = []
    wts = []
    for zi, wzi in zip(z, wz):
        r = math.sqrt(max(1.0 - zi * zi, 0.0))
        for phi in phis:
            pts.append([r * math.cos(phi), r * math.sin(phi), zi])
            wts.append(wzi * wphi)
    return Quadrature(np.array(pts), np.array(wts), f"s2_gl{n_polar}x{n_azimuth}")


def sphere3_quadrature(n_s: int = 16, n_alpha: int = 20, n_beta: int = 20) -> Quadrature:
    """Product rule on S^3 in Hopf coordinates.

    x = (cos(eta) e^{i alpha}, sin(eta) e^{i beta}); the volume element
    cos(eta) sin(eta) d(eta) d(alpha) d(beta) becomes ds/4 under
    s = cos(2 eta), handled by Gauss-Legendre in s.
    """
    s, ws = roots_legendre(n_s)
    alphas = 2 * math.pi * np.arange(n_alpha) / n_alpha
    betas = 2 * math.pi * np.arange(n_beta) / n_beta
    wang = (2 * math.pi / n_alpha) * (2 * math.pi / n_beta)
    pts = []
    wts = []
    for si, wsi in zip(s, ws):
        c = math.sqrt((1.0 + si) / 2.0)
        r = math.sqrt((1.0 - si) / 2.0)
        for a in alphas:
            ca, sa = math.cos(a), math.sin(a)
            for b in betas:
                cb, sb = math.cos(b), math.sin(b)
                pts.append([c * ca, c * sa, r * cb, r * sb])
                wts.append(0.25 * wsi * wang)
    return Quadrature(np.array(pts), np.array(wts), f"s3_gl{n_s}x{n_alpha}x{n_beta}")


def sphere_mc_quadrature(m: RoundSphere, count: int, seed: int) -> Quadrature:
    """Fixed-seed Monte Carlo on S^n, the fallback for n >= 4."""
    rng = np.random.default_rng(seed)
    pts = m.random_points(rng, count)
    w = m.volume() / count
    return Quadrature(pts, np.full(count, w), f"s{m.dim}_mc{count}@{seed}", monte_carlo=True)


def torus_quadrature(m: FlatTorus | ConformalTorus, n: int = 64) -> Quadrature:
    """Uniform n x n trapezoid grid; weights carry the metric volume factor."""
    Lx, Ly = m.periods
    hx, hy = Lx / n, Ly / n
    xs = np.arange(n) * hx
    ys = np.arange(n) * hy
    pts = []
    wts = []
    for x in xs:
        for y in ys:
            p = np.array([x, y])
            pts.append(p)
            wts.append(hx * hy * m.conformal_factor(p))
    return Quadrature(np.array(pts), np.array(wts), f"torus{n}x{n}")


def sphere_quadrature(m: RoundSphere, resolution: int = 0, seed: int = 20240817) -> Quadrature:
    """Dispatch by dimension: product rules for S^2/S^3, Monte Carlo above."""
    if m.dim == 2:
        return sphere2_quadrature() if resolution == 0 else \
            sphere2_quadrature(resolution, 2 * resolution)
    if m.dim == 3:
        return sphere3_quadrature() if resolution == 0 else \
            sphere3_quadrature(resolution, resolution, resolution)
    count = 20000 if resolution == 0 else resolution
    return sphere_mc_quadrature(m, count, seed)


def default_quadrature(m: Manifold, resolution: int = 0) -> Quadrature:
    if m.kind == "sphere":
        return sphere_quadrature(m, resolution)
    return torus_quadrature(m, resolution or 64)
