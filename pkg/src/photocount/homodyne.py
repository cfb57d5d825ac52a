"""Homodyne baselines: quadrature marginals, Radon inversion, double homodyne.

Quadratures are ``x_theta = (exp(i theta) a^dag + exp(-i theta) a) / sqrt(2)``,
i.e. ``x_theta = q cos(theta) + p sin(theta)`` with ``a = (q + i p)/sqrt(2)``.
In ``(q, p)`` coordinates the Wigner function is ``W_qp(q, p) = W(alpha) / 2``
so that it integrates to one over ``dq dp``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft, ndimage

from .phasespace import QuasiGrid, quasi_points
from .states import FockDensityMatrix, default_dim, to_density_matrix

__all__ = [
    "hermite_functions",
    "QuadratureDistribution",
    "RadonFamily",
    "quadrature_distribution",
    "radon_family",
    "radon_project",
    "inverse_radon",
    "random_phase_distribution",
    "double_homodyne_distribution",
    "double_homodyne_with_ruler",
]


def hermite_functions(n_max: int, x) -> np.ndarray:
    """``psi_n(x)`` for ``n = 0 .. n_max`` by the normalised three-term recurrence."""
    x = np.asarray(x, dtype=float)
    psi = np.zeros((n_max + 1,) + x.shape)
    psi[0] = np.pi**-0.25 * np.exp(-0.5 * x**2)
    if n_max >= 1:
        psi[1] = np.sqrt(2.0) * x * psi[0]
    for n in range(1, n_max):
        psi[n + 1] = np.sqrt(2.0 / (n + 1)) * x * psi[n] - np.sqrt(n / (n + 1)) * psi[n - 1]
    return psi


def _uniform(x: np.ndarray) -> float:
    if x.ndim != 1 or x.size < 2:
        raise ValueError("x grid needs at least two points")
    dx = np.diff(x)
    if np.any(dx <= 0) or np.ptp(dx) > 1e-9 * abs(dx[0]):
        raise ValueError("x grid must be uniform and increasing")
    return float(dx[0])


@dataclass(frozen=True)
class QuadratureDistribution:
    theta: float
    x: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        d = np.asarray(self.density, dtype=float)
        if d.shape != x.shape:
            raise ValueError("density and x grid differ in shape")
        _uniform(x)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "density", d)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def normalization(self) -> float:
        return float(self.density.sum() * self.dx)


@dataclass(frozen=True)
class RadonFamily:
    """Marginals at phases uniformly spaced on ``[0, pi)`` over a shared grid."""

    thetas: np.ndarray
    x: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float)
        x = np.asarray(self.x, dtype=float)
        d = np.asarray(self.densities, dtype=float)
        if th.size < 2:
            raise ValueError("a Radon family needs at least two phases")
        if d.shape != (th.size, x.size):
            raise ValueError(f"densities shape {d.shape} does not match ({th.size}, {x.size})")
        if not np.allclose(th, np.arange(th.size) * np.pi / th.size, atol=1e-12):
            raise ValueError("phases must be uniform on [0, pi) starting at 0")
        _uniform(x)
        for name, v in (("thetas", th), ("x", x), ("densities", d)):
            object.__setattr__(self, name, v)

    @classmethod
    def from_marginals(cls, marginals) -> "RadonFamily":
        x = marginals[0].x
        for m in marginals:
            if m.x.shape != x.shape or not np.allclose(m.x, x):
                raise ValueError("marginals must share one x grid")
        return cls(np.array([m.theta for m in marginals]), x, np.array([m.density for m in marginals]))

    def to_csv(self, fh):
        fh.write("theta,x,density\n")
        for th, row in zip(self.thetas, self.densities):
            for xv, d in zip(self.x, row):
                fh.write(f"{float(th)!r},{float(xv)!r},{float(d)!r}\n")


def _as_rho(state) -> FockDensityMatrix:
    if isinstance(state, FockDensityMatrix):
        return state
    return to_density_matrix(state, default_dim(state))


def quadrature_distribution(rho, theta: float, x) -> QuadratureDistribution:
    rho = _as_rho(rho)
    x = np.asarray(x, dtype=float)
    psi = hermite_functions(rho.dim - 1, x)
    m = np.arange(rho.dim)
    rot = rho.elements * np.exp(1j * (m[None, :] - m[:, None]) * theta)
    dens = np.einsum("mx,mn,nx->x", psi, rot, psi).real
    return QuadratureDistribution(float(theta), x, dens)


def radon_family(rho, n_phases: int, x) -> RadonFamily:
    rho = _as_rho(rho)
    thetas = np.arange(n_phases) * np.pi / n_phases
    return RadonFamily.from_marginals([quadrature_distribution(rho, t, x) for t in thetas])


def radon_project(grid: QuasiGrid, theta: float, x, *, dy: float | None = None) -> QuadratureDistribution:
    """Line integrals of a Wigner grid, in quadrature units.

    The grid lives in ``alpha`` coordinates; lines run along
    ``(q, p) = x (cos t, sin t) + y (-sin t, cos t)``.
    """
    if grid.s != 0:
        raise ValueError("Radon projection is defined for the Wigner function (s=0)")
    x = np.asarray(x, dtype=float)
    vals = grid.values
    edge = max(abs(vals[0]).max(), abs(vals[-1]).max(), abs(vals[:, 0]).max(), abs(vals[:, -1]).max())
    if edge > 1e-4 * abs(vals).max():
        raise ValueError("grid does not cover the support: boundary values are not negligible")
    hr, hi = grid.step
    if dy is None:
        dy = min(hr, hi) * np.sqrt(2.0) / 2.0
    reach = np.sqrt(2.0) * np.hypot(max(abs(grid.re[0]), abs(grid.re[-1])),
                                    max(abs(grid.im[0]), abs(grid.im[-1])))
    y = np.arange(-reach, reach + dy / 2, dy)
    c, s = np.cos(theta), np.sin(theta)
    q = x[:, None] * c - y[None, :] * s
    p = x[:, None] * s + y[None, :] * c
    # fractional indices into the alpha grid
    ir = (q / np.sqrt(2.0) - grid.re[0]) / hr
    ii = (p / np.sqrt(2.0) - grid.im[0]) / hi
    w = ndimage.map_coordinates(vals, [ir.ravel(), ii.ravel()], order=3, mode="constant", cval=0.0)
    dens = 0.5 * np.trapezoid(w.reshape(q.shape), y, axis=1)
    return QuadratureDistribution(float(theta), x, dens)


def inverse_radon(family: RadonFamily, filter_cutoff: float, re=None, im=None) -> QuasiGrid:
    """Filtered back-projection onto an ``alpha`` grid at s=0.

    Each marginal is multiplied in Fourier space by the ramp ``|k|``, cut
    off above angular wavenumber ``filter_cutoff``, then smeared back along
    its lines.
    """
    if filter_cutoff <= 0:
        raise ValueError("filter_cutoff must be > 0")
    x = family.x
    dx = _uniform(x)
    if re is None:
        re = np.linspace(x[0], x[-1], 121) / np.sqrt(2.0)
    if im is None:
        im = np.asarray(re)
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    size = fft.next_fast_len(2 * x.size)
    k = 2.0 * np.pi * fft.fftfreq(size, d=dx)
    ramp = np.abs(k) * (np.abs(k) <= filter_cutoff)
    filtered = fft.ifft(fft.fft(family.densities, n=size, axis=1) * ramp, axis=1).real[:, :x.size]
    q = np.sqrt(2.0) * re[:, None]
    p = np.sqrt(2.0) * im[None, :]
    acc = np.zeros((re.size, im.size))
    for th, g in zip(family.thetas, filtered):
        acc += np.interp(q * np.cos(th) + p * np.sin(th), x, g, left=0.0, right=0.0)
    w_qp = acc * (np.pi / family.thetas.size) / (2.0 * np.pi)
    return QuasiGrid(re, im, 0.0, 2.0 * w_qp)


def random_phase_distribution(photon_dist, x) -> np.ndarray:
    """Phase-averaged marginal ``sum_m p_m psi_m(x)^2``."""
    p = np.asarray(photon_dist, dtype=float)
    if np.any(p < 0) or p.sum() > 1.0 + 1e-9:
        raise ValueError("photon_dist must be a sub-probability vector")
    psi = hermite_functions(p.size - 1, x)
    return p @ psi**2


def double_homodyne_distribution(rho, q1, p2) -> QuasiGrid:
    """Joint density of ``(q1, p2)``; equal to the Q function at ``q1 + i p2``."""
    q1 = np.asarray(q1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    pts = q1[:, None] + 1j * p2[None, :]
    vals = quasi_points(_as_rho(rho), pts, -1.0)
    return QuasiGrid(q1, p2, -1.0, vals)


def double_homodyne_with_ruler(signal, ruler, q1, p2, *, extent: float = 7.0, step: float = 0.05) -> np.ndarray:
    """``2 int W_a(q, p) W_v(sqrt2 q1 - q, sqrt2 p2 - p) dq dp`` for a ruler mode ``v``.

    With the vacuum as ruler this is the Q function of the signal.
    """
    ax = np.arange(-extent, extent + step / 2, step)
    qq, pp = np.meshgrid(ax, ax, indexing="ij")
    wa = 0.5 * quasi_points(_as_rho(signal), (qq + 1j * pp) / np.sqrt(2.0), 0.0)
    ruler = _as_rho(ruler)
    q1 = np.atleast_1d(np.asarray(q1, dtype=float))
    p2 = np.atleast_1d(np.asarray(p2, dtype=float))
    out = np.empty((q1.size, p2.size))
    for i, a in enumerate(q1):
        for j, b in enumerate(p2):
            arg = (np.sqrt(2.0) * a - qq + 1j * (np.sqrt(2.0) * b - pp)) / np.sqrt(2.0)
            wv = 0.5 * quasi_points(ruler, arg, 0.0)
            out[i, j] = 2.0 * np.trapezoid(np.trapezoid(wa * wv, ax, axis=1), ax)
    return out
