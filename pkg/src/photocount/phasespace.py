"""s-ordered quasidistributions of single-mode and product states.

The ordering parameter ``s`` runs from ``-1`` (Q function) through ``0``
(Wigner function) to ``1`` (P function). Phase-space points are complex
amplitudes ``alpha``; coherent states sit at ``alpha = alpha0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal, special

from .errors import DivergenceError, TruncationError
from .states import (
    Cat,
    Coherent,
    Explicit,
    Fock,
    FockDensityMatrix,
    Mixture,
    StateSpec,
    Thermal,
    Vacuum,
    assemble_diagonals,
    default_dim,
    displacement_matrix,
    laguerre_diagonals,
    to_density_matrix,
)

__all__ = [
    "QuasiGrid",
    "ordering_ratio",
    "quasi_value",
    "quasi_points",
    "quasi_grid",
    "analytic_quasi",
    "coherent_quasi",
    "cat_quasi_closed_form",
    "ordering_transform",
    "diffusion_residual",
    "multimode_quasi",
    "CAUCHY_WINDOW",
]

CAUCHY_WINDOW = 20


def ordering_ratio(s: float) -> float:
    """Eigenvalue ratio ``(s+1)/(s-1)`` of the displaced-parity family."""
    if s >= 1:
        raise ValueError(f"ordering parameter must be < 1, got {s}")
    return (s + 1.0) / (s - 1.0)


def _check_ordering(s: float, allow_positive: bool):
    if s >= 1:
        raise ValueError(f"ordering parameter must be < 1, got {s}")
    if s > 0 and not allow_positive:
        raise ValueError(
            f"s={s} > 0: the ordering operator is unbounded; pass allow_positive=True to evaluate anyway"
        )


def _as_rho(state) -> FockDensityMatrix:
    if isinstance(state, FockDensityMatrix):
        return state
    return to_density_matrix(state, default_dim(state))


def check_cauchy(terms: np.ndarray, window: int = CAUCHY_WINDOW) -> bool:
    """True when the trailing absolute increments do not decrease.

    A series whose last ``window`` nonzero terms are non-decreasing in
    magnitude is treated as divergent.
    """
    mags = np.abs(np.asarray(terms))
    tail = mags[-window:]
    if tail.size < window or tail[-1] < 1e-300:
        return False
    return bool(np.all(np.diff(tail) >= 0))


def quasi_value(rho, alpha: complex, s: float, *, allow_positive: bool = False,
                tol: float = 1e-10, full_output: bool = False):
    """``W(alpha; s)`` by the displaced-Fock spectral sum.

    The state is displaced by ``-alpha`` using exact matrix elements, and
    the photon distribution of the displaced state is summed against
    ``((s+1)/(s-1))**n``. With ``full_output`` the pair ``(value, bound)``
    is returned, ``bound`` covering the omitted terms and rounding in the
    sum. For ``s > 0`` the terms alternate with growing weight, and far from
    the state the cancellation can exceed ``tol``; that raises
    :class:`TruncationError` instead of returning a noisy value.
    """
    _check_ordering(s, allow_positive)
    rho = _as_rho(rho)
    alpha = complex(alpha)
    q = ordering_ratio(s)
    radius = np.sqrt(rho.dim) + abs(alpha)
    rows = rho.dim + int(np.ceil(radius**2 + 8 * radius + 16))
    dm = displacement_matrix(-alpha, rows, rho.dim)
    pn = np.einsum("nj,jk,nk->n", dm, rho.elements, dm.conj()).real
    missing = max(0.0, rho.trace - pn.sum())
    terms = q ** np.arange(rows) * pn
    prefactor = 2.0 / (np.pi * (1.0 - s))
    if s > 0:
        # a state whose own tail outgrows |q|^-n diverges at every point; the
        # displaced series is checked over its full length as well
        own = abs(q) ** np.arange(rho.dim) * rho.diagonal
        if check_cauchy(own) or check_cauchy(terms):
            raise DivergenceError(f"spectral sum for s={s} does not converge at alpha={alpha}")
    if s <= 0:
        bound = prefactor * abs(q) ** rows * missing
    else:
        # |q| > 1 leaves no rigorous bound; extrapolate the trailing terms
        # geometrically
        last, before = abs(terms[-1]), abs(terms[-2])
        ratio = last / before if before > 0 else 0.0
        bound = prefactor * (last / (1.0 - ratio) if ratio < 1 else np.inf)
    # rounding: both the displaced distribution and the alternating sum
    # cancel; bound each by the same contraction taken in absolute value
    if s > 0:
        mag = np.abs(dm)
        pabs = np.einsum("nj,jk,nk->n", mag, np.abs(rho.elements), mag)
        scale = float(abs(q) ** np.arange(rows) @ pabs)
    else:
        scale = float(np.abs(terms).sum())
    bound += prefactor * rows * np.finfo(float).eps * scale
    if bound > tol:
        raise TruncationError(f"spectral sum error estimate {bound:.3g} exceeds tol={tol:.3g}")
    value = prefactor * float(terms.sum())
    return (value, bound) if full_output else value


def _kernel_start(a: np.ndarray, s: float, dim: int):
    q = ordering_ratio(s)
    c = 1.0 - q
    x = np.abs(a) ** 2
    k = np.arange(dim)
    nz = (x > 0)[:, None]
    logabs = np.log(np.where(nz, c * np.abs(a)[:, None], 1.0))
    u0 = np.where(k == 0, np.exp(-c * x)[:, None],
                  np.where(nz, np.exp(-c * x[:, None] + k * logabs - 0.5 * special.gammaln(k + 1)), 0.0))
    unit = np.where(x > 0, a / np.where(x > 0, np.abs(a), 1.0), 1.0)[:, None]
    return q, c * c * x, u0, unit


def _quasi_kernel(alphas: np.ndarray, s: float, dim: int) -> np.ndarray:
    """``<j|D(a) q^n D(a)^dag|k>`` for every point ``a`` in ``alphas``.

    With ``c = 1 - q`` the diagonal ``j - k = m`` equals
    ``e^{-c|a|^2} (c a)^m q^k sqrt(k!/j!) L_k^(m)(-c^2 |a|^2 / q)``; the
    recurrence carries the factor ``q^k`` along so that it stays finite for
    ``q -> 0`` (the Q function). No Fock truncation enters.
    """
    a = np.asarray(alphas, dtype=complex).ravel()
    q, r, u0, unit = _kernel_start(a, s, dim)
    u = laguerre_diagonals(u0, q, r[:, None], dim)
    k = np.arange(dim)
    return assemble_diagonals(u, unit**k, unit.conj() ** k, dim, dim)


def _quasi_contract(a: np.ndarray, s: float, rho: np.ndarray) -> np.ndarray:
    """``Re tr(rho A(a))`` by running the diagonal recurrence against ``rho``.

    Diagonal ``m`` only needs ``n < dim - m``, so the active band shrinks as
    the recurrence advances.
    """
    dim = rho.shape[0]
    q, r, u, unit = _kernel_start(a, s, dim)
    r = r[:, None]
    # band[n, m] = rho[n, n + m]
    band = np.zeros((dim, dim), dtype=complex)
    for m in range(dim):
        band[: dim - m, m] = np.diagonal(rho, m)
    kk = np.arange(dim, dtype=float)
    acc = u * band[0]
    prev = np.zeros_like(u)
    for n in range(dim - 1):
        w = dim - n - 1  # diagonals still needed at step n + 1
        ks = kk[:w]
        inv = 1.0 / np.sqrt((n + 1) * (n + 1 + ks))
        nxt = (q * (2 * n + 1 + ks) * inv + r * inv) * u[:, :w]
        nxt -= (q * q * np.sqrt(n * (n + ks)) * inv) * prev[:, :w]
        prev, u = u[:, :w], nxt
        acc[:, :w] += u * band[n + 1, :w]
    phases = unit ** np.arange(dim)
    weights = np.where(np.arange(dim) == 0, 1.0, 2.0)
    return (np.real(acc * phases) * weights).sum(axis=1)


def quasi_points(rho, alphas, s: float, *, allow_positive: bool = False,
                 chunk: int = 2_000_000) -> np.ndarray:
    """Vectorised ``W(alpha; s)`` over an array of points."""
    _check_ordering(s, allow_positive)
    rho = _as_rho(rho)
    alphas = np.asarray(alphas, dtype=complex)
    flat = alphas.ravel()
    out = np.empty(flat.size)
    step = max(1, chunk // rho.dim)
    for start in range(0, flat.size, step):
        out[start:start + step] = _quasi_contract(flat[start:start + step], s, rho.elements)
    return (2.0 / (np.pi * (1.0 - s)) * out).reshape(alphas.shape)


def coherent_quasi(alpha0: complex, alpha, s: float):
    width = 1.0 - s
    return 2.0 / (np.pi * width) * np.exp(-2.0 * np.abs(np.asarray(alpha) - alpha0) ** 2 / width)


def cat_quasi_closed_form(alpha0: complex, alpha, s: float):
    """Three-term closed form for the even cat state ``|alpha0> + |-alpha0>``."""
    if s >= 1:
        raise ValueError("s must be < 1")
    a = np.asarray(alpha, dtype=complex)
    w = 1.0 - s
    a2 = abs(alpha0) ** 2
    pre = 1.0 / (np.pi * w * (1.0 + np.exp(-2.0 * a2)))
    gauss = np.exp(-2.0 / w * np.abs(a - alpha0) ** 2) + np.exp(-2.0 / w * np.abs(a + alpha0) ** 2)
    fringe = (2.0 * np.exp(2.0 * s / w * a2) * np.exp(-2.0 / w * np.abs(a) ** 2)
              * np.cos(4.0 * np.imag(alpha0 * a.conj()) / w))
    return pre * (gauss + fringe)


def _fock_quasi(n: int, alpha, s: float):
    # q^n L_n(4|a|^2/(1-s^2)) expanded so that s = -1 stays finite
    a2 = np.abs(np.asarray(alpha)) ** 2
    w = 1.0 - s
    q = ordering_ratio(s)
    x = 4.0 * a2 / w**2
    poly = sum(special.comb(n, k) / special.factorial(k) * q ** (n - k) * x**k for k in range(n + 1))
    return 2.0 / (np.pi * w) * np.exp(-2.0 * a2 / w) * poly


def analytic_quasi(spec: StateSpec, alpha, s: float):
    """Closed-form ``W(alpha; s)`` for the analytic state families."""
    if isinstance(spec, Vacuum):
        return coherent_quasi(0.0, alpha, s)
    if isinstance(spec, Coherent):
        return coherent_quasi(complex(spec.alpha), alpha, s)
    if isinstance(spec, Thermal):
        w = 1.0 - s + 2.0 * spec.nbar
        return 2.0 / (np.pi * w) * np.exp(-2.0 * np.abs(np.asarray(alpha)) ** 2 / w)
    if isinstance(spec, Fock):
        return _fock_quasi(spec.n, alpha, s)
    if isinstance(spec, Cat):
        return cat_quasi_closed_form(complex(spec.alpha), alpha, s)
    if isinstance(spec, Mixture):
        return sum(wt * analytic_quasi(c, alpha, s) for wt, c in spec.components)
    if isinstance(spec, Explicit):
        return quasi_points(spec.rho, alpha, s)
    raise TypeError(f"no closed form for {type(spec).__name__}")


@dataclass
class QuasiGrid:
    """Values of ``W(re + i im; s)`` on a rectangular grid.

    ``values[i, j]`` belongs to the point ``re[i] + 1j * im[j]``.
    """

    re: np.ndarray
    im: np.ndarray
    s: float
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.re = np.asarray(self.re, dtype=float)
        self.im = np.asarray(self.im, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.re.size, self.im.size):
            raise ValueError(f"values shape {self.values.shape} does not match grid "
                             f"({self.re.size}, {self.im.size})")
        for axis in (self.re, self.im):
            if axis.size > 1 and np.any(np.diff(axis) <= 0):
                raise ValueError("grid axes must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")

    @property
    def step(self) -> tuple[float, float]:
        return float(self.re[1] - self.re[0]), float(self.im[1] - self.im[0])

    @property
    def points(self) -> np.ndarray:
        return self.re[:, None] + 1j * self.im[None, :]

    def integral(self) -> float:
        """Trapezoid estimate of the integral over ``d^2 alpha``."""
        return float(np.trapezoid(np.trapezoid(self.values, self.im, axis=1), self.re))

    def to_csv(self, fh):
        fh.write("re,im,value\n")
        for i, x in enumerate(self.re):
            for j, y in enumerate(self.im):
                fh.write(f"{float(x)!r},{float(y)!r},{float(self.values[i, j])!r}\n")

    def to_json_obj(self) -> dict:
        meta = {"s": self.s, "re": self.re.tolist(), "im": self.im.tolist(),
                "shape": list(self.values.shape), "order": "row-major (re, im)"}
        meta.update(self.meta)
        return {"meta": meta, "data": self.values.tolist()}

    def to_json(self, fh):
        json.dump(self.to_json_obj(), fh)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "QuasiGrid":
        m = obj["meta"]
        extra = {k: v for k, v in m.items() if k not in ("s", "re", "im", "shape", "order")}
        return cls(m["re"], m["im"], m["s"], np.array(obj["data"]), extra)

    @classmethod
    def from_csv(cls, fh, s: float) -> "QuasiGrid":
        rows = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
        if rows[0].split(",") != ["re", "im", "value"]:
            raise ValueError("expected header re,im,value")
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]])
        re = np.unique(data[:, 0])
        im = np.unique(data[:, 1])
        return cls(re, im, s, data[:, 2].reshape(re.size, im.size))


def quasi_grid(rho, re, im, s: float, *, allow_positive: bool = False) -> QuasiGrid:
    re = np.asarray(re, dtype=float)
    im = np.asarray(im, dtype=float)
    pts = re[:, None] + 1j * im[None, :]
    return QuasiGrid(re, im, s, quasi_points(rho, pts, s, allow_positive=allow_positive))


def ordering_transform(grid: QuasiGrid, s_target: float) -> QuasiGrid:
    """Smooth a grid to a lower ordering by Gaussian convolution.

    Raising the ordering would need a deconvolution whose kernel grows
    without bound in Fourier space; that direction is refused.
    """
    if s_target > grid.s:
        raise ValueError(f"cannot raise the ordering from s={grid.s} to s={s_target}")
    ds = grid.s - s_target
    if ds == 0:
        return QuasiGrid(grid.re.copy(), grid.im.copy(), grid.s, grid.values.copy(), dict(grid.meta))
    hx, hy = grid.step
    width = 4.0 * np.sqrt(ds)  # eight standard deviations of exp(-2|z|^2/ds)
    nx = int(np.ceil(width / hx))
    ny = int(np.ceil(width / hy))
    kx = hx * np.arange(-nx, nx + 1)
    ky = hy * np.arange(-ny, ny + 1)
    kernel = 2.0 / (np.pi * ds) * np.exp(-2.0 * (kx[:, None] ** 2 + ky[None, :] ** 2) / ds)
    vals = signal.fftconvolve(grid.values, kernel * hx * hy, mode="same")
    return QuasiGrid(grid.re.copy(), grid.im.copy(), s_target, vals, dict(grid.meta))


def diffusion_residual(rho, alpha: complex, s: float, h: float = 1e-3) -> float:
    """``|dW/ds + (1/2) d^2W/(d alpha d alpha*)|`` by central differences."""
    if s > -h:
        raise ValueError("need s <= -h so that s + h stays in the bounded range")
    alpha = complex(alpha)
    pts = np.array([alpha, alpha + h, alpha - h, alpha + 1j * h, alpha - 1j * h])
    w = quasi_points(rho, pts, s)
    ws = quasi_points(rho, np.array([alpha]), s + h)[0] - quasi_points(rho, np.array([alpha]), s - h)[0]
    dw_ds = ws / (2.0 * h)
    lap = (w[1] + w[2] + w[3] + w[4] - 4.0 * w[0]) / h**2
    # d^2/(d alpha d alpha*) = laplacian / 4
    return float(abs(dw_ds + 0.125 * lap))


def multimode_quasi(states: Sequence, alphas: Sequence[complex], s: float) -> float:
    """Product-state quasidistribution at the points ``alphas``."""
    if len(states) != len(alphas):
        raise ValueError("need one phase-space point per mode")
    value = 1.0
    for rho, a in zip(states, alphas):
        value *= quasi_value(rho, a, s)
    return value
