"""Single-mode states in a truncated Fock basis.

State descriptions are small frozen dataclasses; ``to_density_matrix``
turns any of them into a :class:`FockDensityMatrix` and reports how much
probability fell outside the truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special, stats

__all__ = [
    "Vacuum",
    "Coherent",
    "Fock",
    "Thermal",
    "SqueezedVacuum",
    "Cat",
    "Mixture",
    "Explicit",
    "StateSpec",
    "FockDensityMatrix",
    "to_density_matrix",
    "photon_number_distribution",
    "default_dim",
    "displaced_fock_overlap",
    "displacement_matrix",
    "mean_photon_number",
    "laguerre_diagonals",
    "assemble_diagonals",
]


@dataclass(frozen=True)
class FockDensityMatrix:
    """Truncated density matrix ``rho[m, n] = <m|rho|n>``.

    ``leakage`` is the probability mass that the truncation discarded; the
    trace equals ``1 - leakage`` up to rounding.
    """

    elements: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        rho = np.array(self.elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise ValueError("density matrix must be a nonempty square matrix")
        # exact Hermiticity by construction
        rho = 0.5 * (rho + rho.conj().T)
        rho.setflags(write=False)
        object.__setattr__(self, "elements", rho)
        object.__setattr__(self, "leakage", max(0.0, float(self.leakage)))

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return self.elements.diagonal().real.copy()

    @property
    def trace(self) -> float:
        return float(self.elements.diagonal().real.sum())

    def padded(self, dim: int) -> "FockDensityMatrix":
        """Zero-pad (or truncate) to ``dim``; truncation adds to leakage."""
        if dim >= self.dim:
            out = np.zeros((dim, dim), dtype=complex)
            out[: self.dim, : self.dim] = self.elements
            return FockDensityMatrix(out, self.leakage)
        lost = float(self.elements.diagonal().real[dim:].sum())
        return FockDensityMatrix(self.elements[:dim, :dim], self.leakage + lost)


@dataclass(frozen=True)
class Vacuum:
    pass


@dataclass(frozen=True)
class Coherent:
    alpha: complex


@dataclass(frozen=True)
class Fock:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"Fock photon number must be a nonnegative integer, got {self.n}")


@dataclass(frozen=True)
class Thermal:
    nbar: float

    def __post_init__(self):
        if not self.nbar >= 0:
            raise ValueError(f"thermal mean photon number must be >= 0, got {self.nbar}")


@dataclass(frozen=True)
class SqueezedVacuum:
    """Squeezed vacuum ``S(r)|0>`` with ``S(r) = exp(r (a^2 - a^dag^2) / 2)``."""

    r: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"squeeze parameter must be >= 0, got {self.r}")


@dataclass(frozen=True)
class Cat:
    """Even superposition of ``|alpha>`` and ``|-alpha>``."""

    alpha: complex

    @property
    def norm(self) -> float:
        return 1.0 / np.sqrt(2.0 * (1.0 + np.exp(-2.0 * abs(self.alpha) ** 2)))


@dataclass(frozen=True)
class Mixture:
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        weights = np.array([w for w, _ in comps])
        if np.any(weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must sum to 1, got {weights.sum()!r}")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True)
class Explicit:
    rho: FockDensityMatrix


StateSpec = Union[Vacuum, Coherent, Fock, Thermal, SqueezedVacuum, Cat, Mixture, Explicit]


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    c = np.empty(dim, dtype=complex)
    c[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def _squeezed_amplitudes(r: float, dim: int) -> np.ndarray:
    c = np.zeros(dim, dtype=complex)
    c[0] = 1.0 / np.sqrt(np.cosh(r))
    t = -np.tanh(r)
    for n in range(2, dim, 2):
        c[n] = c[n - 2] * t * np.sqrt((n - 1) / n)
    return c


def _pure(c: np.ndarray, leakage: float | None = None) -> FockDensityMatrix:
    if leakage is None:
        leakage = 1.0 - float(np.sum(abs(c) ** 2))
    return FockDensityMatrix(np.outer(c, c.conj()), leakage)


def to_density_matrix(spec: StateSpec, dim: int) -> FockDensityMatrix:
    """Density matrix of ``spec`` truncated to ``dim`` Fock levels."""
    dim = int(dim)
    if dim < 1:
        raise ValueError("truncation dimension must be >= 1")

    if isinstance(spec, Vacuum):
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return FockDensityMatrix(rho, 0.0)
    if isinstance(spec, Fock):
        if spec.n >= dim:
            raise ValueError(f"Fock({spec.n}) does not fit into dim={dim}")
        rho = np.zeros((dim, dim), dtype=complex)
        rho[spec.n, spec.n] = 1.0
        return FockDensityMatrix(rho, 0.0)
    if isinstance(spec, Coherent):
        c = _coherent_amplitudes(complex(spec.alpha), dim)
        return _pure(c, float(special.gammainc(dim, abs(spec.alpha) ** 2)))
    if isinstance(spec, Thermal):
        p = _thermal_probs(spec.nbar, dim)
        x = spec.nbar / (1.0 + spec.nbar)
        return FockDensityMatrix(np.diag(p).astype(complex), x**dim)
    if isinstance(spec, SqueezedVacuum):
        return _pure(_squeezed_amplitudes(float(spec.r), dim), _tail_mass(spec, dim))
    if isinstance(spec, Cat):
        c = _coherent_amplitudes(complex(spec.alpha), dim)
        c = 2.0 * spec.norm * c
        c[1::2] = 0.0
        return _pure(c, _tail_mass(spec, dim))
    if isinstance(spec, Mixture):
        rho = np.zeros((dim, dim), dtype=complex)
        leak = 0.0
        for w, comp in spec.components:
            part = to_density_matrix(comp, dim)
            rho += w * part.elements
            leak += w * part.leakage
        return FockDensityMatrix(rho, leak)
    if isinstance(spec, Explicit):
        return spec.rho.padded(dim)
    raise TypeError(f"unknown state spec {spec!r}")


def _tail_mass(spec: StateSpec, dim: int) -> float:
    # summed from the analytic distribution; 1 - sum|c|^2 would round to 0
    p = photon_number_distribution(spec, 4 * dim + 200)
    return float(p[dim:].sum())


def _thermal_probs(nbar: float, size: int) -> np.ndarray:
    n = np.arange(size)
    if nbar == 0:
        return (n == 0).astype(float)
    x = nbar / (1.0 + nbar)
    return x**n / (1.0 + nbar)


def photon_number_distribution(spec: StateSpec, max_n: int) -> np.ndarray:
    """Occupation probabilities ``p_0 .. p_max_n``."""
    if max_n < 0:
        raise ValueError("max_n must be >= 0")
    n = np.arange(max_n + 1)
    if isinstance(spec, Vacuum):
        return (n == 0).astype(float)
    if isinstance(spec, Fock):
        return (n == spec.n).astype(float)
    if isinstance(spec, Coherent):
        return stats.poisson.pmf(n, abs(spec.alpha) ** 2)
    if isinstance(spec, Thermal):
        return _thermal_probs(spec.nbar, max_n + 1)
    if isinstance(spec, SqueezedVacuum):
        p = np.zeros(max_n + 1)
        if spec.r == 0:
            p[0] = 1.0
            return p
        k = n[::2] // 2
        logp = (special.gammaln(2 * k + 1) - 2 * special.gammaln(k + 1) - 2 * k * np.log(2.0)
                + 2 * k * np.log(np.tanh(spec.r)) - np.log(np.cosh(spec.r)))
        p[::2] = np.exp(logp)
        return p
    if isinstance(spec, Cat):
        p = 4.0 * spec.norm**2 * stats.poisson.pmf(n, abs(spec.alpha) ** 2)
        p[1::2] = 0.0
        return p
    if isinstance(spec, Mixture):
        return sum(w * photon_number_distribution(c, max_n) for w, c in spec.components)
    if isinstance(spec, Explicit):
        return spec.rho.padded(max_n + 1).diagonal
    raise TypeError(f"unknown state spec {spec!r}")


def mean_photon_number(spec: StateSpec) -> float:
    if isinstance(spec, Vacuum):
        return 0.0
    if isinstance(spec, Fock):
        return float(spec.n)
    if isinstance(spec, Coherent):
        return abs(spec.alpha) ** 2
    if isinstance(spec, Thermal):
        return float(spec.nbar)
    if isinstance(spec, SqueezedVacuum):
        return float(np.sinh(spec.r) ** 2)
    if isinstance(spec, Cat):
        a2 = abs(spec.alpha) ** 2
        return a2 * np.tanh(a2)
    if isinstance(spec, Mixture):
        return sum(w * mean_photon_number(c) for w, c in spec.components)
    if isinstance(spec, Explicit):
        d = spec.rho.diagonal
        return float(np.dot(np.arange(d.size), d))
    raise TypeError(f"unknown state spec {spec!r}")


def default_dim(spec: StateSpec, tol: float = 1e-20, max_dim: int = 400) -> int:
    """Smallest truncation whose discarded probability is below ``tol``.

    Interference terms respond to the discarded amplitude, which is of
    order ``sqrt(tol)``; the default keeps that near 1e-10.
    """
    if isinstance(spec, Vacuum):
        return 1
    if isinstance(spec, Fock):
        return spec.n + 1
    if isinstance(spec, Explicit):
        return spec.rho.dim
    if isinstance(spec, Mixture):
        return max(default_dim(c, tol, max_dim) for _, c in spec.components)
    if isinstance(spec, Thermal):
        if spec.nbar == 0:
            return 1
        x = spec.nbar / (1.0 + spec.nbar)
        return min(max_dim, int(np.ceil(np.log(tol) / np.log(x))))
    # Poisson-like or squeezed: sum the tail from the far end so that it is
    # not swamped by rounding in 1 - cumsum
    size = 64
    while True:
        p = photon_number_distribution(spec, size - 1)
        tail = np.cumsum(p[::-1])[::-1]
        idx = np.nonzero(tail < tol)[0] if p[-10:].max() < 1e-3 * tol else np.array([], int)
        if idx.size and idx[0] > 0:
            return int(idx[0])
        if idx.size:
            return 1
        if size >= max_dim:
            return max_dim
        size = min(2 * size, max_dim)


def laguerre_diagonals(u0: np.ndarray, p: float, r: np.ndarray, nmax: int) -> np.ndarray:
    """Run ``u[n+1] = ((p (2n+1+k) + r) u[n] - p^2 sqrt(n (n+k)) u[n-1]) / sqrt((n+1)(n+1+k))``.

    ``u0`` holds the starting values with the diagonal offset ``k`` on the
    last axis; ``r`` broadcasts against it. This is the three-term recurrence
    of normalised associated-Laguerre functions, run in the direction in
    which it is stable. Returns an array with a new axis ``n`` inserted
    before ``k``.
    """
    k = np.arange(u0.shape[-1])
    u = np.zeros(u0.shape[:-1] + (nmax, u0.shape[-1]), dtype=float)
    u[..., 0, :] = u0
    prev = np.zeros_like(u0)
    for n in range(nmax - 1):
        nxt = ((p * (2 * n + 1 + k) + r) * u[..., n, :] - p * p * np.sqrt(n * (n + k)) * prev)
        nxt /= np.sqrt((n + 1) * (n + 1 + k))
        prev = u[..., n, :]
        u[..., n + 1, :] = nxt
    return u


def assemble_diagonals(u: np.ndarray, lower: np.ndarray, upper: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Matrix with ``M[n+k, n] = u[n, k] lower[k]`` and ``M[n, n+k] = u[n, k] upper[k]``."""
    m = np.arange(rows)[:, None]
    n = np.arange(cols)[None, :]
    lo = np.minimum(m, n)
    k = np.abs(m - n)
    phase = np.where(m >= n, lower[..., k], upper[..., k])
    return u[..., lo, k] * phase


def displacement_matrix(gamma, rows: int, cols: int | None = None) -> np.ndarray:
    """Exact matrix elements ``<m|D(gamma)|n>`` for ``m < rows``, ``n < cols``.

    ``gamma`` may be an array; the matrix axes are then appended after the
    shape of ``gamma``. Each diagonal ``m - n = k`` is
    ``sqrt(n!/m!) gamma^k e^{-|gamma|^2/2} L_n^(k)(|gamma|^2)``, generated by a
    stable recurrence in ``n``. These are elements of the infinite matrix,
    not of the exponential of a truncated generator.
    """
    cols = rows if cols is None else cols
    g = np.asarray(gamma, dtype=complex)
    x = np.abs(g) ** 2
    kmax = max(rows, cols)
    k = np.arange(kmax)
    nz = (x > 0)[..., None]
    logabs = np.log(np.where(nz, np.abs(g)[..., None], 1.0))
    u0 = np.where(k == 0, np.exp(-0.5 * x)[..., None],
                  np.where(nz, np.exp(-0.5 * x[..., None] + k * logabs - 0.5 * special.gammaln(k + 1)), 0.0))
    u = laguerre_diagonals(u0, 1.0, -x[..., None], min(rows, cols))
    unit = np.where(x > 0, g / np.where(x > 0, np.abs(g), 1.0), 1.0)[..., None]
    lower = unit**k
    upper = (-unit.conj()) ** k
    return assemble_diagonals(u, lower, upper, rows, cols)


def displaced_fock_overlap(m: int, n: int, gamma: complex) -> complex:
    """``<m|D(gamma)|n>`` from the associated-Laguerre closed form."""
    if m < 0 or n < 0:
        raise ValueError("photon numbers must be nonnegative")
    gamma = complex(gamma)
    x = abs(gamma) ** 2
    if m >= n:
        k, lo, z = m - n, n, gamma
    else:
        k, lo, z = n - m, m, -gamma.conjugate()
    lag = special.eval_genlaguerre(lo, k, x)
    if z == 0:
        return complex(lag) if k == 0 else 0j
    # sqrt(lo!/(lo+k)!) z^k e^{-x/2} in log form
    logmag = 0.5 * (special.gammaln(lo + 1) - special.gammaln(lo + k + 1)) + k * np.log(abs(z)) - 0.5 * x
    phase = np.exp(1j * k * np.angle(z))
    return complex(np.exp(logmag) * phase * lag)

