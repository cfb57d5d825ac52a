"""Statistics of linear estimators built from photocount histograms.

An experiment consists of settings ``i``, each repeated ``N`` times, with
outcome probabilities ``p[i, n]``. A linear estimator is given by kernel
coefficients ``a[i, n]`` and reads ``A = sum_i sum_n a[i, n] k[i, n] / N``.

Random numbers come from numpy's PCG64 bit generator, seeded directly with
the integer seed, so a fixed seed reproduces a histogram bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "RNG_ALGORITHM",
    "make_rng",
    "spawn_seeds",
    "Histogram",
    "EstimatorKernel",
    "ExperimentDesign",
    "sample_histogram",
    "estimate",
    "exact_moments",
    "generating_function",
    "covariance",
    "correlation",
    "inverse_bernoulli_kernel",
    "inverse_bernoulli_matrix",
    "bernoulli_matrix",
    "parity_kernel",
    "pcgf_kernel",
    "reconstruct_photon_distribution",
    "parity_variance_coherent",
    "ThermalParityStats",
    "parity_stats_thermal",
    "monte_carlo_estimates",
]

RNG_ALGORITHM = "PCG64"
_THRESHOLD_RTOL = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Independent child streams of ``seed``."""
    return np.random.SeedSequence(seed).spawn(n)


@dataclass(frozen=True)
class Histogram:
    """Counts ``k_0 .. k_K`` from ``N`` runs; runs above ``K`` are not binned."""

    counts: np.ndarray
    N: int
    seed: int | None = None

    def __post_init__(self):
        k = np.asarray(self.counts)
        if k.ndim != 1:
            raise ValueError("counts must be a vector")
        if not np.issubdtype(k.dtype, np.integer):
            if not np.all(k == np.round(k)):
                raise ValueError("counts must be integers")
            k = k.astype(np.int64)
        if np.any(k < 0):
            raise ValueError("counts must be nonnegative")
        if k.sum() > self.N:
            raise ValueError(f"counts sum {k.sum()} exceeds N={self.N}")
        k.setflags(write=False)
        object.__setattr__(self, "counts", k)

    @property
    def K(self) -> int:
        return self.counts.size - 1

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.N

    def to_csv(self, fh):
        fh.write(f"# N={self.N}\n# seed={self.seed}\nn,k_n\n")
        for n, k in enumerate(self.counts):
            fh.write(f"{n},{k}\n")

    @classmethod
    def from_csv(cls, fh) -> "Histogram":
        N = seed = None
        rows = []
        for line in fh.read().splitlines():
            if line.startswith("# N="):
                N = int(line[4:])
            elif line.startswith("# seed="):
                v = line[7:]
                seed = None if v == "None" else int(v)
            elif line and not line.startswith("#") and line != "n,k_n":
                rows.append(int(line.split(",")[1]))
        if N is None:
            raise ValueError("missing '# N=' header")
        return cls(np.array(rows, dtype=np.int64), N, seed)


@dataclass(frozen=True)
class EstimatorKernel:
    """Coefficients ``a[i, n]`` per setting ``i`` and count ``n``."""

    coefficients: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if a.ndim != 2:
            raise ValueError("kernel must be a (settings, K+1) array")
        if not np.all(np.isfinite(a)):
            raise ValueError("kernel coefficients must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "coefficients", a)


@dataclass(frozen=True)
class ExperimentDesign:
    """Per-setting outcome probabilities and the number of runs per setting."""

    probs: np.ndarray
    N: int
    settings: tuple = field(default=())

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.probs, dtype=float))
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if np.any(p.sum(axis=1) > 1.0 + 1e-9):
            raise ValueError("each setting's probabilities must sum to at most 1")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if not self.settings:
            object.__setattr__(self, "settings", tuple(range(p.shape[0])))
        if len(self.settings) != p.shape[0]:
            raise ValueError("one label per setting")

    @property
    def K(self) -> int:
        return self.probs.shape[1] - 1

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "settings": list(self.settings), "probs": self.probs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ExperimentDesign":
        d = json.loads(text)
        return cls(np.array(d["probs"]), int(d["N"]), tuple(d["settings"]))


def _check_shapes(design: ExperimentDesign, *kernels: EstimatorKernel):
    for k in kernels:
        if k.coefficients.shape != design.probs.shape:
            raise ValueError(f"kernel shape {k.coefficients.shape} does not match design "
                             f"{design.probs.shape}")


def sample_histogram(p, N: int, seed: int | np.random.SeedSequence) -> Histogram:
    """Multinomial draw of ``N`` runs; mass missing from ``p`` is unbinned."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("p must be a finite nonnegative vector")
    total = p.sum()
    if total > 1.0 + 1e-9:
        raise ValueError(f"probabilities sum to {total} > 1")
    rest = max(0.0, 1.0 - total)
    full = np.append(p, rest) / (total + rest)
    rng = np.random.default_rng(seed) if isinstance(seed, np.random.SeedSequence) else make_rng(seed)
    draw = rng.multinomial(N, full)
    label = seed if isinstance(seed, (int, np.integer)) else None
    return Histogram(draw[:-1], N, label)


def estimate(hists, kernel: EstimatorKernel) -> float:
    """``sum_i sum_n a[i, n] k[i, n] / N``."""
    if isinstance(hists, Histogram):
        hists = [hists]
    a = kernel.coefficients
    if len(hists) != a.shape[0]:
        raise ValueError("one histogram per kernel setting")
    total = 0.0
    for h, row in zip(hists, a):
        if h.counts.size != row.size:
            raise ValueError(f"histogram K={h.K} does not match kernel K={row.size - 1}")
        total += float(row @ h.frequencies)
    return total


def exact_moments(design: ExperimentDesign, kernel: EstimatorKernel) -> tuple[float, float]:
    _check_shapes(design, kernel)
    a, p = kernel.coefficients, design.probs
    first = (a * p).sum(axis=1)
    mean = float(first.sum())
    var = float(((a**2 * p).sum() - (first**2).sum()) / design.N)
    return mean, max(var, 0.0)


def covariance(design: ExperimentDesign, ka: EstimatorKernel, kb: EstimatorKernel) -> float:
    _check_shapes(design, ka, kb)
    a, b, p = ka.coefficients, kb.coefficients, design.probs
    return float(((a * b * p).sum() - ((a * p).sum(axis=1) * (b * p).sum(axis=1)).sum()) / design.N)


def correlation(design: ExperimentDesign, ka: EstimatorKernel, kb: EstimatorKernel) -> float:
    va = covariance(design, ka, ka)
    vb = covariance(design, kb, kb)
    p = design.probs
    # a variance at rounding level relative to E[a^2] / N counts as zero
    eps = 64 * np.finfo(float).eps / design.N
    if va <= eps * (ka.coefficients**2 * p).sum() or vb <= eps * (kb.coefficients**2 * p).sum():
        raise ZeroDivisionError("correlation undefined: an estimator has zero variance")
    return float(np.clip(covariance(design, ka, kb) / np.sqrt(va * vb), -1.0, 1.0))


def generating_function(design: ExperimentDesign, kernel: EstimatorKernel, lam: float) -> complex:
    """``E[exp(i lam A)]`` for the multinomial histogram statistics."""
    _check_shapes(design, kernel)
    a, p, N = kernel.coefficients, design.probs, design.N
    per_setting = 1.0 + (p * np.expm1(1j * lam * a / N)).sum(axis=1)
    return complex(np.exp(N * np.log(per_setting).sum()))


def _log_binom(n, k):
    return special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1)


def inverse_bernoulli_kernel(nu, n, eta: float):
    """``r_{nu n} = C(n, nu) eta^-nu (1 - 1/eta)^(n - nu)`` for ``n >= nu``, else 0."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    nu = np.asarray(nu)
    n = np.asarray(n)
    nu_b, n_b = np.broadcast_arrays(nu, n)
    out = np.zeros(nu_b.shape)
    ok = n_b >= nu_b
    if eta == 1.0:
        out = (nu_b == n_b).astype(float)
    else:
        d = (n_b - nu_b)[ok]
        logmag = _log_binom(n_b[ok], nu_b[ok]) - nu_b[ok] * np.log(eta) + d * np.log(1.0 / eta - 1.0)
        out[ok] = np.where(d % 2 == 0, 1.0, -1.0) * np.exp(logmag)
    return out if out.ndim else float(out)


def inverse_bernoulli_matrix(K: int, eta: float) -> np.ndarray:
    """``R[nu, n]`` for ``0 <= nu, n <= K``."""
    idx = np.arange(K + 1)
    return inverse_bernoulli_kernel(idx[:, None], idx[None, :], eta)


def bernoulli_matrix(K: int, eta: float) -> np.ndarray:
    """Loss map ``B[n, m] = C(m, n) eta^n (1 - eta)^(m - n)``."""
    idx = np.arange(K + 1)
    n, m = idx[:, None], idx[None, :]
    out = np.zeros((K + 1, K + 1))
    ok = m >= n
    if eta == 1.0:
        return np.eye(K + 1)
    nn, mm = np.broadcast_arrays(n, m)
    out[ok] = np.exp(_log_binom(mm[ok], nn[ok]) + nn[ok] * np.log(eta) + (mm[ok] - nn[ok]) * np.log1p(-eta))
    return out


def parity_kernel(n, eta: float):
    """Loss-compensated parity weight ``(1 - 2/eta)^n``."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    n = np.asarray(n)
    base = 1.0 - 2.0 / eta
    sign = np.where((n % 2 == 1) & (base < 0), -1.0, 1.0)
    if base == 0:
        out = (n == 0).astype(float)
    else:
        out = sign * np.exp(n * np.log(abs(base)))
    return out if out.ndim else float(out)


def pcgf_kernel(s: float, K: int, eta: float = 1.0) -> np.ndarray:
    """Weights ``q^n`` with ``q`` the ordering ratio at ``s``.

    With ``eta < 1`` the ratio is the loss-compensated one, so the estimator
    targets the generating function before loss at ordering ``s``.
    """
    q = (s + 1.0) / (s - 1.0)
    q_eff = 1.0 - (1.0 - q) / eta
    return q_eff ** np.arange(K + 1)


def reconstruct_photon_distribution(h: Histogram, eta: float, K: int | None = None) -> np.ndarray:
    """Inverse-Bernoulli estimate of ``rho_nu`` for ``nu = 0 .. K``."""
    K = h.K if K is None else K
    R = inverse_bernoulli_matrix(h.K, eta)[:K + 1]
    return R @ h.frequencies


def parity_variance_coherent(alpha: complex, eta: float, N: int) -> float:
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    a2 = abs(alpha) ** 2
    return float((np.exp(4.0 * (1.0 - eta) * a2 / eta) - np.exp(-4.0 * a2)) / N)


@dataclass(frozen=True)
class ThermalParityStats:
    mean_exists: bool
    mean: float | None
    variance_exists: bool
    variance: float | None
    mean_threshold: float
    variance_threshold: float


def _below(x: float, threshold: float) -> bool:
    # the series ratio equals 1 at the threshold itself; rounding in the
    # threshold formula must not turn that boundary into convergence
    return bool(x < threshold * (1.0 - _THRESHOLD_RTOL))


def parity_stats_thermal(nbar: float, eta: float, N: int) -> ThermalParityStats:
    """Mean and variance of the compensated parity estimator on thermal light."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if eta == 1.0:
        t_mean = t_var = np.inf
    else:
        t_mean = 1.0 / (2.0 * (1.0 - eta))
        t_var = eta / (4.0 * (1.0 - eta))
    m_ok = _below(nbar, t_mean)
    v_ok = _below(nbar, t_var)
    mean = 1.0 / (1.0 + 2.0 * nbar) if m_ok else None
    var = (eta / (eta - 4.0 * nbar * (1.0 - eta)) - 1.0 / (1.0 + 2.0 * nbar) ** 2) / N if v_ok else None
    return ThermalParityStats(m_ok, mean, v_ok, var, float(t_mean), float(t_var))


def monte_carlo_estimates(p, N: int, kernel_row, seeds) -> np.ndarray:
    """Single-setting estimator values, one histogram per seed."""
    kernel_row = np.asarray(kernel_row, dtype=float)
    return np.array([float(kernel_row @ sample_histogram(p, N, int(sd)).frequencies) for sd in seeds])
