"""Beam splitter + coherent probe + photon counter.

The signal mode ``a_S`` and a coherent probe of amplitude ``alpha`` are
combined as ``a_out = sqrt(T) a_S - sqrt(1 - T) a_P`` and the outgoing mode
is counted with quantum efficiency ``eta``. Up to a global factor this is a
measurement of the signal displaced by ``-beta`` with

    beta = sqrt((1 - T) / T) * alpha

seen by a detector of effective efficiency ``eta * T``. The ``*_at``
functions take ``beta`` and the effective efficiency directly, which also
admits the ideal limit ``eta * T = 1`` that no physical ``T < 1`` reaches.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import special, stats

from .errors import DivergenceError, TruncationError
from .phasespace import check_cauchy, ordering_ratio, quasi_points, quasi_value
from .states import (
    Cat,
    Coherent,
    Fock,
    FockDensityMatrix,
    StateSpec,
    Thermal,
    Vacuum,
    default_dim,
    displacement_matrix,
    mean_photon_number,
    to_density_matrix,
)

__all__ = [
    "DetectorModel",
    "CountDistribution",
    "PcgfResult",
    "ScanResult",
    "counts_at",
    "count_statistics",
    "bernoulli_loss",
    "pcgf",
    "pcgf_to_quasi",
    "mapped_ordering",
    "mode_mismatch_pcgf",
    "visibility_to_overlap",
    "overlap_to_visibility",
    "cutoff_error_bound",
    "thermal_noise_parity",
    "multimode_parity_at",
    "multimode_parity_scan",
    "parity_to_multimode_quasi",
    "overlap_integral",
    "scan",
]

CUMULATIVE_TARGET = 1.0 - 1e-10
TAIL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DetectorModel:
    """Quantum efficiency, transmission, mode overlap and count cut-off.

    ``K=None`` lets the count distribution choose its own cut-off.
    """

    eta: float = 1.0
    T: float = 0.5
    xi: float = 1.0
    K: int | None = None

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not 0.0 < self.T < 1.0:
            raise ValueError(f"T must lie in (0, 1), got {self.T}")
        if not 0.0 <= self.xi <= 1.0:
            raise ValueError(f"xi must lie in [0, 1], got {self.xi}")
        if self.K is not None and self.K < 0:
            raise ValueError(f"K must be >= 0, got {self.K}")

    @property
    def efficiency(self) -> float:
        return self.eta * self.T

    def beta(self, alpha):
        return np.sqrt((1.0 - self.T) / self.T) * np.asarray(alpha)

    def mapped_ordering(self, s: float) -> float:
        return mapped_ordering(s, self.efficiency)


def mapped_ordering(s: float, efficiency: float) -> float:
    """Ordering of the signal quasidistribution read off at setting ``s``."""
    # adding 0.0 turns -0.0 at unit efficiency into 0.0
    return -(1.0 - s - efficiency) / efficiency + 0.0


@dataclass(frozen=True)
class CountDistribution:
    """Photocount probabilities ``p_0 .. p_K`` and the mass beyond ``K``."""

    probs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a nonempty vector")
        if np.any(p < -1e-12):
            raise ValueError("probabilities must be nonnegative")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "tail", max(0.0, float(self.tail)))

    @property
    def K(self) -> int:
        return self.probs.size - 1

    @property
    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    def truncated(self, K: int) -> "CountDistribution":
        if K >= self.K:
            return self
        return CountDistribution(self.probs[:K + 1], self.tail + float(self.probs[K + 1:].sum()))


def _choose_cutoff(p: np.ndarray) -> int:
    idx = np.nonzero(np.cumsum(p) >= CUMULATIVE_TARGET)[0]
    return int(idx[0]) if idx.size else p.size - 1


def _poisson(n, mean):
    return stats.poisson.pmf(n, mean)


def _thermal_counts(nbar, beta, eff, n):
    if nbar == 0:
        return _poisson(n, eff * abs(beta) ** 2)
    m = eff * nbar
    b2 = abs(beta) ** 2
    log_p = n * np.log(m) - (n + 1) * np.log1p(m) - eff * b2 / (1.0 + m)
    lag = special.eval_laguerre(n, -b2 / (nbar * (1.0 + m)))
    return np.exp(log_p) * lag


def _fock1_counts(beta, eff, n):
    J = eff * abs(beta) ** 2
    if J == 0:
        return np.where(n == 0, 1.0 - eff, 0.0) + np.where(n == 1, eff, 0.0)
    pois = _poisson(n, J)
    return pois * (eff * (n - J) ** 2 / J + (1.0 - eff))


def _cat_counts(alpha0, beta, eff, n):
    a2 = abs(alpha0) ** 2
    pa = _poisson(n, eff * abs(beta - alpha0) ** 2)
    pb = _poisson(n, eff * abs(beta + alpha0) ** 2)
    z = eff * (np.conj(beta) - np.conj(alpha0)) * (beta + alpha0)
    phase = eff * (np.conj(alpha0) * beta - alpha0 * np.conj(beta))
    env = -(2.0 - eff) * a2 - eff * abs(beta) ** 2
    with np.errstate(divide="ignore"):
        logz = np.log(z + 0j) if z != 0 else -np.inf
    if z == 0:
        cross = np.where(n == 0, np.exp(phase + env), 0.0)
    else:
        cross = np.exp(n * logz - special.gammaln(n + 1) + phase + env)
    return (pa + pb + 2.0 * np.real(cross)) / (2.0 * (1.0 + np.exp(-2.0 * a2)))


def _closed_form(signal, beta, eff, n):
    if isinstance(signal, Vacuum):
        return _poisson(n, eff * abs(beta) ** 2)
    if isinstance(signal, Coherent):
        return _poisson(n, eff * abs(beta - signal.alpha) ** 2)
    if isinstance(signal, Thermal):
        return _thermal_counts(signal.nbar, beta, eff, n)
    if isinstance(signal, Fock) and signal.n == 1:
        return _fock1_counts(beta, eff, n)
    if isinstance(signal, Cat):
        return _cat_counts(complex(signal.alpha), beta, eff, n)
    return None


def bernoulli_loss(p: np.ndarray, efficiency: float) -> np.ndarray:
    """Binomial thinning ``p'_n = sum_m C(m, n) eta^n (1 - eta)^(m - n) p_m``."""
    p = np.asarray(p, dtype=float)
    if efficiency == 1.0:
        return p.copy()
    m = np.arange(p.size)
    kernel = stats.binom.pmf(m[:, None], m[None, :], efficiency)
    return kernel @ p


def _displaced_diagonal(rho: FockDensityMatrix, beta: complex) -> np.ndarray:
    radius = np.sqrt(rho.dim) + abs(beta)
    rows = rho.dim + int(np.ceil(radius**2 + 8 * radius + 16))
    dm = displacement_matrix(-complex(beta), rows, rho.dim)
    return np.einsum("nj,jk,nk->n", dm, rho.elements, dm.conj()).real


def counts_at(signal, beta: complex, efficiency: float, *, K: int | None = None,
              dim: int | None = None, method: str = "auto") -> CountDistribution:
    """Count distribution for probe point ``beta`` and effective efficiency.

    ``method`` is ``"auto"`` (closed form when one exists), ``"closed"`` or
    ``"generic"`` (exact displacement of the truncated density matrix
    followed by Bernoulli loss).
    """
    if not 0.0 < efficiency <= 1.0:
        raise ValueError(f"effective efficiency must lie in (0, 1], got {efficiency}")
    if method not in ("auto", "closed", "generic"):
        raise ValueError(f"unknown method {method!r}")
    beta = complex(beta)
    p = None
    if method != "generic" and not isinstance(signal, FockDensityMatrix):
        size = 64
        mean = efficiency * (mean_photon_number(signal) + abs(beta) ** 2
                             + 2.0 * abs(beta) * np.sqrt(mean_photon_number(signal)))
        size = max(size, int(mean + 20.0 * np.sqrt(mean + 1.0) + 40))
        while True:
            n = np.arange(size)
            p = _closed_form(signal, beta, efficiency, n)
            if p is None or np.cumsum(p)[-1] >= CUMULATIVE_TARGET and p[-1] < 1e-16:
                break
            if size > 20000:
                raise TruncationError("closed-form count distribution does not settle")
            size *= 2
        if p is None and method == "closed":
            raise ValueError(f"no closed form for {type(signal).__name__}")
    leakage = 0.0
    if p is None:
        if isinstance(signal, FockDensityMatrix):
            rho = signal if dim is None else signal.padded(dim)
        else:
            rho = to_density_matrix(signal, dim if dim is not None else default_dim(signal))
        leakage = rho.leakage
        p = bernoulli_loss(_displaced_diagonal(rho, beta), efficiency)
    p = np.clip(p, 0.0, None)
    cut = _choose_cutoff(p) if K is None else int(K)
    kept = np.zeros(cut + 1)
    kept[:min(cut + 1, p.size)] = p[:cut + 1]
    tail = float(p[cut + 1:].sum()) + leakage
    if K is None and tail > TAIL_TOLERANCE:
        raise TruncationError(f"count tail {tail:.3g} exceeds {TAIL_TOLERANCE:g}")
    return CountDistribution(kept, tail)


def count_statistics(signal, alpha: complex, det: DetectorModel, **kw) -> CountDistribution:
    """Counts for probe amplitude ``alpha`` under ``det``.

    A partial mode overlap ``xi < 1`` splits the probe into a part matched
    to the signal, of amplitude ``sqrt(xi) alpha``, and an orthogonal part
    that adds independent Poisson counts.
    """
    beta = complex(det.beta(alpha))
    kw.setdefault("K", det.K)
    if det.xi == 1.0:
        return counts_at(signal, beta, det.efficiency, **kw)
    K = kw.pop("K")
    matched = counts_at(signal, np.sqrt(det.xi) * beta, det.efficiency, **kw)
    mu = det.efficiency * (1.0 - det.xi) * abs(beta) ** 2
    size = matched.probs.size + int(mu + 20.0 * np.sqrt(mu + 1.0) + 40)
    p = np.convolve(matched.probs, _poisson(np.arange(size), mu))[:size]
    cut = _choose_cutoff(p) if K is None else int(K)
    kept = np.zeros(cut + 1)
    kept[:min(cut + 1, p.size)] = p[:cut + 1]
    return CountDistribution(kept, matched.tail + float(p[cut + 1:].sum()))


def pcgf(counts: CountDistribution, s: float) -> float:
    """``Pi(s) = sum_n ((s+1)/(s-1))^n p_n`` over the retained counts."""
    q = ordering_ratio(s)
    terms = q ** np.arange(counts.probs.size) * counts.probs
    if s > 0 and check_cauchy(terms):
        raise DivergenceError(f"generating function diverges at s={s}")
    return float(terms.sum())


@dataclass(frozen=True)
class PcgfResult:
    value: float
    point: complex
    ordering: float
    quasi_value: float


def pcgf_to_quasi(value: float, alpha: complex, det: DetectorModel | None, s: float, *,
                  efficiency: float | None = None, beta: complex | None = None) -> PcgfResult:
    """Map a generating-function value to the signal quasidistribution.

    Either ``det`` with probe amplitude ``alpha``, or ``efficiency`` and
    ``beta`` directly.
    """
    if det is not None:
        efficiency = det.efficiency
        beta = complex(det.beta(alpha))
    if efficiency is None or beta is None:
        raise ValueError("need a detector model or both efficiency and beta")
    return PcgfResult(float(value), complex(beta), mapped_ordering(s, efficiency),
                      float(value) * 2.0 * efficiency / (np.pi * (1.0 - s)))


def mode_mismatch_pcgf(signal, alpha: complex, det: DetectorModel, s: float) -> float:
    """Generating function with a Gaussian envelope from the probe mismatch."""
    if s >= 1:
        raise ValueError("s must be < 1")
    eff = det.efficiency
    s_sig = mapped_ordering(s, eff)
    rho = signal if isinstance(signal, FockDensityMatrix) else to_density_matrix(signal, default_dim(signal))
    point = np.sqrt(det.xi * (1.0 - det.T) / det.T) * complex(alpha)
    w = quasi_value(rho, point, s_sig, allow_positive=s_sig > 0)
    envelope = np.exp(-2.0 * det.eta * (1.0 - det.T) * (1.0 - det.xi) * abs(alpha) ** 2 / (1.0 - s))
    return float(np.pi * (1.0 - s) / (2.0 * eff) * w * envelope)


def visibility_to_overlap(v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    return v / (2.0 - v)


def overlap_to_visibility(xi: float) -> float:
    if not 0.0 <= xi <= 1.0:
        raise ValueError(f"overlap must lie in [0, 1], got {xi}")
    return 4.0 * xi / (2.0 + 2.0 * xi)


def cutoff_error_bound(counts: CountDistribution, K: int, s: float) -> float:
    """Largest change of ``Pi(s)`` the counts above ``K`` can cause."""
    if s > 0:
        raise ValueError("the cut-off bound needs s <= 0")
    p = counts.probs
    if s == 0:
        return float(max(0.0, 1.0 - p[:K + 1].sum()))
    q = abs(ordering_ratio(s))
    n = np.arange(p.size)
    bound = float((q ** n * p)[K + 1:].sum())
    # unresolved mass beyond the stored range sits at |q|^n < |q|^(len)
    return bound + q ** max(p.size, K + 1) * counts.tail


def thermal_noise_parity(beta: complex, kappa: float) -> float:
    """Parity at ``beta`` when a fraction ``kappa`` of the probe is thermal."""
    if not 0.0 <= kappa < 1.0:
        raise ValueError(f"thermal fraction must lie in [0, 1), got {kappa}")
    b2 = abs(beta) ** 2
    d = 2.0 * kappa * b2 + 1.0
    return float(np.exp(-2.0 * (1.0 - kappa) * b2 / d) / d)


def multimode_parity_at(states: Sequence, betas: Sequence[complex], efficiency: float) -> float:
    """Parity of the total count over independently probed modes."""
    if len(states) != len(betas):
        raise ValueError("need one probe point per mode")
    total = np.array([1.0])
    for st, b in zip(states, betas):
        total = np.convolve(total, counts_at(st, b, efficiency).probs)
    return float(((-1.0) ** np.arange(total.size)) @ total)


def multimode_parity_scan(states: Sequence, alphas: Sequence[complex], det: DetectorModel) -> float:
    return multimode_parity_at(states, [complex(det.beta(a)) for a in alphas], det.efficiency)


def parity_to_multimode_quasi(parity: float, modes: int, efficiency: float) -> float:
    """Product-state quasidistribution at ordering ``-(1 - eta T)/(eta T)``."""
    return parity * (2.0 * efficiency / np.pi) ** modes


def overlap_integral(signal, probe, T: float, *, extent: float = 6.0, step: float = 0.05) -> float:
    """``(1/(1-T)) int W_S(b) W_P(sqrt(T/(1-T)) b) d^2 b`` by trapezoid quadrature.

    At unit efficiency this equals ``(2/pi) Pi(0)``, the Wigner function of
    the outgoing mode at the origin.
    """
    ax = np.arange(-extent, extent + step / 2, step)
    pts = ax[:, None] + 1j * ax[None, :]
    ws = quasi_points(signal, pts, 0.0)
    wp = quasi_points(probe, np.sqrt(T / (1.0 - T)) * pts, 0.0)
    return float(np.trapezoid(np.trapezoid(ws * wp, ax, axis=1), ax) / (1.0 - T))


@dataclass
class ScanResult:
    alphas: np.ndarray
    parity: np.ndarray
    quasi_value: np.ndarray
    ordering: float
    meta: dict = field(default_factory=dict)

    def to_csv(self, fh):
        fh.write("re,im,parity,quasi_value,ordering\n")
        for a, p, w in zip(self.alphas, self.parity, self.quasi_value):
            fh.write(f"{float(a.real)!r},{float(a.imag)!r},{float(p)!r},{float(w)!r},{float(self.ordering)!r}\n")

    def to_json_obj(self) -> dict:
        rows = [{"re": a.real, "im": a.imag, "parity": p, "quasi_value": w, "ordering": self.ordering}
                for a, p, w in zip(self.alphas, self.parity, self.quasi_value)]
        return {"meta": dict(self.meta), "data": rows}

    def to_json(self, fh):
        json.dump(self.to_json_obj(), fh)


def scan(signal, alphas, det: DetectorModel, s: float = 0.0) -> ScanResult:
    """Generating function and mapped quasi value over probe amplitudes."""
    alphas = np.asarray(alphas, dtype=complex).ravel()
    par = np.array([pcgf(count_statistics(signal, a, det), s) for a in alphas])
    vals = par * 2.0 * det.efficiency / (np.pi * (1.0 - s))
    return ScanResult(alphas, par, vals, det.mapped_ordering(s), {"detector": asdict(det), "s": s})
