"""``photocount`` command-line tool.

Subcommands read a JSON config (see ``photocount.config``) and write CSV
or JSON. Every output carries the resolved config and library version.
Exit codes: 0 success, 2 configuration error, 3 divergence under
``--strict``. Monte Carlo point ``i`` uses the seed ``seed ^ i``.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, grid_points, load_config
from .direct_scheme import bernoulli_loss, count_statistics, counts_at, mapped_ordering
from .errors import DivergenceError, TruncationError
from .homodyne import (
    double_homodyne_distribution,
    inverse_radon,
    radon_family,
    random_phase_distribution,
)
from .phasespace import (
    analytic_quasi,
    check_cauchy,
    ordering_ratio,
    quasi_points,
)
from .states import (
    Thermal,
    default_dim,
    photon_number_distribution,
    to_density_matrix,
)
from .stats import (
    ExperimentDesign,
    EstimatorKernel,
    correlation,
    exact_moments,
    inverse_bernoulli_matrix,
    parity_stats_thermal,
    parity_variance_coherent,
    sample_histogram,
)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 2, 3


class Divergence(Exception):
    pass


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


class Output:
    """Collects one result table, then writes it as CSV or JSON."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.meta: dict = {}
        self.blocks: list[tuple[dict, list[str], list[list]]] = []

    def block(self, columns, rows, **info):
        self.blocks.append((info, list(columns), rows))

    def render(self) -> str:
        buf = io.StringIO()
        header = {"command": self.command, "version": __version__, "config": self.cfg.resolved}
        header.update(self.meta)
        if self.cfg.format == "json":
            data = []
            for info, cols, rows in self.blocks:
                recs = [dict(zip(cols, (_json_val(v) for v in r))) for r in rows]
                data.append({**info, "rows": recs} if info or len(self.blocks) > 1 else recs)
            body = data[0] if len(data) == 1 and not self.blocks[0][0] else data
            json.dump({"meta": header, "data": body}, buf, sort_keys=True)
            buf.write("\n")
            return buf.getvalue()
        buf.write(f"# version={__version__}\n# command={self.command}\n# config={self.cfg.provenance}\n")
        for k in sorted(self.meta):
            buf.write(f"# {k}={json.dumps(self.meta[k], sort_keys=True)}\n")
        for info, cols, rows in self.blocks:
            for k in sorted(info):
                buf.write(f"# {k}={_fmt(info[k]) if not isinstance(info[k], str) else info[k]}\n")
            buf.write(",".join(cols) + "\n")
            for r in rows:
                buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()

    def write(self):
        text = self.render()
        if self.cfg.out in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(self.cfg.out, "w", newline="\n") as fh:
                fh.write(text)


def _json_val(v):
    if v is None:
        return None
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    f = float(v)
    return f if np.isfinite(f) else None


def _rho(spec):
    return to_density_matrix(spec, default_dim(spec))


def _quasi_values(spec, pts, s, allow_positive):
    try:
        return np.asarray(analytic_quasi(spec, pts, s), dtype=float)
    except TypeError:
        return quasi_points(_rho(spec), pts, s, allow_positive=allow_positive)


def _ordering(v, key="s") -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number", key)
    if v >= 1:
        raise ConfigError(f"{key} must be < 1", key)
    return float(v)


def cmd_quasi(cfg: RunConfig, out: Output):
    spec = cfg.state()
    orderings = cfg.get("orderings", [cfg.get("s", 0.0)])
    if not isinstance(orderings, list) or not orderings:
        raise ConfigError("orderings must be a nonempty list", "orderings")
    allow = bool(cfg.get("allow_positive", False))
    pts, axes = grid_points(cfg.require("grid"))
    for s in orderings:
        s = _ordering(s, "orderings")
        if s > 0 and not allow:
            raise ConfigError("s > 0 needs \"allow_positive\": true", "orderings")
        vals = _quasi_values(spec, pts, s, allow)
        out.block(["re", "im", "value"], [[p.real, p.imag, v] for p, v in zip(pts, vals)], s=s)


def _probe_counts(cfg: RunConfig, spec, point: complex, K):
    if "efficiency" in cfg.raw:
        return counts_at(spec, point, cfg.number("efficiency"), K=K)
    det = cfg.detector()
    return count_statistics(spec, point, det, K=K)


def _efficiency(cfg: RunConfig) -> float:
    if "efficiency" in cfg.raw:
        eff = cfg.number("efficiency")
        if not 0 < eff <= 1:
            raise ConfigError("efficiency must lie in (0, 1]", "efficiency")
        return eff
    return cfg.detector().efficiency


def cmd_counts(cfg: RunConfig, out: Output):
    spec = cfg.state()
    _efficiency(cfg)
    pts, _ = grid_points(cfg.require("grid"))
    K = cfg.get("K")
    rows, tails = [], []
    for p in pts:
        c = _probe_counts(cfg, spec, p, K)
        tails.append(c.tail)
        rows.extend([p.real, p.imag, n, v] for n, v in enumerate(c.probs))
    out.meta["max_tail"] = max(tails)
    out.block(["re", "im", "n", "p"], rows)


def cmd_simulate(cfg: RunConfig, out: Output):
    """Scan over signal points ``beta``; probe amplitudes follow from the detector."""
    spec = cfg.state()
    eff = _efficiency(cfg)
    s = 1.0 - eff if cfg.get("compensate", False) else _ordering(cfg.get("s", 0.0))
    N = cfg.get("N", 1000)
    if not isinstance(N, int) or isinstance(N, bool) or N < 1:
        raise ConfigError("N must be a positive integer", "N")
    K = cfg.get("K")
    det = None if "efficiency" in cfg.raw else cfg.detector()
    pts, _ = grid_points(cfg.require("grid"))
    q = ordering_ratio(s)
    to_quasi = 2.0 * eff / (np.pi * (1.0 - s))
    ordering = mapped_ordering(s, eff)
    rows = []
    for idx, beta in enumerate(pts):
        if det is None:
            c = counts_at(spec, beta, eff, K=K)
        else:
            c = count_statistics(spec, beta * np.sqrt(det.T / (1.0 - det.T)), det, K=K)
        kernel = q ** np.arange(c.probs.size)
        divergent = bool(s > 0 and check_cauchy(kernel * c.probs))
        if divergent and cfg.strict:
            raise Divergence(f"generating function diverges at point {idx} (beta={beta})")
        mean, var = exact_moments(ExperimentDesign(c.probs, N), EstimatorKernel(kernel))
        h = sample_histogram(c.probs, N, cfg.seed ^ idx)
        mc = float(kernel @ h.frequencies)
        err = np.sqrt(var)
        rows.append([beta.real, beta.imag, ordering, mean, err, mc,
                     to_quasi * mean, to_quasi * err, to_quasi * mc, divergent])
    out.meta["s"] = s
    out.block(["re", "im", "ordering", "pcgf_exact", "pcgf_error", "pcgf_mc",
               "quasi_exact", "quasi_error", "quasi_mc", "divergent"], rows)


def _sweep(cfg: RunConfig, name: str) -> np.ndarray:
    v = cfg.require(name)
    if isinstance(v, list) and len(v) == 3 and isinstance(v[2], int) and not isinstance(v[2], bool):
        return np.linspace(float(v[0]), float(v[1]), v[2])
    if isinstance(v, list) and all(isinstance(x, (int, float)) for x in v):
        return np.array(v, dtype=float)
    raise ConfigError(f"{name} must be [start, stop, num] or a list of numbers", name)


def cmd_stats(cfg: RunConfig, out: Output):
    study = cfg.require("study")
    eta = cfg.number("eta")
    if not 0 < eta <= 1:
        raise ConfigError("eta must lie in (0, 1]", "eta")
    N = cfg.get("N", 4000)
    if not isinstance(N, int) or N < 1:
        raise ConfigError("N must be a positive integer", "N")
    if study == "thermal":
        rows = []
        for nbar in _sweep(cfg, "nbar"):
            r = parity_stats_thermal(nbar, eta, N)
            rows.append([nbar, r.mean_exists, r.mean, r.variance_exists, r.variance])
        out.meta["thresholds"] = {"mean": parity_stats_thermal(0, eta, N).mean_threshold,
                                  "variance": parity_stats_thermal(0, eta, N).variance_threshold}
        out.block(["nbar", "mean_exists", "mean", "variance_exists", "variance"], rows)
    elif study == "coherent":
        rows = [[a2, parity_variance_coherent(np.sqrt(a2), eta, N)] for a2 in _sweep(cfg, "alpha2")]
        out.block(["alpha2", "variance"], rows)
    elif study == "reconstruct":
        spec = cfg.state() if "state" in cfg.raw else Thermal(2.0)
        K = cfg.get("K", 40)
        if not isinstance(K, int) or K < 1:
            raise ConfigError("K must be a positive integer", "K")
        truth = photon_number_distribution(spec, 4 * K + 200)
        detected = bernoulli_loss(truth, eta)[:K + 1]
        R = inverse_bernoulli_matrix(K, eta)
        h = sample_histogram(detected, N, cfg.seed)
        est = R @ h.frequencies
        design = ExperimentDesign(detected, N)
        rows = []
        for nu in range(K + 1):
            kv = EstimatorKernel(R[nu])
            _, var = exact_moments(design, kv)
            corr = None
            if nu < K:
                try:
                    corr = correlation(design, kv, EstimatorKernel(R[nu + 1]))
                except ZeroDivisionError:
                    corr = None
            rows.append([nu, truth[nu], est[nu], np.sqrt(var), corr])
        out.block(["nu", "true", "estimate", "exact_error", "corr_next"], rows)
    else:
        raise ConfigError(f"unknown study {study!r}; use thermal, coherent or reconstruct", "study")


def _x_grid(cfg: RunConfig) -> np.ndarray:
    v = cfg.get("x", [-8.0, 8.0, 801])
    if not isinstance(v, list) or len(v) != 3 or not isinstance(v[2], int) or v[2] < 2:
        raise ConfigError("x must be [start, stop, num] with num >= 2", "x")
    return np.linspace(float(v[0]), float(v[1]), v[2])


def cmd_homodyne(cfg: RunConfig, out: Output):
    spec = cfg.state()
    mode = cfg.get("mode", "reconstruct")
    x = _x_grid(cfg)
    phases = cfg.get("phases", 64)
    if not isinstance(phases, int) or phases < 2:
        raise ConfigError("phases must be an integer >= 2", "phases")
    if mode == "marginals":
        fam = radon_family(spec, phases, x)
        rows = [[t, xv, d] for t, row in zip(fam.thetas, fam.densities) for xv, d in zip(fam.x, row)]
        out.block(["theta", "x", "density"], rows)
    elif mode == "random_phase":
        p = photon_number_distribution(spec, default_dim(spec) - 1)
        out.block(["x", "density"], [[a, b] for a, b in zip(x, random_phase_distribution(p, x))])
    elif mode in ("reconstruct", "double"):
        pts, axes = grid_points(cfg.get("grid", {"kind": "cartesian", "re": [-3, 3, 61]}))
        if axes is None:
            raise ConfigError("homodyne grids must be cartesian", "grid.kind")
        re, im = axes
        if mode == "reconstruct":
            cutoff = cfg.number("cutoff", 8.0)
            if cutoff <= 0:
                raise ConfigError("cutoff must be > 0", "cutoff")
            grid = inverse_radon(radon_family(spec, phases, x), cutoff, re, im)
            exact = _quasi_values(spec, grid.points, 0.0, False)
            out.meta["max_error"] = float(np.max(np.abs(grid.values - exact)))
        else:
            grid = double_homodyne_distribution(_rho(spec), re, im)
        rows = [[a, b, grid.values[i, j]] for i, a in enumerate(re) for j, b in enumerate(im)]
        out.block(["re", "im", "value"], rows, s=grid.s)
    else:
        raise ConfigError(f"unknown mode {mode!r}", "mode")


COMMANDS = {
    "quasi": cmd_quasi,
    "counts": cmd_counts,
    "simulate": cmd_simulate,
    "stats": cmd_stats,
    "homodyne": cmd_homodyne,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="photocount", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "quasi": "evaluate W(alpha; s) on a grid",
        "counts": "photocount distributions at probe points",
        "simulate": "exact and Monte Carlo generating-function scans",
        "stats": "parity-estimator pathologies and inverse-Bernoulli demos",
        "homodyne": "quadrature marginals and tomographic reconstruction",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--strict", action="store_true", help="exit 3 on divergence")
        p.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                       help="override a config entry, dotted keys descend into objects")
    return ap


def _error(kind: str, message: str, key=None):
    sys.stderr.write(json.dumps({"error": kind, "key": key, "message": message}) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, fmt=args.format, out=args.out,
                          strict=args.strict, overrides=args.set)
        out = Output(cfg, args.command)
        COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        _error("config", str(exc), exc.key)
        return EXIT_CONFIG
    except TruncationError as exc:
        _error("truncation", str(exc))
        return EXIT_CONFIG
    except (Divergence, DivergenceError) as exc:
        _error("divergence", str(exc))
        return EXIT_DIVERGENCE
    except ValueError as exc:
        _error("config", str(exc))
        return EXIT_CONFIG
    try:
        out.write()
    except BrokenPipeError:
        # reader went away (e.g. piped into head): silence the final flush
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
