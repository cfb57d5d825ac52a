import csv
import io
import json
import math

import numpy as np
import pytest

from photocount import __version__
from photocount.cli import main
from photocount.config import ConfigError, apply_override, grid_points, load_config, parse_detector
from photocount.direct_scheme import counts_at
from photocount.phasespace import cat_quasi_closed_form
from photocount.states import Fock
from photocount.stats import parity_variance_coherent, sample_histogram


def run(tmp_path, command, config, *extra, capsys=None):
    path = tmp_path / f"{command}.json"
    path.write_text(json.dumps(config))
    return main([command, "--config", str(path), *extra])


def table(text):
    """Comment lines as a dict plus the CSV body as rows of dicts."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(io.StringIO("\n".join(body))))


def output(tmp_path, command, config, *extra):
    out = tmp_path / "out.txt"
    rc = run(tmp_path, command, config, "--out", str(out), *extra)
    assert rc == 0
    return out.read_text()


POINTS = {"kind": "points", "points": [0, 1, [0.5, -0.5]]}


def test_quasi_vacuum_and_coherent_peaks(tmp_path):
    _, rows = table(output(tmp_path, "quasi", {"state": {"type": "vacuum"}, "grid": POINTS}))
    assert float(rows[0]["value"]) == pytest.approx(2 / math.pi, rel=1e-15)
    _, rows = table(output(tmp_path, "quasi", {"state": {"type": "coherent", "alpha": 1}, "grid": POINTS}))
    assert float(rows[1]["value"]) == pytest.approx(2 / math.pi, rel=1e-15)


def test_quasi_cat_orderings(tmp_path):
    cfg = {"state": {"type": "cat", "alpha": [0, 3]}, "orderings": [0, -0.1, -1],
           "grid": {"kind": "cartesian", "re": [-1, 1, 5], "im": [-4, 4, 9]}}
    text = output(tmp_path, "quasi", cfg)
    blocks = text.split("# s=")[1:]
    assert [float(b.splitlines()[0]) for b in blocks] == [0.0, -0.1, -1.0]
    origin = []
    for b in blocks:
        rows = list(csv.DictReader(io.StringIO("\n".join(b.splitlines()[1:]))))
        assert len(rows) == 45
        row = next(r for r in rows if float(r["re"]) == 0 and float(r["im"]) == 0)
        origin.append(float(row["value"]))
    # at the origin only the interference term survives
    for s, v in zip((0, -0.1, -1), origin):
        assert v == pytest.approx(float(cat_quasi_closed_form(3j, 0, s)), rel=1e-12)
    assert origin[1] / origin[0] == pytest.approx(math.exp(2 * -0.1 * 9 / 1.1) / 1.1, rel=1e-6)


def test_positive_ordering_needs_opt_in(tmp_path, capsys):
    cfg = {"state": {"type": "coherent", "alpha": 0.3}, "orderings": [0.2], "grid": POINTS}
    assert run(tmp_path, "quasi", cfg) == 2
    assert json.loads(capsys.readouterr().err)["key"] == "orderings"
    assert run(tmp_path, "quasi", {**cfg, "allow_positive": True}) == 0


def test_json_output_and_provenance(tmp_path):
    cfg = {"state": {"type": "fock", "n": 1}, "grid": POINTS, "seed": 5}
    obj = json.loads(output(tmp_path, "quasi", cfg, "--format", "json"))
    assert set(obj) == {"meta", "data"}
    assert obj["meta"]["version"] == __version__ and obj["meta"]["command"] == "quasi"
    assert obj["meta"]["config"]["state"] == {"type": "fock", "n": 1}
    assert obj["meta"]["config"]["seed"] == 5
    assert obj["data"][0]["s"] == 0.0
    assert obj["data"][0]["rows"][0]["value"] == pytest.approx(-2 / math.pi)


def test_csv_embeds_resolved_config(tmp_path):
    cfg = {"state": {"type": "vacuum"}, "grid": POINTS}
    meta, rows = table(output(tmp_path, "quasi", cfg, "--seed", "9"))
    assert meta["version"] == __version__
    resolved = json.loads(meta["config"])
    assert resolved["seed"] == 9 and resolved["format"] == "csv" and resolved["state"] == {"type": "vacuum"}
    assert "out" not in resolved
    assert list(rows[0]) == ["re", "im", "value"]


def test_counts_subcommand(tmp_path):
    cfg = {"state": {"type": "fock", "n": 1}, "efficiency": 1.0, "grid": {"kind": "points", "points": [3]}}
    meta, rows = table(output(tmp_path, "counts", cfg))
    p = np.array([float(r["p"]) for r in rows])
    assert p[9] == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(p, counts_at(Fock(1), 3, 1.0).probs, atol=0, rtol=0)
    assert float(meta["max_tail"]) < 1e-9


SIM = {"state": {"type": "fock", "n": 1}, "efficiency": 1.0, "N": 1000,
       "grid": {"kind": "points", "points": [0, 0.5, [0, 1]]}, "seed": 12}


def test_simulate_fock_dip(tmp_path):
    _, rows = table(output(tmp_path, "simulate", SIM))
    r0 = rows[0]
    assert float(r0["quasi_exact"]) == pytest.approx(-2 / math.pi, abs=1e-10)
    assert float(r0["ordering"]) == 0.0 and r0["ordering"] == "0.0"
    for r in rows:
        assert float(r["pcgf_error"]) <= 1 / math.sqrt(1000) + 1e-15
        assert abs(float(r["pcgf_mc"]) - float(r["pcgf_exact"])) <= 5 * float(r["pcgf_error"]) + 1e-12
        assert r["divergent"] == "0"


def test_simulate_point_seeds_are_documented(tmp_path):
    _, rows = table(output(tmp_path, "simulate", SIM))
    for idx, b in enumerate([0, 0.5, 1j]):
        c = counts_at(Fock(1), b, 1.0)
        h = sample_histogram(c.probs, 1000, 12 ^ idx)
        assert float(rows[idx]["pcgf_mc"]) == float(((-1.0) ** np.arange(c.probs.size)) @ h.frequencies)


def test_simulate_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(tmp_path, "simulate", SIM, "--out", str(a)) == 0
    assert run(tmp_path, "simulate", SIM, "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    assert run(tmp_path, "simulate", SIM, "--out", str(c), "--seed", "13") == 0
    assert c.read_bytes() != a.read_bytes()


def test_simulate_compensation_error_explodes(tmp_path):
    cfg = {"state": {"type": "coherent", "alpha": 1}, "efficiency": 0.8, "compensate": True, "N": 1000,
           "K": 120, "grid": {"kind": "points", "points": [-2, -2.5, -3, -3.5, -4]}}
    meta, rows = table(output(tmp_path, "simulate", cfg))
    assert float(meta["s"]) == pytest.approx(0.2)
    assert all(float(r["ordering"]) == pytest.approx(0.0, abs=1e-15) for r in rows)
    err = [float(r["quasi_error"]) for r in rows]
    assert np.all(np.diff(err) > 0) and err[-1] / err[0] > 100


def test_simulate_vacuum_error_approaches_inverse_root_n(tmp_path):
    cfg = {"state": {"type": "vacuum"}, "efficiency": 1.0, "N": 8000,
           "grid": {"kind": "polar", "radius": [0, 3, 20], "phases": 40}}
    _, rows = table(output(tmp_path, "simulate", cfg))
    assert len(rows) == 1 + 19 * 40  # the r=0 circle is a single point
    errs = [float(r["pcgf_error"]) for r in rows]
    assert max(errs) == pytest.approx(1.118e-2, abs=1e-5)
    assert float(rows[0]["pcgf_error"]) == 0.0


def test_simulate_with_detector_model(tmp_path):
    cfg = {"state": {"type": "fock", "n": 1}, "detector": {"eta": 0.9, "T": 0.8, "xi": 1.0},
           "N": 500, "grid": {"kind": "points", "points": [0]}}
    _, rows = table(output(tmp_path, "simulate", cfg))
    eff = 0.72
    assert float(rows[0]["ordering"]) == pytest.approx(-(1 - eff) / eff)
    assert float(rows[0]["pcgf_exact"]) == pytest.approx(1 - 2 * eff, abs=1e-10)


def test_divergence_exit_code_in_strict_mode(tmp_path, capsys):
    cfg = {"state": {"type": "thermal", "nbar": 3.0}, "efficiency": 0.8, "compensate": True, "N": 100,
           "grid": {"kind": "points", "points": [0, 0.5]}}
    assert run(tmp_path, "simulate", cfg, "--strict") == 3
    assert json.loads(capsys.readouterr().err)["error"] == "divergence"
    _, rows = table(output(tmp_path, "simulate", cfg))
    assert [r["divergent"] for r in rows] == ["1", "1"]
    tame = {**cfg, "state": {"type": "thermal", "nbar": 0.5}}
    assert run(tmp_path, "simulate", tame, "--strict") == 0


@pytest.mark.parametrize("cfg,key", [
    ({"grid": POINTS}, "state"),
    ({"state": {"type": "unicorn"}, "grid": POINTS}, "state.type"),
    ({"state": {"type": "fock", "n": -1}, "grid": POINTS}, "state"),
    ({"state": {"type": "vacuum"}}, "grid"),
    ({"state": {"type": "vacuum"}, "grid": {"kind": "spiral"}}, "grid.kind"),
    ({"state": {"type": "vacuum"}, "grid": POINTS, "seed": -1}, "seed"),
    ({"state": {"type": "vacuum"}, "grid": POINTS, "format": "xml"}, "format"),
])
def test_config_errors_exit_two(tmp_path, capsys, cfg, key):
    assert run(tmp_path, "quasi", cfg) == 2
    rec = json.loads(capsys.readouterr().err)
    assert rec["error"] == "config" and rec["key"] == key


def test_unreadable_config(tmp_path, capsys):
    assert main(["quasi", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["quasi", "--config", str(bad)]) == 2
    assert "error" in json.loads(capsys.readouterr().err.splitlines()[-1])


def test_detector_needs_exactly_one_overlap():
    with pytest.raises(ConfigError):
        parse_detector({"eta": 0.9, "T": 0.9, "xi": 0.9, "v": 0.9})
    with pytest.raises(ConfigError):
        parse_detector({"eta": 0.9, "T": 0.9})
    det = parse_detector({"eta": 0.8, "T": 0.99, "v": 0.985})
    assert det.xi == pytest.approx(0.9704, abs=1e-4) and det.K is None


def test_grid_kinds():
    pts, axes = grid_points({"kind": "cartesian", "re": [-1, 1, 3], "im": [0, 1, 2]})
    assert pts.size == 6 and axes[0].size == 3
    pts, axes = grid_points({"kind": "polar", "radius": [1, 2, 2], "phases": 4})
    assert axes is None and np.allclose(abs(pts[:4]), 1) and np.allclose(abs(pts[4:]), 2)
    assert pts[1] == pytest.approx(1j)


def test_overrides(tmp_path):
    raw = {"detector": {"eta": 0.9}}
    apply_override(raw, "detector.T=0.5")
    apply_override(raw, "state.type=vacuum")
    assert raw == {"detector": {"eta": 0.9, "T": 0.5}, "state": {"type": "vacuum"}}
    with pytest.raises(ConfigError):
        apply_override(raw, "novalue")
    cfg = load_config(None, overrides=["grid={\"kind\": \"points\", \"points\": [0]}", "state.type=vacuum"])
    assert cfg.raw["grid"]["points"] == [0]
    _, rows = table(output(tmp_path, "quasi", {"state": {"type": "vacuum"}, "grid": POINTS},
                           "--set", "state={\"type\": \"fock\", \"n\": 1}"))
    assert float(rows[0]["value"]) == pytest.approx(-2 / math.pi)


def test_stats_thermal_flags(tmp_path):
    cfg = {"study": "thermal", "eta": 0.8, "N": 4000, "nbar": [0, 3, 31]}
    meta, rows = table(output(tmp_path, "stats", cfg))
    assert json.loads(meta["thresholds"]) == {"mean": pytest.approx(2.5), "variance": pytest.approx(1.0)}
    for r in rows:
        nbar = float(r["nbar"])
        assert (r["variance_exists"] == "1") == (nbar < 1.0 - 1e-9)
        assert (r["mean_exists"] == "1") == (nbar < 2.5 - 1e-9)
        assert (r["variance"] == "") == (r["variance_exists"] == "0")


def test_stats_lossless_all_finite(tmp_path):
    _, rows = table(output(tmp_path, "stats", {"study": "thermal", "eta": 1.0, "nbar": [0, 10, 11]}))
    assert all(r["mean_exists"] == "1" and r["variance_exists"] == "1" for r in rows)


def test_stats_coherent_sweep(tmp_path):
    _, rows = table(output(tmp_path, "stats", {"study": "coherent", "eta": 0.8, "N": 4000, "alpha2": [0, 4, 5]}))
    for r in rows:
        a2 = float(r["alpha2"])
        assert float(r["variance"]) == pytest.approx(parity_variance_coherent(math.sqrt(a2), 0.8, 4000), rel=1e-14)
    assert float(rows[-1]["variance"]) == pytest.approx(0.01365, abs=1e-5)


def test_stats_reconstruction_demo(tmp_path):
    cfg = {"study": "reconstruct", "eta": 0.8, "N": 4000, "K": 30, "seed": 3}
    _, rows = table(output(tmp_path, "stats", cfg))
    assert len(rows) == 31
    corr = [float(r["corr_next"]) for r in rows[3:20]]
    assert max(corr) < 0 and corr[-1] < corr[0]
    assert float(rows[0]["true"]) == pytest.approx(1 / 3)


def test_stats_unknown_study(tmp_path):
    assert run(tmp_path, "stats", {"study": "astrology", "eta": 0.8}) == 2


def test_homodyne_reconstructions(tmp_path):
    vac = {"state": {"type": "vacuum"}, "mode": "reconstruct", "phases": 64, "cutoff": 8}
    meta, rows = table(output(tmp_path, "homodyne", vac))
    assert float(meta["max_error"]) < 5e-3 and len(rows) == 61 * 61
    fock = {"state": {"type": "fock", "n": 1}, "mode": "reconstruct", "phases": 64, "cutoff": 10}
    meta, _ = table(output(tmp_path, "homodyne", fock))
    assert float(meta["max_error"]) < 1e-2


def test_homodyne_random_phase_fock1(tmp_path):
    cfg = {"state": {"type": "fock", "n": 1}, "mode": "random_phase", "x": [-4, 4, 81]}
    _, rows = table(output(tmp_path, "homodyne", cfg))
    x = np.array([float(r["x"]) for r in rows])
    d = np.array([float(r["density"]) for r in rows])
    assert np.max(abs(d - 2 * x**2 * np.exp(-x**2) / math.sqrt(math.pi))) < 1e-14


def test_homodyne_marginals_and_double(tmp_path):
    cfg = {"state": {"type": "vacuum"}, "mode": "marginals", "phases": 4, "x": [-2, 2, 5]}
    _, rows = table(output(tmp_path, "homodyne", cfg))
    assert len(rows) == 20 and list(rows[0]) == ["theta", "x", "density"]
    dbl = {"state": {"type": "vacuum"}, "mode": "double", "grid": {"kind": "cartesian", "re": [-1, 1, 3]}}
    _, rows = table(output(tmp_path, "homodyne", dbl))
    for r in rows:
        q, p = float(r["re"]), float(r["im"])
        assert float(r["value"]) == pytest.approx(math.exp(-(q * q + p * p)) / math.pi, rel=1e-13)
    assert run(tmp_path, "homodyne", {**cfg, "mode": "hologram"}) == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == __version__
