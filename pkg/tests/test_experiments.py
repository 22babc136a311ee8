import csv
import io
import json
import time

import numpy as np
import pytest

from hyperfiber import cli
from hyperfiber.errors import CalibrationOutOfRange, InvalidOverride, IoFailure, UnknownExperiment
from hyperfiber.experiments import (
    EXPERIMENTS,
    TABLE1_ANCHOR,
    Anchor,
    ExperimentConfig,
    anchor_model,
    calibrate_channel,
    run_experiment,
    write_result,
)
from hyperfiber.io import SweepRow, emit, read_grid_csv, render_csv, write_grid_csv, write_pgm

SMALL = {
    "fig1": dict(theta_steps=10, phi_steps=10),
    "fig2": dict(theta_steps=10, phi_steps=10),
    "fig3": dict(theta_steps=4, t_max=20, t_step=10),
    "fig4": dict(theta_steps=4, t_max=20, t_step=10),
    "fig5": dict(),
    "fig6": dict(z_max=50),
    "fig8": dict(t_max=20, t_step=10),
    "table1": dict(),
    "table2": dict(),
    "tomography": dict(grid_n=64),
    "chsh": dict(),
}


def read_table(path):
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(body))))
    return comments, rows


def test_every_experiment_runs_quickly(tmp_path):
    assert set(SMALL) == set(EXPERIMENTS)
    start = time.perf_counter()
    for name, over in SMALL.items():
        res = run_experiment(ExperimentConfig(name, **over))
        assert res.rows, name
        for p in write_result(res, tmp_path / f"{name}.csv"):
            assert p.exists()
    assert time.perf_counter() - start < 60


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_reruns_are_byte_identical(tmp_path, name):
    a = write_result(run_experiment(ExperimentConfig(name, **SMALL[name])), tmp_path / "a" / "out.csv")
    b = write_result(run_experiment(ExperimentConfig(name, **SMALL[name])), tmp_path / "b" / "out.csv")
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_fig1_surface(tmp_path):
    res = run_experiment(ExperimentConfig("fig1"))
    c = {(r.variables["theta"], r.variables["phi"]): r.value for r in res.rows if r.metric == "concurrence"}
    assert len(c) == 100 * 100
    top = max(c.values())
    assert top == pytest.approx(1.0, abs=1e-9)
    assert any(abs(v - top) < 1e-9 and abs(ph - np.pi) < 1e-12 for (_, ph), v in c.items())


def test_fig2_panels_cover_requested_grid():
    res = run_experiment(ExperimentConfig("fig2", theta_steps=5, phi_steps=7))
    a = [r for r in res.rows if r.variables["panel"] == "a"]
    b = [r for r in res.rows if r.variables["panel"] == "b"]
    assert len(a) == 2 * 5 * 2  # alphas x thetas x metrics
    assert len(b) == 2 * 7 * 2  # thetas x phis x metrics
    assert all(0 <= r.value <= 1 + 1e-12 for r in res.rows)


def test_fig3_grid_and_noiseless_start():
    res = run_experiment(ExperimentConfig("fig3", thetas=(0.0,), t_max=10, t_step=10))
    f0 = {r.variables["alpha"]: r.value for r in res.rows if r.metric == "fidelity" and r.variables["t"] == 0}
    assert f0 == pytest.approx({0.65: 1.0, 0.707: 1.0, 0.8: 1.0})
    c0 = {r.variables["alpha"]: r.value for r in res.rows if r.metric == "concurrence" and r.variables["t"] == 0}
    assert c0[0.8] == pytest.approx(0.96, abs=1e-9)


def test_fig6_flat_without_splitting():
    res = run_experiment(ExperimentConfig("fig6", delta_n=0.0, theta1=0.5, phi1=0.5))
    f = [r.value for r in res.rows if r.metric == "fidelity"]
    assert max(abs(v - 1) for v in f) < 1e-12
    assert any(abs(r.variables["z_km"] - 95.0) < 1e-9 for r in res.rows)


def test_fig6_flags_period_and_favorable_fraction():
    res = run_experiment(ExperimentConfig("fig6"))
    fl = res.flags
    assert abs(fl["period_km_detected[alpha=0.8]"] - fl["period_km_analytic"]) < 0.1
    assert fl["favorable_fraction[alpha=0.8]"] > fl["favorable_fraction[alpha=0.707]"]


def test_fig8_columns(tmp_path):
    res = run_experiment(ExperimentConfig("fig8", t_max=20, t_step=10))
    path = write_result(res, tmp_path / "fig8.csv")[0]
    _, rows = read_table(path)
    assert list(rows[0]) == ["l", "alpha", "t", "fidelity"]
    assert {(r["l"], r["alpha"]) for r in rows} == {(l, a) for l in ("4", "8", "16") for a in ("0.707", "0.8")}


def test_table1_default_reports_calibration(tmp_path):
    res = run_experiment(ExperimentConfig("table1"))
    assert res.calibration["status"] == "ok"
    assert res.calibration["residual"] < 1e-4
    comments, rows = read_table(write_result(res, tmp_path / "t1.csv")[0])
    assert any(c.startswith("# calibration:") for c in comments)
    cell = [r for r in rows if r["system"] == "qubits4" and r["t"] == "10" and r["alpha"] == "0.707"][0]
    assert float(cell["fidelity"]) == pytest.approx(0.7456, abs=1e-4)
    assert float(cell["reference"]) == 0.7456


def test_table2_ordering():
    res = run_experiment(ExperimentConfig("table2"))
    f = {(r.variables["system"], r.variables["t"], r.variables["alpha"]): r.value
         for r in res.rows if r.metric == "fidelity"}
    for t in (10, 30, 50, 80, 100, 200, 300):
        for a in (0.707, 0.8):
            assert f[("oam:4", t, a)] > f[("oam:8", t, a)] > f[("oam:16", t, a)]


def test_tomography_rows_and_artifacts(tmp_path):
    res = run_experiment(ExperimentConfig("tomography", grid_n=64))
    metrics = {r.metric for r in res.rows}
    assert {"fidelity_reconstruction", "fidelity_noiseless", "weight_plus1", "weight_minus1"} <= metrics
    paths = write_result(res, tmp_path / "tomo.csv")
    names = sorted(p.name for p in paths)
    assert names == sorted(["tomo.csv", "tomo_i1.csv", "tomo_i2.csv", "tomo_real.csv", "tomo_imag.csv",
                            "tomo_i1.pgm", "tomo_i2.pgm"])
    grid, extent = read_grid_csv(tmp_path / "tomo_real.csv")
    assert grid.shape == (64, 64) and extent == pytest.approx(4 * 4.75e-6)


def test_chsh_runner_reports_reference_and_discrepancy():
    res = run_experiment(ExperimentConfig("chsh"))
    vals = {(r.variables["subspace"], r.variables["method"]): r.value for r in res.rows}
    assert vals[("polarization", "pure")] == pytest.approx(2.8284, abs=1e-3)
    assert vals[("any", "optimal")] == pytest.approx(2.7724, abs=1e-3)
    assert vals[("oam", "reference")] == 2.7153
    assert "chsh_oam_discrepancy" in res.flags
    assert res.flags["P1_P2_relation"] == "orthogonal"


def test_chsh_preset_filter():
    res = run_experiment(ExperimentConfig("chsh", chsh_preset="oam"))
    assert not any(r.variables.get("preset") == "pol" for r in res.rows)
    assert any(r.variables.get("preset") == "oam" for r in res.rows)


def test_config_validation():
    with pytest.raises(UnknownExperiment):
        ExperimentConfig("fig7")
    bad = [dict(alpha=(1.5,)), dict(t_step=0), dict(l=(1,)), dict(noise=1.0), dict(fmt="xml"),
           dict(damped=("spin",)), dict(grid_n=4), dict(chsh_preset="x")]
    for over in bad:
        with pytest.raises(InvalidOverride):
            ExperimentConfig("fig3", **over)


def test_config_digest_ignores_output_location():
    a = ExperimentConfig("fig1", out="a.csv")
    b = ExperimentConfig("fig1", out="b.csv", fmt="json")
    assert a.digest() == b.digest()
    assert a.digest() != ExperimentConfig("fig1", seed=1).digest()


# --- calibration -------------------------------------------------------------

def test_calibration_hits_anchor():
    cal = calibrate_channel(TABLE1_ANCHOR)
    assert cal.residual < 1e-4
    assert 1 <= cal.T <= 1e4
    assert cal.time_params.T1 == cal.time_params.T2 == cal.T


def test_calibration_unreachable_anchor():
    with pytest.raises(CalibrationOutOfRange):
        calibrate_channel(Anchor(value=1.0))


def test_calibration_fixed_point():
    target = anchor_model(TABLE1_ANCHOR, 100.0)
    cal = calibrate_channel(Anchor(value=target))
    assert cal.T == pytest.approx(100.0, abs=1e-4)


# --- emission ----------------------------------------------------------------

def test_single_row_csv_layout(tmp_path):
    path = emit([SweepRow({"t": 1.0}, "fidelity", 0.5, {"model": "x"})], "csv", tmp_path / "one.csv",
                {"config_hash": "abc"})
    lines = path.read_text().splitlines()
    comments = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    assert lines[: len(comments)] == comments  # comment block first
    assert body == ["t,fidelity", "1.0,0.5"]
    assert '# flags: {"model": "x"}' in comments


def test_json_mirrors_csv(tmp_path):
    rows = [SweepRow({"t": 1.0}, "fidelity", 0.5, {"model": "x"})]
    doc = json.loads(emit(rows, "json", tmp_path / "one.json", {"config_hash": "abc"}).read_text())
    assert doc["columns"] == ["t", "fidelity"]
    assert doc["flags"] == {"model": "x"}
    assert doc["rows"][0]["value"] == 0.5


def test_emit_errors(tmp_path):
    with pytest.raises(ValueError):
        emit([], "csv", tmp_path / "x.csv")
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IoFailure):
        emit([SweepRow({}, "m", 1.0)], "csv", blocker / "x.csv")


def test_rows_reject_non_finite():
    with pytest.raises(ValueError):
        SweepRow({}, "m", float("nan"))


def test_floats_round_trip_exactly():
    text = render_csv([SweepRow({"x": 0.1 + 0.2}, "v", 1 / 3)], {})
    assert repr(0.1 + 0.2) in text and repr(1 / 3) in text


def test_grid_and_image_files(tmp_path):
    vals = np.arange(12.0).reshape(3, 4)[:, :3]
    write_grid_csv(tmp_path / "g.csv", vals, 2e-5)
    back, ext = read_grid_csv(tmp_path / "g.csv")
    assert np.array_equal(back, vals) and ext == 2e-5
    (tmp_path / "bad.csv").write_text("# 4 1.0\n1,2\n3,4\n")
    with pytest.raises(IoFailure):
        read_grid_csv(tmp_path / "bad.csv")
    data = write_pgm(tmp_path / "i.pgm", vals).read_bytes()
    assert data.startswith(b"P5\n3 3\n255\n") and data[-1] == 255


# --- command line ------------------------------------------------------------

def test_cli_runs_and_prints_paths(tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert cli.main(["chsh", "--out", str(out)]) == 0
    assert str(out) in capsys.readouterr().out
    assert out.exists()


def test_cli_json_format(tmp_path):
    out = tmp_path / "c.json"
    assert cli.main(["fig8", "--t-max", "10", "--t-step", "10", "--l", "4", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["experiment"] == "fig8"
    assert doc["config"]["l"] == [4]


def test_cli_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# reduced sweep\nt-max = 20\nt-step=10\nl = 4,8\nalpha=0.707\n")
    ns = cli.build_parser().parse_args(["fig8", "--config", str(cfg), "--t-max", "30"])
    c = cli.config_from_args(ns)
    assert c.t_max == 30.0 and c.t_step == 10.0
    assert c.l == (4, 8) and c.alpha == (0.707,)


def test_cli_reports_bad_overrides(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("not a pair\n")
    assert cli.main(["fig1", "--config", str(cfg)]) == 2
    assert "InvalidOverride" in capsys.readouterr().err
    assert cli.main(["fig3", "--l", "1", "--out", str(tmp_path / "x.csv")]) == 2
    cfg.write_text("frobnicate = 3\n")
    assert cli.main(["fig1", "--config", str(cfg)]) == 2


def test_cli_calibration_toggle(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["table1", "--no-calibrate", "--out", str(out)]) == 0
    comments, _ = read_table(out)
    assert '# calibration: "none"' in comments


def test_thread_cap_does_not_change_output(tmp_path, monkeypatch):
    monkeypatch.setenv("SIM_THREADS", "1")
    a = write_result(run_experiment(ExperimentConfig("fig5")), tmp_path / "a.csv")[0].read_bytes()
    monkeypatch.setenv("SIM_THREADS", "4")
    b = write_result(run_experiment(ExperimentConfig("fig5")), tmp_path / "b.csv")[0].read_bytes()
    assert a == b
