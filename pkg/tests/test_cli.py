import json

import pytest

from atomol.cli import main


def run(tmp_path, *argv):
    code = main([str(a) for a in argv])
    return code


def read_lines(path):
    return path.read_text().splitlines()


def test_basis_csv_bytes(tmp_path):
    out = tmp_path / "basis.csv"
    assert run(tmp_path, "basis", "--n", 2, "-o", out) == 0
    assert read_lines(out) == ["index,n_a,n_g,n_e", "0,2,0,0", "1,0,1,0",
                               "2,0,0,1"]


def test_spectrum_row_count_and_header(tmp_path):
    out = tmp_path / "spec.csv"
    assert run(tmp_path, "spectrum", "--n", 8, "--z", 1.0, "--delta", 0,
               "-o", out) == 0
    lines = read_lines(out)
    assert lines[0] == "index,energy,energy_per_N_rho"
    assert len(lines) == 1 + 15


def test_odd_n_is_usage_error(tmp_path):
    out = tmp_path / "x.csv"
    assert run(tmp_path, "spectrum", "--n", 7, "--z", 1.0, "-o", out) == 2
    assert not out.exists()


def test_missing_required_flag_is_usage_error(tmp_path):
    assert run(tmp_path, "spectrum", "-o", tmp_path / "x.csv") == 2


def test_unknown_subcommand_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_manifest_written_with_resolved_params(tmp_path):
    out = tmp_path / "spec.csv"
    run(tmp_path, "spectrum", "--n", 4, "--z", 0.5, "-o", out)
    manifest = json.loads((tmp_path / "spec.csv.manifest.json").read_text())
    assert manifest["tool"] == "atomol"
    assert manifest["subcommand"] == "spectrum"
    assert manifest["parameters"]["n"] == 4
    assert manifest["parameters"]["z"] == 0.5
    assert manifest["parameters"]["rho"] == 1.0     # default resolved
    assert manifest["wall_time_s"] >= 0
    assert str(out) in manifest["outputs"]


def test_rerun_is_byte_identical(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for out in (a, b):
        run(tmp_path, "sweep", "--n", 20, "--z-min", 1.0, "--z-max", 2.0,
            "--z-steps", 7, "-o", out, "--threads", 4)
    assert a.read_bytes() == b.read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 8, "z": 1.0, "z_min": 0.5, "z_max": 1.5,
                               "z_steps": 5}))
    out1 = tmp_path / "c1.csv"
    run(tmp_path, "sweep", "--config", cfg, "-o", out1)
    assert len(read_lines(out1)) == 1 + 5
    out2 = tmp_path / "c2.csv"
    run(tmp_path, "sweep", "--config", cfg, "--z-steps", 7, "-o", out2)
    assert len(read_lines(out2)) == 1 + 7


def test_sweep_schema(tmp_path):
    out = tmp_path / "sweep.csv"
    run(tmp_path, "sweep", "--n", 12, "--z-min", 0.5, "--z-max", 2.5,
        "--z-steps", 5, "-o", out)
    lines = read_lines(out)
    assert lines[0] == "z,E0,E1,gap,atomic_fraction"
    assert len(lines) == 6
    first = [float(x) for x in lines[1].split(",")]
    assert first[0] == 0.5 and first[3] > 0


def test_raw_units_rescale(tmp_path):
    scaled = tmp_path / "s.csv"
    raw = tmp_path / "r.csv"
    run(tmp_path, "spectrum", "--n", 2, "--z", 1.0, "--rho", 2.0, "-o", scaled)
    run(tmp_path, "spectrum", "--n", 2, "--z", 1.0, "--rho", 2.0,
        "--raw-units", "-o", raw)
    e_scaled = float(read_lines(scaled)[1].split(",")[1])
    e_raw = float(read_lines(raw)[1].split(",")[1])
    assert e_raw == pytest.approx(2.0 * e_scaled, rel=1e-12)


def test_meanfield_schema(tmp_path):
    out = tmp_path / "mf.csv"
    run(tmp_path, "meanfield", "--z-min", 1.8, "--z-max", 2.2, "--z-steps", 9,
        "-o", out)
    lines = read_lines(out)
    assert lines[0] == "z,mu,E,dEdz,d2Edz2,a2,p1,p2"
    assert len(lines) == 10


def test_gap_min_single_row(tmp_path):
    out = tmp_path / "gm.csv"
    run(tmp_path, "gap-min", "--n", 30, "--z-min", 1.2, "--z-max", 2.0,
        "-o", out)
    lines = read_lines(out)
    assert lines[0] == "N,z_N,gap_min"
    n, z_n, gap = lines[1].split(",")
    assert n == "30" and 1.2 < float(z_n) < 2.0 and float(gap) > 0


def test_scaling_outputs_csv_and_fit_report(tmp_path):
    out = tmp_path / "scaling.csv"
    assert run(tmp_path, "scaling", "--n-list", "20,28,40,56,80",
               "--z-min", 1.0, "--z-max", 2.0, "-o", out) == 0
    lines = read_lines(out)
    assert lines[0] == "N,z_N,gap_min"
    assert len(lines) == 6
    fit = json.loads((tmp_path / "scaling.csv.fit.json").read_text())
    assert set(fit) == {"nu", "kappa", "zeta", "gamma", "r2_nu", "r2_zeta"}
    assert fit["nu"] > 0 and fit["zeta"] > 0


def test_fidelity_outputs_csv_and_dip_report(tmp_path):
    out = tmp_path / "fid.csv"
    run(tmp_path, "fidelity", "--n", 20, "--alpha", 0.3, "--z-min", 1.2,
        "--z-max", 2.6, "--z-steps", 29, "-o", out)
    lines = read_lines(out)
    assert lines[0] == "z,F"
    assert len(lines) == 30
    dip = json.loads((tmp_path / "fid.csv.dip.json").read_text())
    assert dip["n"] == 20 and dip["alpha"] == 0.3
    assert 1.2 < dip["dip_z"] < 2.6
    assert 0 < dip["dip_f"] < 1


def test_geophase_schema_and_comparator_nan_past_mixture(tmp_path):
    out = tmp_path / "geo.csv"
    run(tmp_path, "geophase", "--z", 3.0, "--period", 20, "-o", out)
    lines = read_lines(out)
    assert lines[0] == "z,T,lambda_total,lambda_dynamic,lambda_g,berry_linearized"
    row = lines[1].split(",")
    assert row[-1] == "nan"
    assert abs(float(row[4])) < 1e-6


def test_trajectory_schema_and_samples(tmp_path):
    out = tmp_path / "traj.csv"
    run(tmp_path, "trajectory", "--z", 1.0, "--period", 20, "--samples", 41,
        "-o", out)
    lines = read_lines(out)
    assert lines[0] == ("t,phi,re_a,im_a,re_bg,im_bg,re_be,im_be,norm,p1,p2")
    assert len(lines) == 42
    norm = float(lines[-1].split(",")[8])
    assert norm == pytest.approx(1.0, abs=1e-8)


def test_plot_renders_png(tmp_path):
    out = tmp_path / "mf.csv"
    run(tmp_path, "meanfield", "--z-min", 1.5, "--z-max", 2.5, "--z-steps", 11,
        "--plot", "-o", out)
    png = tmp_path / "mf.png"
    assert png.exists() and png.stat().st_size > 1000


def test_plot_spectrum_and_fidelity(tmp_path):
    out = tmp_path / "spec.csv"
    run(tmp_path, "spectrum", "--n", 8, "--z", 1.0, "--plot", "-o", out)
    assert (tmp_path / "spec.png").exists()
    out = tmp_path / "fid.csv"
    run(tmp_path, "fidelity", "--n", 16, "--alpha", 0.2, "--z-min", 1.2,
        "--z-max", 2.6, "--z-steps", 15, "--plot", "-o", out)
    assert (tmp_path / "fid.png").exists()
