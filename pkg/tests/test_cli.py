import numpy as np
import pytest

from dipunwrap.cli import main, parse_scenario, UsageError
from dipunwrap.core import wrap
from dipunwrap.datagen import EllipseSpec, gen_sample_b, realized_snr_db
from dipunwrap.io import read_grid, read_manifest, write_grid
from dipunwrap.metrics import rewrap_error


def test_simulate_sample_b(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "sample-b", "--angle", "135", "--seed", "1", "--size", "64", "-o", str(out)]) == 0
    truth, wrapped = read_grid(out / "truth.phz"), read_grid(out / "wrapped.phz")
    assert truth.shape == (64, 64)
    assert np.array_equal(wrapped, wrap(truth))
    row = read_manifest(out / "manifest.txt")[0]
    assert row["generator"] == "sample-b" and row["angle"] == "135.0" and row["truth"] == "truth.phz"


def test_simulate_sample_c_max(tmp_path):
    assert main(["simulate", "sample-c", "--max", "42", "--size", "64", "-o", str(tmp_path)]) == 0
    assert abs(read_grid(tmp_path / "truth.phz").max() - 42) < 1e-12


def test_simulate_sample_e_snr(tmp_path):
    assert main(["simulate", "sample-e", "--snr-db", "15.7", "-o", str(tmp_path)]) == 0
    clean = gen_sample_b(EllipseSpec(crop_angle=135))
    assert abs(realized_snr_db(clean, read_grid(tmp_path / "truth.phz")) - 15.7) < 0.01


def test_simulate_other_generators(tmp_path):
    assert main(["simulate", "sample-d", "--size", "32", "--matrix-size", "7", "-o", str(tmp_path / "d")]) == 0
    assert main(["simulate", "phantom", "--size", "16", "-o", str(tmp_path / "p")]) == 0
    assert main(["simulate", "phasenet-data", "--count", "3", "--size", "32", "-o", str(tmp_path / "n")]) == 0
    rows = read_manifest(tmp_path / "n" / "manifest.txt")
    assert [r["index"] for r in rows] == ["0", "1", "2"]
    w = read_grid(tmp_path / "n" / rows[1]["wrapped"])
    k = read_grid(tmp_path / "n" / rows[1]["wrap_count"])
    assert w.shape == k.shape == (32, 32)


def test_simulate_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "sample-z", "-o", str(tmp_path)])
    assert exc.value.code == 2
    assert main(["simulate", "sample-d", "--matrix-size", "4", "-o", str(tmp_path)]) == 2


@pytest.fixture
def pair(tmp_path):
    truth = gen_sample_b(EllipseSpec(20, 27.5, 15, 0.45, 0), 48, 48)
    write_grid(tmp_path / "truth.phz", truth)
    write_grid(tmp_path / "wrapped.phz", wrap(truth))
    return tmp_path


@pytest.mark.parametrize("method", ["ls", "goldstein", "irls"])
def test_unwrap_classical(pair, method):
    out = pair / f"{method}.phz"
    assert main(["unwrap", "--method", method, "-i", str(pair / "wrapped.phz"), "-o", str(out)]) == 0
    assert rewrap_error(read_grid(out), read_grid(pair / "wrapped.phz")) < 1e-10
    assert (pair / f"{method}.phz.log").exists()


def test_unwrap_itoh_row(tmp_path):
    row = wrap(np.linspace(0, 20, 30))[None, :]
    write_grid(tmp_path / "r.phz", row)
    assert main(["unwrap", "--method", "itoh", "-i", str(tmp_path / "r.phz"), "-o", str(tmp_path / "o.phz")]) == 0
    np.testing.assert_allclose(read_grid(tmp_path / "o.phz")[0], np.linspace(0, 20, 30), atol=1e-9)
    write_grid(tmp_path / "g.phz", np.zeros((3, 3)))
    assert main(["unwrap", "--method", "itoh", "-i", str(tmp_path / "g.phz"), "-o", str(tmp_path / "o.phz")]) == 2


def test_unwrap_pudip_deterministic(pair):
    args = ["unwrap", "--method", "pudip", "--profile", "desk", "--seed", "3", "--iters", "6",
            "--refresh-every", "3", "--eps-min", "0.1", "--eps-max", "10", "-i", str(pair / "wrapped.phz")]
    assert main(args + ["-o", str(pair / "a.phz")]) == 0
    assert main(args + ["-o", str(pair / "b.phz")]) == 0
    assert (pair / "a.phz").read_bytes() == (pair / "b.phz").read_bytes()
    log_a = (pair / "a.phz.log").read_text()
    assert log_a == (pair / "b.phz.log").read_text()
    assert "bounds 0.1 10.0" in log_a


def test_unwrap_data_errors(tmp_path):
    assert main(["unwrap", "--method", "ls", "-i", str(tmp_path / "missing.phz"), "-o", str(tmp_path / "o.phz")]) == 3
    (tmp_path / "bad.phz").write_bytes(b"XXXX0000")
    assert main(["unwrap", "--method", "ls", "-i", str(tmp_path / "bad.phz"), "-o", str(tmp_path / "o.phz")]) == 3


def test_unwrap_numerical_failure(pair):
    # an absurd learning rate makes the loss overflow
    args = ["unwrap", "--method", "pudip", "--iters", "20", "--refresh-every", "10", "-i", str(pair / "wrapped.phz"),
            "-o", str(pair / "x.phz")]
    from dipunwrap import cli

    old = cli.desk_profile
    cli.desk_profile = lambda **kw: old(lr=1e200, **kw)
    try:
        with np.errstate(all="ignore"):
            assert main(args) == 4
    finally:
        cli.desk_profile = old


def test_evaluate(pair, capsys):
    t = str(pair / "truth.phz")
    assert main(["evaluate", "--estimate", t, "--truth", t]) == 0
    header, row = capsys.readouterr().out.strip().splitlines()
    assert header == "scenario,method,rsnr_db,ssim,rewrap_error,seed,wall_ms"
    fields = dict(zip(header.split(","), row.split(",")))
    assert fields["rsnr_db"] == "inf" and float(fields["ssim"]) == 1.0

    truth = read_grid(t)
    write_grid(pair / "shift.phz", truth + 3.0)
    assert main(["evaluate", "--estimate", str(pair / "shift.phz"), "--truth", t, "-o", str(pair / "m.csv")]) == 0
    assert ",inf," in (pair / "m.csv").read_text()


def test_evaluate_fixture(tmp_path):
    truth = np.array([[1.0, 2], [3, 4]])
    write_grid(tmp_path / "t.phz", truth)
    write_grid(tmp_path / "e.phz", truth + np.array([[0.1, -0.1], [0.1, -0.1]]))
    assert main(["evaluate", "--estimate", str(tmp_path / "e.phz"), "--truth", str(tmp_path / "t.phz"),
                 "-o", str(tmp_path / "m.csv")]) == 0
    row = (tmp_path / "m.csv").read_text().splitlines()[1].split(",")
    assert abs(float(row[2]) - 28.750612633917) < 1e-6


def test_evaluate_shape_mismatch(pair):
    write_grid(pair / "small.phz", np.ones((4, 4)))
    assert main(["evaluate", "--estimate", str(pair / "small.phz"), "--truth", str(pair / "truth.phz")]) == 3


SCENARIO = """# desk angle sweep
name=angles
generator=sample-b
sweep=angle
values=0,90,180
methods=ls,irls,goldstein
seeds=1,2,3
size=48
radius_y=20
radius_x=27.5
"""


def test_bench(tmp_path, monkeypatch):
    (tmp_path / "s.txt").write_text(SCENARIO)
    monkeypatch.setenv("PHZ_THREADS", "2")
    assert main(["bench", str(tmp_path / "s.txt"), "-o", str(tmp_path / "a")]) == 0
    lines = (tmp_path / "a" / "angles_table.csv").read_text().splitlines()
    assert lines[0] == "angle,method,seed_1,seed_2,seed_3,mean"
    assert len(lines) == 10
    assert lines[1].startswith("0,ls,inf,inf,inf,inf")
    monkeypatch.setenv("PHZ_THREADS", "1")
    assert main(["bench", str(tmp_path / "s.txt"), "-o", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "angles_table.csv").read_bytes() == (tmp_path / "b" / "angles_table.csv").read_bytes()


def test_bench_errors_recorded(tmp_path):
    text = SCENARIO.replace("methods=ls,irls,goldstein", "methods=itoh").replace("values=0,90,180", "values=0")
    (tmp_path / "s.txt").write_text(text.replace("seeds=1,2,3", "seeds=1"))
    assert main(["bench", str(tmp_path / "s.txt"), "-o", str(tmp_path)]) == 0
    assert "error" in (tmp_path / "angles_table.csv").read_text()
    assert main(["bench", str(tmp_path / "s.txt"), "-o", str(tmp_path), "--strict"]) == 4


def test_scenario_validation():
    with pytest.raises(UsageError):
        parse_scenario("generator=sample-b\nsweep=angle\nvalues=0\nmethods=magic\nseeds=1\n")
    with pytest.raises(UsageError):
        parse_scenario("generator=sample-b\nsweep=angle\nvalues=0\nmethods=ls\nseeds=\n")
    with pytest.raises(UsageError):
        parse_scenario("generator=sample-b\nvalues=0\nmethods=ls\nseeds=1\n")
    sc = parse_scenario(SCENARIO + "iters=50\neps_max=20\n")
    assert sc.options.iters == 50 and sc.options.eps_max == 20.0 and sc.params["size"] == "48"


def test_bench_missing_file(tmp_path):
    assert main(["bench", str(tmp_path / "nope.txt"), "-o", str(tmp_path)]) == 3
