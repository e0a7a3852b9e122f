import subprocess
import sys

import numpy as np
import pytest

from pat2p.cli import main
from pat2p.io import read_metadata, read_tpf


def test_dump_defaults(capsys):
    assert main(["--dump-defaults"]) == 0
    out = capsys.readouterr().out
    assert "alpha1=1.0" in out and "gamma2=0.1" in out


def test_phantom_writes_four_files(tmp_path):
    assert main(["phantom", "--name", "disk", "--n", "150", "--out-prefix", f"{tmp_path}/p/"]) == 0
    names = sorted(p.name for p in (tmp_path / "p").iterdir())
    assert names == ["D.tpf", "gamma.tpf", "mu.tpf", "sigma.tpf"]
    assert read_tpf(tmp_path / "p" / "sigma.tpf").grid.n == 150


def test_bad_phantom_name_lists_options(tmp_path, capsys):
    assert main(["phantom", "--name", "nosuch", "--out-prefix", f"{tmp_path}/"]) != 0
    assert "disk, heartlung, shepplogan" in capsys.readouterr().err


def test_tiny_grid_rejected(tmp_path, capsys):
    assert main(["phantom", "--n", "2", "--out-prefix", f"{tmp_path}/"]) != 0
    assert "n=2" in capsys.readouterr().err


def test_convergence_levels(tmp_path, capsys):
    assert main(["convergence", "--levels", "10,20"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "N,err,order" and len(lines) == 3
    n1, e1, o1 = lines[1].split(",")
    n2, e2, o2 = lines[2].split(",")
    assert o1 == "" and float(o2) == pytest.approx(np.log2(float(e1) / float(e2)), abs=1e-3)
    assert main(["convergence", "--levels", "12", "--out", str(tmp_path / "c.csv")]) == 0
    assert (tmp_path / "c.csv").read_text().splitlines()[1].endswith(",")


def test_synthesize_validation(tmp_path, capsys):
    assert main(["synthesize", "--n-fine", "100", "--n-coarse", "150", "--out-dir", str(tmp_path)]) != 0
    assert "n_fine" in capsys.readouterr().err


def test_forward(tmp_path):
    assert main(["forward", "--n", "25", "--out-prefix", f"{tmp_path}/f/"]) == 0
    u2 = read_tpf(tmp_path / "f" / "u2.tpf").values
    assert np.all(u2 >= 0) and np.all(u2 <= 2.0 + 1e-12)


def synth_args(out, seed="7"):
    return ["synthesize", "--n-fine", "33", "--n-coarse", "17", "--noise", "0.2", "--seed", seed, "--out-dir", str(out)]


def test_synthesize_and_reconstruct_are_deterministic(tmp_path):
    for run in ("a", "b"):
        assert main(synth_args(tmp_path / run / "data")) == 0
        assert main([
            "reconstruct", "--data-dir", str(tmp_path / run / "data"),
            "--max-iter", "5", "--out-dir", str(tmp_path / run / "rec"), "--set", "write_csv=true",
        ]) == 0
    for rel in ("data/G1.tpf", "data/G2.tpf", "data/metadata.txt", "rec/sigma.tpf", "rec/mu.tpf",
                "rec/trace.csv", "rec/sigma.csv", "rec/config.txt"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel
    meta = read_metadata(tmp_path / "a" / "data" / "metadata.txt")
    assert meta["seed"] == "7" and meta["noise"] == "0.2" and "rng" in meta
    summary = read_metadata(tmp_path / "a" / "rec" / "summary.txt")
    assert summary["iterations"] == "5" and "rel_error_sigma" in summary and "wall_time_s" in summary
    assert "noise=0.2" in (tmp_path / "a" / "data" / "config.txt").read_text()


def test_reconstruct_stationary_dataset(tmp_path):
    from pat2p.forward import picard_solve, pressure_field
    from pat2p.grid import ScalarField, build_grid
    from pat2p.io import write_tpf

    g = build_grid(-1, 1, -1, 1, 15)
    for j, gv in enumerate((1.0, 2.0), 1):
        u, _ = picard_solve(g, 0.01, 0.1, 0.01, gv)
        write_tpf(tmp_path / f"G{j}.tpf", ScalarField(g, pressure_field(1.0, 0.1, 0.01, u)))
    assert main(["reconstruct", "--data-dir", str(tmp_path), "--out-dir", str(tmp_path / "r")]) == 0
    assert read_metadata(tmp_path / "r" / "summary.txt")["iterations"] == "0"


def test_missing_data_file_names_path(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "pat2p.cli", "reconstruct", "--data-dir", str(tmp_path / "void")],
        capture_output=True, text=True,
    )
    assert proc.returncode != 0
    assert str(tmp_path / "void" / "G1.tpf") in proc.stderr
    assert proc.stdout == ""


def test_unknown_set_key(capsys):
    assert main(["convergence", "--set", "bogus=1"]) != 0
    assert "bogus" in capsys.readouterr().err
