import json
import subprocess
import sys

import numpy as np
import pytest

from tiqc.characterization import NoiseSpectrumModel, synthetic_ramsey
from tiqc.cli import EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_OK, main
from tiqc.noise import NoiseParams
from tiqc.targets import PERMUTATIONS, controlled_permutation

RAMSEY = "%name ramsey\n%qubits 1\nR(0, pi/2)\nIDLE(1000)\nR(0, pi/2)\n"


@pytest.fixture
def seqfile(tmp_path):
    p = tmp_path / "ramsey.seq"
    p.write_text(RAMSEY)
    return p


def test_simulate_json(seqfile, capsys):
    assert main(["simulate", str(seqfile), "--trajectories", "5", "--seed", "2"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["name"] == "ramsey" and d["n_traj"] == 5 and d["seed"] == 2
    rho = np.array(d["density"])
    assert rho.shape == (4, 2)
    assert rho[0, 0] + rho[3, 0] == pytest.approx(1.0)


def test_simulate_is_reproducible_and_csv(seqfile, tmp_path, capsys):
    args = ["simulate", str(seqfile), "--trajectories", "6", "--format", "csv"]
    main(args)
    a = capsys.readouterr().out
    main(args + ["--workers", "2"])
    assert capsys.readouterr().out == a
    assert a.splitlines()[1] == "row,col,real,imag"
    out = tmp_path / "r.csv"
    assert main(args + ["--out", str(out)]) == EXIT_OK
    assert out.read_text() == a


def test_simulate_noiseless_corpus(capsys):
    assert main(["simulate", "corpus:cperm2", "--noise", "none", "--initial", "100", "--trajectories", "1"]) == 0
    d = json.loads(capsys.readouterr().out)
    m = np.array(d["density"])[:, 0].reshape(8, 8)
    out = int(np.argmax(controlled_permutation(PERMUTATIONS["pi2"])[:, 0b100]))
    assert out != 0b100 and np.isclose(m[out, out], 1.0)


def test_invalid_inputs_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.seq"
    bad.write_text("%qubits 1\nR(pi\n")
    assert main(["simulate", str(bad)]) == EXIT_INVALID
    assert "line 2" in capsys.readouterr().err
    assert main(["simulate", str(tmp_path / "missing.seq")]) == EXIT_INVALID
    assert main(["simulate", "corpus:nope"]) == EXIT_INVALID
    assert main(["synthesize", "toffoli"]) == EXIT_INVALID
    assert main(["characterize", "nbar", str(tmp_path / "x.csv")]) == EXIT_INVALID
    bad_noise = tmp_path / "n.cfg"
    bad_noise.write_text("dephasing_rms = -1\n")
    assert main(["simulate", "corpus:cperm2", "--noise", str(bad_noise)]) == EXIT_INVALID


def test_synthesize_identity_and_not_converged(tmp_path, capsys):
    out = tmp_path / "id.seq"
    assert main(["synthesize", "identity:2", "--out", str(out)]) == EXIT_OK
    assert "%qubits 2" in out.read_text()
    cfg = tmp_path / "opt.cfg"
    cfg.write_text("restarts = 1\nmax_rounds = 1\ninitial_length = 1\nalphabet = Sz\n")
    assert main(["synthesize", "cnot", "--config", str(cfg)]) == EXIT_NOT_CONVERGED
    assert "error:" in capsys.readouterr().err


def test_budget(capsys, tmp_path):
    assert main(["budget", "corpus:cperm2", "--sources", "dephasing,decay", "--trajectories", "3",
                 "--format", "csv"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "source,fidelity"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["all", "dephasing", "decay"]
    assert all(0 < float(ln.split(",")[1]) <= 1 for ln in lines[1:])


def test_benchmark_writes_reports(tmp_path, capsys):
    cfg = tmp_path / "suite.cfg"
    cfg.write_text("kitaev_qft = zero\norder_finding = pi2:0\nnoise = none\n")
    out = tmp_path / "reports"
    assert main(["benchmark", str(cfg), "--shots", "200", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "kitaev_qft" in text and "order_finding" in text
    assert len(list(out.glob("*.json"))) == 2


def test_characterize_detection_and_ramsey(tmp_path, capsys):
    cfg = tmp_path / "noise.cfg"
    NoiseParams().save(cfg)
    assert main(["characterize", "detection", str(cfg)]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert 0 < d["error"] < 0.01 and d["threshold"] >= 1

    data = synthetic_ramsey(NoiseSpectrumModel(), np.linspace(0.5e-3, 8e-3, 12))
    path = tmp_path / "ramsey.csv"
    data.save(path)
    assert main(["characterize", "ramsey", str(path), "--format", "csv"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "alpha" in text and "# chi2 =" in text


def test_characterize_nbar(tmp_path, capsys):
    from tiqc.characterization.thermometry import sideband_rabi

    eta_omega0 = 2 * np.pi * 10e3
    t = np.linspace(5e-6, 300e-6, 30)
    p = sideband_rabi(t, 0.3, eta_omega0)
    path = tmp_path / "bsb.csv"
    np.savetxt(path, np.column_stack([t, p]), delimiter=",", header="t,p", comments="")
    assert main(["characterize", "nbar", str(path), "--eta-omega0", str(eta_omega0)]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["nbar"] == pytest.approx(0.3, rel=1e-4)


def test_console_entry_point_runs():
    r = subprocess.run([sys.executable, "-m", "tiqc.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "synthesize" in r.stdout
