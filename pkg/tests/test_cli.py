import json
import subprocess
import sys

import numpy as np
import pytest

from borg2m import io
from borg2m.asymptotics import DecayReport, fit_decay
from borg2m.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, emit_plot_data, main, parse_potential
from borg2m.core import InvalidInputError, Potential
from borg2m.forward import SpectralData
from borg2m.inverse import ReconstructionReport, SpectraTarget
from borg2m.riesz import RieszVerdict


def run(tmp_path, *args):
    out = tmp_path / "out.json"
    code = main([*args, "--output", str(out)])
    return code, out


def test_spectrum_example(tmp_path):
    code, out = run(tmp_path, "spectrum", "--m", "2", "--q", "zero", "--count", "5")
    assert code == EXIT_OK
    obj = json.loads(out.read_text())
    assert obj["spectrum"]["eigenvalues"] == [1, 16, 81, 256, 625]
    assert obj["config"]["m"] == 2 and obj["config"]["command"] == "spectrum"
    sd = SpectralData.from_json(obj["spectrum"])
    assert np.array_equal(sd.eigenvalues, [1, 16, 81, 256, 625])


def test_determinism(tmp_path):
    # the output path is part of the echoed config, so reuse it
    out = tmp_path / "a.json"
    args = ["spectrum", "--m", "1", "--q", "cos:0.1,0.2,-0.1", "--count", "4", "--grid", "512",
            "-o", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert main(args) == 0
    assert out.read_bytes() == first


def test_riesz_command(tmp_path):
    f1, f2 = tmp_path / "f1.json", tmp_path / "f2.json"
    Potential([0, 0.05, 0.02]).save(f1)
    Potential([0.01, 0, 0.03]).save(f2)
    code, out = run(tmp_path, "riesz", "--q1", str(f1), "--q2", str(f2), "--n", "16", "--m", "2",
                    "--plot-data", str(tmp_path / "r.csv"))
    assert code == 0
    obj = json.loads(out.read_text())["verdict"]
    assert obj["verdict"] is True and obj["a"] > 0
    RieszVerdict.from_json(obj)
    head, rows = io.read_csv(tmp_path / "r.csv")
    assert head == ["k", "distance_squared", "cumulative"] and len(rows) == 33


def test_invert_roundtrip(tmp_path):
    t = tmp_path / "t.json"
    assert main(["spectrum", "--m", "2", "--q", "cos:0,0.1,0.05", "--count", "8",
                 "--targets-out", str(t), "-o", str(tmp_path / "s.json")]) == 0
    SpectraTarget.from_json(json.loads(t.read_text()))
    code, out = run(tmp_path, "invert", "--targets", str(t), "--plot-data", str(tmp_path / "h.csv"))
    assert code == 0
    rep = ReconstructionReport.from_json(json.loads(out.read_text())["report"])
    assert rep.converged
    assert np.allclose(rep.q_rec.coeffs[:3], [0, 0.1, 0.05], atol=1e-8)
    head, rows = io.read_csv(tmp_path / "h.csv")
    assert head == ["iteration", "residual"] and rows[0][0] == 0


def test_asymptotics_command(tmp_path):
    code, out = run(tmp_path, "asymptotics", "--m", "1", "--q", "cos:0,0,0.3,0,0.1",
                    "--plot-data", str(tmp_path / "a.csv"))
    assert code == 0
    obj = json.loads(out.read_text())["decay"]
    rep = DecayReport.from_json(obj)
    assert rep.passes
    text = (tmp_path / "a.csv").read_text()
    assert text.startswith("# command:")
    assert "n,residual,fitted" in text


def test_green_command(tmp_path):
    code, out = run(tmp_path, "green", "--m", "2", "--q", "cos:0,0.05", "--n", "2", "--grid", "17",
                    "--plot-data", str(tmp_path / "p.csv"))
    assert code == 0
    obj = json.loads(out.read_text())
    assert abs(obj["trace"][0] - 1) < 1e-5
    _, rows = io.read_csv(tmp_path / "p.csv", header=False)
    assert np.array(rows).shape == (17, 17)


def test_lemmas_command(tmp_path):
    out = tmp_path / "l.csv"
    assert main(["lemmas", "--lemma", "31", "-o", str(out)]) == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "check,x_or_j,m,lhs,rhs,ratio,holds"
    assert len(lines) == 1 + 18 and all(ln.endswith("true") for ln in lines[1:])


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"m": 3, "count": 3, "bc": "dn"}))
    code, out = run(tmp_path, "spectrum", "--config", str(cfg))
    assert code == 0
    obj = json.loads(out.read_text())
    assert obj["config"]["bc"] == "dn"
    assert obj["spectrum"]["eigenvalues"] == pytest.approx([0.5 ** 6, 1.5 ** 6, 2.5 ** 6])
    # flags override the file
    code, out = run(tmp_path, "spectrum", "--config", str(cfg), "--m", "1")
    assert json.loads(out.read_text())["config"]["m"] == 1


def test_input_errors(tmp_path, capsys):
    assert main(["spectrum", "--q", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert main(["spectrum", "--count", "x"]) == EXIT_INPUT
    assert main(["spectrum", "--count", "100", "--n-gal", "64", "--grid", "256"]) == EXIT_INPUT
    assert main(["spectrum", "--grid", "100"]) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"bogus": 1}))
    assert main(["spectrum", "--config", str(bad)]) == EXIT_INPUT
    bad.write_text("{not json")
    assert main(["invert", "--targets", str(bad)]) == EXIT_INPUT
    assert main(["invert"]) == EXIT_INPUT
    assert main([]) == EXIT_INPUT


def test_numerical_failure_writes_diagnostic(tmp_path):
    out = tmp_path / "g.json"
    code = main(["green", "--m", "1", "--q", "const:50", "--n", "3", "--grid", "9", "-o", str(out)])
    assert code == EXIT_NUMERIC
    diag = json.loads((tmp_path / "g.json.diagnostic.json").read_text())
    assert diag["error"] == "ContourLocalizationError"
    assert diag["config"]["n"] == 3


def test_parse_potential_forms(tmp_path):
    assert parse_potential("zero").norm == 0
    assert parse_potential("const:2").coeffs[0] == 2
    assert np.array_equal(parse_potential("cos:0,1,2").coeffs, [0, 1, 2])
    with pytest.raises(InvalidInputError):
        parse_potential("const:abc")


def test_emit_plot_data_kinds(tmp_path):
    rep = fit_decay(np.arange(2, 10), np.arange(2, 10) ** -2.0, False, -2)
    head, rows = io.read_csv(emit_plot_data(rep, tmp_path / "d.csv"))
    assert head == ["n", "residual", "fitted"] and rows[0][0] == 2
    _, rows = io.read_csv(emit_plot_data(np.eye(3), tmp_path / "m.csv"), header=False)
    assert rows == np.eye(3).tolist()
    with pytest.raises(InvalidInputError):
        emit_plot_data("nope", tmp_path / "x.csv")


def test_thread_env_and_module_entry(tmp_path):
    out = tmp_path / "s.json"
    res = subprocess.run([sys.executable, "-m", "borg2m", "spectrum", "--m", "1", "--count", "3",
                          "-o", str(out)], env={"BORG2M_THREADS": "1", "PATH": ""},
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads(out.read_text())["spectrum"]["eigenvalues"] == [1, 4, 9]
