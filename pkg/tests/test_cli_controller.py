import io
import json
import logging

import pytest

from app.controllers import cli_controller
from app.repositories import artifact_repository

SMALL_GRID = ["--grid-min", "-6", "--grid-max", "6", "--grid-n", "97"]


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    root = logging.getLogger()
    for handler in [h for h in root.handlers if getattr(h, "_tomokit", False)]:
        root.removeHandler(handler)


def invoke(capsys, *argv):
    code = cli_controller.run(list(argv))
    return code, capsys.readouterr().out.strip()


def test_vacuum_wigner_pipeline(artifact_dir, capsys):
    code, state = invoke(capsys, "phantom", "--kind", "vacuum", "--out", "run/state")
    assert code == 0 and state == "run/state.json"
    code, kernel = invoke(capsys, "kernel", "--in", state, "--out", "run/kernel", *SMALL_GRID)
    assert code == 0
    code, wigner = invoke(capsys, "wigner", "--in", kernel, "--out", "run/wigner", *SMALL_GRID)
    assert code == 0
    assert artifact_repository.read_metadata(wigner).source == "kernel.json"

    code, text = invoke(capsys, "report", "--in", wigner)
    assert code == 0
    report = json.loads(text)
    assert report["kind"] == "wigner"
    assert report["relative_l2"] < 1e-2


@pytest.mark.slow
def test_vacuum_tomography_round_trip(artifact_dir, capsys, monkeypatch):
    _, path = invoke(capsys, "phantom", "--kind", "vacuum")
    for argv in (["wigner"], ["quadratures", "--angles", "90"], ["reconstruct-wigner"]):
        monkeypatch.setattr("sys.stdin", io.StringIO(path + "\n"))
        code, path = invoke(capsys, *argv)
        assert code == 0
    monkeypatch.setattr("sys.stdin", io.StringIO(path + "\n"))
    code, text = invoke(capsys, "report")
    assert code == 0
    assert json.loads(text)["relative_l2"] < 0.05


def test_classical_pipeline_through_stdin(artifact_dir, capsys, monkeypatch):
    code, phantom = invoke(capsys, "phantom", "--kind", "phantom", "--out", "ct/phantom", *SMALL_GRID)
    assert code == 0
    assert artifact_repository.read_metadata(phantom).kind == "density"

    monkeypatch.setattr("sys.stdin", io.StringIO(phantom + "\n"))
    code, sinogram = invoke(capsys, "radon", "--angles", "60", "--out", "ct/sinogram", *SMALL_GRID)
    assert code == 0
    monkeypatch.setattr("sys.stdin", io.StringIO("\n" + sinogram + "\n"))
    code, recon = invoke(capsys, "iradon", "--method", "ramp", "--out", "ct/recon", *SMALL_GRID)
    assert code == 0

    code, text = invoke(capsys, "report", "--in", recon)
    report = json.loads(text)
    assert report["truth"].endswith("phantom.json")
    assert report["relative_l2"] < 0.1


def test_quadratures_and_density_matrix(artifact_dir, capsys):
    _, state = invoke(capsys, "phantom", "--kind", "coherent", "--alpha-re", "0.5", "--out", "dm/state")
    code, data = invoke(capsys, "sample", "--in", state, "--angles", "12", "--shots", "2000", "--seed", "3",
                        "--out", "dm/sampled", *SMALL_GRID)
    assert code == 0
    meta = artifact_repository.read_metadata(data)
    assert meta.kind == "quadratures" and meta.provenance == "sampled" and meta.shots == 2000

    code, exact = invoke(capsys, "quadratures", "--in", state, "--angles", "30", "--out", "dm/exact", *SMALL_GRID)
    assert code == 0
    assert artifact_repository.read_metadata(exact).provenance == "exact"
    code, kernel = invoke(capsys, "reconstruct-dm", "--in", exact, "--out", "dm/kernel", *SMALL_GRID)
    assert code == 0
    diagnostics = artifact_repository.read_metadata(kernel).diagnostics
    assert diagnostics["angles_excluded"] == 1


def test_qudit_pipeline(artifact_dir, capsys):
    code, family = invoke(capsys, "qudit-mub", "--d", "5", "--out", "q/mub")
    assert code == 0
    assert artifact_repository.read_metadata(family).diagnostics["flatness_residual"] < 1e-12

    code, probs = invoke(capsys, "qudit-sim", "--d", "3", "--state", "random:4", "--out", "q/probs")
    assert code == 0
    code, recon = invoke(capsys, "qudit-recon", "--in", probs, "--out", "q/recon")
    assert code == 0
    code, text = invoke(capsys, "report", "--in", recon)
    report = json.loads(text)
    assert report["truth"].endswith("probs_truth.json")
    assert report["trace_norm_error"] < 1e-10


def test_fixed_seed_gives_byte_identical_output(artifact_dir, capsys):
    _, state = invoke(capsys, "phantom", "--kind", "thermal", "--nbar", "0.5", "--out", "det/state")
    outputs = []
    for stem in ("det/first", "det/second"):
        code, data = invoke(capsys, "sample", "--in", state, "--angles", "10", "--shots", "500", "--seed", "11",
                            "--out", stem, *SMALL_GRID)
        assert code == 0
        outputs.append((artifact_dir / data).with_suffix(".csv").read_bytes())
    assert outputs[0] == outputs[1]
    _, other = invoke(capsys, "sample", "--in", state, "--angles", "10", "--shots", "500", "--seed", "12",
                      "--out", "det/third", *SMALL_GRID)
    assert (artifact_dir / other).with_suffix(".csv").read_bytes() != outputs[0]


def test_sampled_qudit_with_positivity(artifact_dir, capsys):
    _, probs = invoke(capsys, "qudit-sim", "--d", "2", "--state", "e1", "--shots", "500", "--seed", "1",
                      "--out", "q/probs")
    assert artifact_repository.read_metadata(probs).shots == 500
    code, recon = invoke(capsys, "qudit-recon", "--in", probs, "--positivity", "--out", "q/recon")
    assert code == 0
    state = artifact_repository.read_qudit_state(recon)
    assert state.is_physical()


def test_verify_writes_json(artifact_dir, capsys):
    code, text = invoke(capsys, "verify", "--module", "numerics", "--out", "verify.json")
    assert code == 0
    document = json.loads(text)
    assert all(check["passed"] for check in document["checks"])
    assert json.loads((artifact_dir / "verify.json").read_text(encoding="utf-8")) == document


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["radon", "--angles", "many"],
    ["qudit-mub"],
    ["qudit-mub", "--d", "4"],
    ["phantom", "--kind", "fock", "--grid-min", "3", "--grid-max", "-3"],
    ["phantom", "--kind", "thermal"],
    ["qudit-sim", "--d", "3", "--state", "e7"],
])
def test_bad_arguments_exit_with_two(artifact_dir, capsys, argv):
    assert cli_controller.run(argv) == 2


def test_missing_input_exits_with_two(artifact_dir, capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(""))
    assert cli_controller.run(["kernel"]) == 2
    assert cli_controller.run(["kernel", "--in", "nowhere.json"]) == 2


def test_numerical_failure_exits_with_three(artifact_dir, capsys):
    _, state = invoke(capsys, "phantom", "--kind", "vacuum", "--out", "n/state")
    _, data = invoke(capsys, "quadratures", "--in", state, "--angles", "8", "--out", "n/data", *SMALL_GRID)
    code = cli_controller.run(["reconstruct-dm", "--in", data, "--singular-angles", "reject", *SMALL_GRID])
    assert code == 3


def test_default_output_stem(artifact_dir, capsys):
    code, path = invoke(capsys, "phantom", "--kind", "fock", "--n", "2")
    assert code == 0
    assert path == "artifacts/phantom.json"
    assert (artifact_dir / "artifacts" / "phantom.json").exists()


def test_epsilon_help_names_the_one_spacing_override(capsys):
    code, out = invoke(capsys, "reconstruct-wigner", "--help")
    assert code == 0
    text = " ".join(out.split())
    assert "EPSILON_FACTOR=1" in text
    assert "offset spacing" in text
