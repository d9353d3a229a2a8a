import json
import subprocess
import sys

import numpy as np
import pytest

from hdlda.cli import main


@pytest.fixture
def groups(tmp_path):
    rng = np.random.default_rng(0)
    g1 = rng.standard_normal((4, 20)) + np.array([[2.0], [0], [0], [0]])
    g2 = rng.standard_normal((4, 25))
    paths = {}
    for name, data in (("g1", g1), ("g2", g2), ("x", rng.standard_normal((4, 3)))):
        paths[name] = tmp_path / f"{name}.csv"
        np.savetxt(paths[name], data, delimiter=",")
    return paths


def _run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_error_rate_csv(tmp_path, capsys):
    out = tmp_path / "er.csv"
    code, _, _ = _run(["error-rate", "--p", 3, "--n1", 10, "--n2", 10, "--delta-max", 1, "--delta-step", 0.5,
                       "--B", 1000, "--seed", 1, "-o", out, "--deterministic"], capsys)
    assert code == 0
    text = out.read_text()
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == "p,n1,n2,delta,er_population,er_sample,se"
    assert len(lines) == 4
    assert '"seed": 1' in text and '"B": 1000' in text


def test_identical_invocations_are_byte_identical(tmp_path, capsys):
    args = ["error-rate", "--p", 3, "--n1", 10, "--n2", 10, "--delta-max", 1, "--B", 3000, "--deterministic"]
    _, a, _ = _run(args + ["--threads", 1], capsys)
    _, b, _ = _run(args + ["--threads", 3], capsys)
    assert a == b


def test_timestamp_only_without_flag(capsys):
    _, out, _ = _run(["error-rate-asymptotic", "--c", 0.1, "--delta-max", 1], capsys)
    assert "timestamp" in out
    _, out, _ = _run(["error-rate-asymptotic", "--c", 0.1, "--delta-max", 1, "--deterministic"], capsys)
    assert "timestamp" not in out


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("HDLDA_SEED", "123")
    _, out, _ = _run(["dhat-dist", "--p", 3, "--n1", 8, "--n2", 8, "--delta", 1, "--B", 500, "--deterministic"], capsys)
    assert '"seed": 123' in out
    _, out, _ = _run(["dhat-dist", "--p", 3, "--n1", 8, "--n2", 8, "--delta", 1, "--B", 500, "--seed", 5,
                      "--deterministic"], capsys)
    assert '"seed": 5' in out


def test_bad_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("HDLDA_SEED", "abc")
    code, _, err = _run(["reproduce", "fig2"], capsys)
    assert code == 2 and "HDLDA_SEED" in err


def test_test_command_json(groups, capsys):
    code, out, _ = _run(["test", "--data1", groups["g1"], "--data2", groups["g2"], "--i", 1, "--j", 2,
                         "--alpha", 0.05, "--side", "two", "--deterministic"], capsys)
    assert code == 0
    payload = json.loads(out)
    res = payload["result"]
    assert res["dof"] == 45 - 4 - 1 and res["side"] == "two_sided" and res["reject"] is True
    assert payload["meta"]["cli"]["i"] == 1


def test_test_command_one_sided_csv(groups, capsys):
    code, out, _ = _run(["test", "--data1", groups["g1"], "--data2", groups["g2"], "--i", 2, "--j", 3,
                         "--side", "one", "--format", "csv"], capsys)
    assert code == 0 and "one_sided" in out


def test_classify(groups, capsys):
    code, out, _ = _run(["classify", "--data1", groups["g1"], "--data2", groups["g2"], "--x", groups["x"],
                         "--format", "json", "--deterministic"], capsys)
    assert code == 0
    rows = json.loads(out)["result"]
    assert len(rows) == 3 and all(r["group"] == (1 if r["score"] > 0 else 2) for r in rows)


def test_coef_dist(capsys):
    code, out, _ = _run(["coef-dist", "--p", 20, "--n1", 30, "--n2", 30, "--gamma", 0, "--B", 5000,
                         "--seed", 7, "--deterministic"], capsys)
    assert code == 0
    assert "p,n1,n2,x,kde_gamma0,kde_gamma_pos,normal_pdf" in out


def test_svg_output(tmp_path, capsys):
    out = tmp_path / "plot.svg"
    code, _, _ = _run(["error-rate-asymptotic", "--c", 0.1, 0.5, "--format", "svg", "-o", out], capsys)
    assert code == 0
    text = out.read_text()
    assert "<svg" in text and text.count("<polyline") == 2


def test_svg_not_available_for_test(groups, capsys):
    code, _, err = _run(["test", "--data1", groups["g1"], "--data2", groups["g2"], "--i", 1, "--j", 2,
                         "--format", "svg"], capsys)
    assert code == 2 and "plot" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["error-rate", "--p", "50", "--n1", "10", "--n2", "10"],
        ["error-rate", "--p", "3", "--n1", "10"],
        ["error-rate", "--p", "3", "--n1", "10", "--n2", "10", "--bogus"],
        ["nonsense"],
        ["error-rate-asymptotic"],
        ["error-rate-asymptotic", "--c", "0.2", "--gamma", "0.5"],
        ["error-rate-asymptotic", "--c", "1.5"],
        ["reproduce", "fig9"],
        ["test", "--data1", "/nonexistent.csv", "--data2", "/nonexistent.csv", "--i", "1", "--j", "2"],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_bad_contrast(groups, capsys):
    code, _, _ = _run(["test", "--data1", groups["g1"], "--data2", groups["g2"], "--i", 1, "--j", 9], capsys)
    assert code == 2


def test_numerical_failure(tmp_path, capsys):
    # Collinear variables make the pooled covariance singular.
    rng = np.random.default_rng(1)
    base = rng.standard_normal((1, 10))
    singular = np.vstack([base, 2 * base])
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    np.savetxt(p1, singular, delimiter=",")
    np.savetxt(p2, singular + 1, delimiter=",")
    code, _, err = _run(["test", "--data1", p1, "--data2", p2, "--i", 1, "--j", 2], capsys)
    assert code == 1 and "numerical" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "hdlda", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "hdlda" in proc.stdout
