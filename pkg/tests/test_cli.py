import json

import pytest

from rabi_lab.cli import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main

SWEEP = """
model = "effective"
fixed = { j_tilde = 0.95 }
axes = [ { name = "g_tilde", min = 0.1, max = 0.5, count = 3 } ]
truncation = { schedule = [[0, 20], [0, 30]] }
"""


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("RABI_LAB_CACHE", str(tmp_path / "cache"))


def test_critical(capsys):
    assert main(["critical", "--j-tilde", "0.95"]) == EXIT_OK
    out = capsys.readouterr().out.strip()
    assert out == "g_tilde_c = 0.328684"
    value = float(out.split("=")[1])
    assert abs(value - 0.3287) <= 1e-4


def test_critical_errors_and_a2(capsys):
    assert main(["critical", "--j-tilde", "1.2"]) == EXIT_CONFIG
    assert main(["critical", "--j-tilde", "1.03", "--d-tilde", "1.5"]) == EXIT_OK
    assert "g_tilde_c_lower" in capsys.readouterr().out
    assert main(["critical", "--j-tilde", "0.9", "--d-tilde", "1.0"]) == EXIT_OK
    assert "no NP/SP boundary" in capsys.readouterr().out


def test_sweep_to_file_and_stdout(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text(SWEEP)
    out = tmp_path / "o.csv"
    assert main(["sweep", str(cfg), "--out", str(out), "--workers", "1"]) == EXIT_OK
    text = out.read_text()
    assert text.startswith("g_tilde,phase,")
    assert main(["sweep", str(cfg), "--workers", "2", "--format", "json"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["records"]) == 3
    assert main(["sweep", str(cfg), "--workers", "1", "--no-cache", "--tol", "1e-10",
                 "--out", str(tmp_path / "p.csv")]) == EXIT_OK
    assert (tmp_path / "p.csv").read_text() == text


def test_sweep_config_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(SWEEP + "typo_key = 3\n")
    assert main(["sweep", str(cfg)]) == EXIT_CONFIG
    assert "unknown config keys" in capsys.readouterr().err
    assert main(["sweep", str(tmp_path / "missing.toml")]) == EXIT_CONFIG


def test_sweep_partial_failure_exit_code(tmp_path, monkeypatch):
    from rabi_lab import sweep as sweep_mod

    def boom(*args):
        raise RuntimeError("injected")

    monkeypatch.setattr(sweep_mod, "_numerics", boom)
    cfg = tmp_path / "s.toml"
    cfg.write_text(SWEEP)
    assert main(["sweep", str(cfg), "--workers", "1", "--out", str(tmp_path / "o.csv")]) == EXIT_PARTIAL


def test_wigner_command(tmp_path, capsys):
    cfg = tmp_path / "w.toml"
    cfg.write_text("g = 1.0\ncutoff = 20\ngrid_min = -3.0\ngrid_max = 3.0\ngrid_count = 7\n")
    out = tmp_path / "w.csv"
    assert main(["wigner", str(cfg), "--out", str(out)]) == EXIT_OK
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 1 + 49
    meta = json.loads(capsys.readouterr().err)
    assert meta["min_w"] > -1e-4
    cfg.write_text("g = 1.0\ncolor = 2\n")
    assert main(["wigner", str(cfg)]) == EXIT_CONFIG


def test_figure_command(tmp_path, capsys):
    assert main(["figure", "fig7", "--out", str(tmp_path), "--quick"]) == EXIT_OK
    assert (tmp_path / "fig7.csv").exists()
    assert (tmp_path / "plot_fig7.py").exists()
    assert main(["figure", "fig99", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_cache_commands(tmp_path, capsys):
    cfg = tmp_path / "s.toml"
    cfg.write_text(SWEEP)
    main(["sweep", str(cfg), "--workers", "1", "--out", str(tmp_path / "o.csv")])
    capsys.readouterr()
    assert main(["cache", "stats"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["entries"] == 3
    assert main(["cache", "clear"]) == EXIT_OK
    assert "removed 3 entries" in capsys.readouterr().out
