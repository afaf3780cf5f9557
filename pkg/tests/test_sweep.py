import json
import math

import numpy as np
import pytest

from rabi_lab import sweep as sweep_mod
from rabi_lab.analytics import critical_coupling_dimensionless
from rabi_lab.sweep import (
    CSV_COLUMNS,
    Axis,
    ConfigError,
    SweepSpec,
    cache_clear,
    cache_key,
    cache_stats,
    evaluate_point,
    run_sweep,
)

SMALL = """
model = "effective"
fixed = { j_tilde = 0.95 }
axes = [ { name = "g_tilde", min = 0.1, max = 0.6, count = 4 } ]
truncation = { schedule = [[0, 20], [0, 30]] }
"""


@pytest.fixture
def spec():
    return SweepSpec.from_toml(SMALL)


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("RABI_LAB_CACHE", str(tmp_path / "cache"))
    return tmp_path / "cache"


def test_toml_roundtrip(spec):
    again = SweepSpec.from_toml(spec.to_toml())
    assert again == spec
    assert spec.axis_names == ("g_tilde",)
    assert spec.schedule == ((0, 20), (0, 30))


@pytest.mark.parametrize("text,match", [
    ('model = "effective"\nbogus = 1\naxes = []', "unknown config keys"),
    ('model = "magic"\naxes = [{name="g", min=0, max=1, count=2}]', "unknown model"),
    ('model = "effective"\nfixed = {j_tilde = 0.9}\naxes = [{name="g", min=0, max=1, count=2}]',
     "mix of dimensionless"),
    ('model = "effective"\nfixed = {j_tilde = 0.9}\naxes = [{name="g_tilde", min=0, max=1, count=1}]',
     "count >= 2"),
    ('model = "effective"\nfixed = {j_tilde = 0.9}\naxes = [{name="g_tilde", min=0, max=1, count=3, step=1}]',
     "unknown axis keys"),
    ('model = "effective"\nfixed = {j_tilde = 0.9}\naxes = [{name="g_tilde", min=0, max=1, count=3}]\n'
     'truncation = {schedule = [[0, 30], [0, 20]]}', "strictly increasing"),
    ('model = "effective_a2"\nfixed = {j_tilde = 0.9}\naxes = [{name="g_tilde", min=0, max=1, count=3}]',
     "missing parameters"),
    ('model = "effective"\naxes = [', "invalid TOML"),
])
def test_config_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        SweepSpec.from_toml(text)


def test_points_are_row_major():
    spec = SweepSpec(model="effective", axes=(Axis("g_tilde", 0.1, 0.3, 3), Axis("j_tilde", 0.5, 0.9, 2)))
    pts = spec.points()
    assert [(p["g_tilde"], p["j_tilde"]) for p in pts] == [
        (0.1, 0.5), (0.1, 0.9), (0.2, 0.5), (0.2, 0.9), (0.3, 0.5), (0.3, 0.9)]
    assert pts[0]["omega_a"] == 40.0 and pts[0]["omega_q"] == 5.0


def test_cache_key_sensitivity(spec):
    p = spec.points()[0]
    assert cache_key(spec, p) == cache_key(SweepSpec.from_toml(SMALL), dict(p))
    assert cache_key(spec, p) != cache_key(spec, {**p, "g_tilde": p["g_tilde"] + 1e-15})
    tighter = SweepSpec.from_dict({**spec.to_dict(), "tol": 1e-10})
    assert cache_key(spec, p) != cache_key(tighter, p)


def test_evaluate_point_labels_and_values(spec):
    gc = critical_coupling_dimensionless(0.95)
    rec = evaluate_point(spec, {**spec.points()[0], "g_tilde": 0.5})
    assert rec.phase == "SP" and rec.error is None
    assert rec.n_b_analytic == pytest.approx((0.5 * 0.95) ** 2 / (4 * (1 - 0.95**2))
                                             - (1 - 0.95**2) / (4 * (0.5 * 0.95) ** 2))
    assert rec.n_b_numeric > 0 and rec.energy < 0
    rec = evaluate_point(spec, {**spec.points()[0], "g_tilde": gc / 2})
    assert rec.phase == "NP" and rec.n_b_analytic == 0.0
    up = evaluate_point(spec, {**spec.points()[0], "j_tilde": 1.05})
    assert up.phase == "UP" and up.n_b_numeric is None and up.error is None


def test_csv_schema_and_determinism(spec):
    one = run_sweep(spec, workers=1, use_cache=False)
    many = run_sweep(spec, workers=3, use_cache=False)
    text = one.to_csv()
    assert text == many.to_csv()
    assert one.to_json() == many.to_json()
    lines = text.split("\n")
    assert lines[0] == ",".join(("g_tilde",) + CSV_COLUMNS)
    assert lines[-1] == "" and "\r" not in text
    first = lines[1].split(",")
    assert float(first[0]) == 0.1 and first[0] == format(0.1, ".17g")
    assert json.loads(one.to_json())["records"][0]["phase"] == "NP"


def test_poisoned_point_is_isolated(spec, monkeypatch):
    real = sweep_mod._numerics

    def poisoned(s, point, params):
        if math.isclose(point["g_tilde"], spec.points()[2]["g_tilde"]):
            raise RuntimeError("injected failure")
        return real(s, point, params)

    monkeypatch.setattr(sweep_mod, "_numerics", poisoned)
    result = run_sweep(spec, workers=1, use_cache=False)
    assert result.failures == 1
    assert result.records[2].error == "RuntimeError: injected failure"
    assert all(r.error is None and r.n_b_numeric is not None
               for i, r in enumerate(result.records) if i != 2)
    row = result.to_csv().split("\n")[3].split(",")
    assert row[-1] == "RuntimeError: injected failure" and row[3] == ""


def test_cache_hits_are_byte_identical(spec, isolated_cache):
    cold = run_sweep(spec, workers=1)
    assert cache_stats()["entries"] == 4
    warm = run_sweep(spec, workers=1)
    assert warm.to_csv() == cold.to_csv()
    assert warm.to_json() == cold.to_json()
    assert cache_clear() == 4
    assert cache_stats()["entries"] == 0


def test_column_shape():
    spec = SweepSpec(model="effective", axes=(Axis("g_tilde", 0.1, 0.3, 3), Axis("j_tilde", 0.5, 0.9, 2)),
                     observables=("analytic",))
    res = run_sweep(spec, workers=1, use_cache=False)
    col = res.column("n_b_analytic")
    assert col.shape == (3, 2)
    assert np.all(np.isnan(res.column("n_b_numeric")))


def test_anisotropic_and_a2_models_run():
    aniso = SweepSpec.from_toml("""
model = "anisotropic"
hopping_model = "effective"
fixed = { j1 = 2.5, j2 = 3.5 }
axes = [ { name = "g", min = 0.5, max = 3.0, count = 2 } ]
truncation = { schedule = [[0, 40], [0, 60]] }
""")
    res = run_sweep(aniso, workers=1, use_cache=False)
    assert res.failures == 0 and [r.phase for r in res.records] == ["NP", "SP"]
    a2 = SweepSpec.from_toml("""
model = "effective_a2"
fixed = { j_tilde = 1.03, d_tilde = 1.5 }
axes = [ { name = "g_tilde", min = 0.1, max = 1.0, count = 2 } ]
truncation = { schedule = [[0, 60], [0, 90]] }
""")
    res = run_sweep(a2, workers=1, use_cache=False)
    assert [r.phase for r in res.records] == ["UP", "NP"]
    assert res.records[1].n_b_numeric < 0.01
