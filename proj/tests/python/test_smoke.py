import json
import math
import os
from pathlib import Path

import pytest

import resostab

ROOT = Path(os.environ.get("RESOSTAB_SOURCE_DIR", Path(__file__).resolve().parents[2]))
CONFIGS = ROOT / "configs"


def test_planetary_point_from_file():
    res = resostab.run("planetary", CONFIGS / "planetary_point.json")
    assert res.ok, res.message
    assert res.report["point"]["feasible"] is True
    assert res.report["row"]["m"] > 1
    assert "stability.csv" in res.files


def test_config_errors_map_to_exit_code():
    cfg = json.loads((CONFIGS / "planetary_point.json").read_text())
    cfg["not_a_key"] = 1
    res = resostab.run("planetary", cfg, base_dir=str(CONFIGS))
    assert res.exit_code == resostab.CONFIG_ERROR
    assert "not_a_key" in res.message


def test_eps_zero_sentinel():
    res = resostab.run("planetary", CONFIGS / "planetary_eps0.json")
    assert res.ok
    assert res.report["row"]["unbounded"] is True


def test_series_bracket_and_homological_solution():
    omega, T = (2.0, -1.0), 2 * math.pi
    f0 = resostab.Series()
    f0.add_term(1, 0, 0, 0, 0.5)
    f0.add_term(-1, 0, 0, 0, 0.5)
    phi = resostab.homological_solve(f0, omega, T)
    h = resostab.Series()
    h.add_term(0, 0, 1, 0, omega[0])
    h.add_term(0, 0, 0, 1, omega[1])
    br, discarded = resostab.poisson_bracket(phi, h)
    assert discarded == 0.0
    assert len(br + f0) == 0
    text = f0.to_text()
    assert resostab.Series.from_text(text).terms() == f0.terms()


def test_norm_estimators():
    s = resostab.Series()
    s.add_term(1, 1, 0, 0, 1.0)
    s.add_term(-1, -1, 0, 0, 1.0)
    maj = resostab.majorant_norm(s, (0.0, 0.0), (0.1, 0.1), (0.2, 0.2))
    smp = resostab.sample_norm(s, (0.0, 0.0), (0.1, 0.1), (0.2, 0.2), 20000, 3)
    assert maj == pytest.approx(2 * math.exp(0.4))
    assert smp <= maj


def test_recursion_and_convexity():
    d = resostab.nf_recursion(2.0, {"eta0": 1e-7, "f0_norm": 1e-9}, 1.0, 20, 0.5, 0.5, 0.5)
    assert d["loop"]["eta"] == pytest.approx(d["closed"]["eta"], rel=1e-12)
    kappa, K = resostab.convexity_constants(1.0, 1e-3, 3e-4, 4 * math.pi**2, (0.002, 0.001), 0.0)
    assert 0 < kappa <= K
    with pytest.raises(ValueError):
        resostab.convexity_constants(1.0, 1e-3, 3e-4, 4 * math.pi**2, (0.002, 0.001), 0.01)


def test_restricted_integration():
    H1 = resostab.Series.from_file(str(ROOT / "data" / "harmonics_3to1.txt"))
    L0 = (1.0 / 3.0) ** (1.0 / 3.0)
    tr = resostab.integrate_restricted(H1, 0.0, (L0, 0.99 * L0, 0.0, 0.0), 10.0, 0.1, 10)
    assert tr["steps"] == 100
    assert all(L == L0 for L in tr["L"])
    assert tr["max_drift"] < 1e-14
