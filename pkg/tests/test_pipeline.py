import filecmp
import json

import numpy as np
import pytest

from qcrit import pipeline
from qcrit.errors import ContractError, NumericalError
from qcrit.pipeline import ExperimentConfig, run_experiment


def _cfg(tmp_path, name="out", **kw):
    d = dict(experiment="single_quench_collapse", sizes=[128, 32, 64], seed=7,
             out_dir=str(tmp_path / name))
    d.update(kw)
    return ExperimentConfig.from_dict(d)


def test_config_validation_and_digest(tmp_path):
    cfg = _cfg(tmp_path)
    assert cfg.sizes == [32, 64, 128]
    assert cfg.digest() == _cfg(tmp_path, "elsewhere", threads=4).digest()
    assert cfg.digest() != _cfg(tmp_path, seed=8).digest()
    with pytest.raises(ContractError):
        _cfg(tmp_path, experiment="figure_9")
    with pytest.raises(ContractError):
        _cfg(tmp_path, model="heisenberg")
    with pytest.raises(ContractError):
        _cfg(tmp_path, sizes=[])
    with pytest.raises(ContractError):
        _cfg(tmp_path, seed=None)
    with pytest.raises(ContractError):
        ExperimentConfig.from_dict({"experiment": "twa_check", "sizes": [1], "seed": 0,
                                    "colour": "blue"})


def test_build_coupling_models():
    assert pipeline.build_coupling("lmg", 5).is_uniform()
    assert pipeline.build_coupling("power_law", 6, 1.0).j[0, 2] == pytest.approx(0.5)
    ion = pipeline.build_coupling("ion_chain", 6)
    assert ion.n == 6
    with pytest.raises(ContractError):
        pipeline.build_coupling("xy", 4)


def test_preflight_checks_pass():
    for exp in pipeline.EXPERIMENTS:
        assert isinstance(pipeline.preflight(exp), list)


def test_bundle_is_deterministic(tmp_path):
    r1 = run_experiment(_cfg(tmp_path, "a"))
    r2 = run_experiment(_cfg(tmp_path, "b"))
    assert r1 == r2
    # the thread count changes scheduling only
    assert run_experiment(_cfg(tmp_path, "c", threads=3)) == r1
    a, b = tmp_path / "a", tmp_path / "b"
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["config_hash"] == _cfg(tmp_path).digest()
    assert "report.json" in manifest["files"] and "series_N64.csv" in manifest["files"]
    assert set(manifest["versions"]) >= {"numpy", "scipy", "python", "qcrit"}
    assert manifest["oracle_checks"] == ["_check_dicke_vs_full", "_check_collapse"]


def test_single_quench_collapse_report(tmp_path):
    cfg = _cfg(tmp_path, sizes=[128, 256, 512, 1024])
    rep = run_experiment(cfg)
    assert rep["collapse"]["alpha"] == pytest.approx(0.5, abs=0.05)
    assert rep["collapse"]["zeta"] == pytest.approx(0.25, abs=0.05)
    assert rep["peak_fit"]["alpha"] == pytest.approx(0.5, abs=0.05)


def test_double_quench_collapse_report(tmp_path):
    rep = run_experiment(_cfg(tmp_path, experiment="double_quench_collapse",
                              sizes=[128, 256, 512, 1024]))
    assert rep["collapse"]["alpha"] == pytest.approx(0.75, abs=0.08)
    assert rep["collapse"]["zeta"] == pytest.approx(0.125, abs=0.05)


def test_refuses_to_report_when_oracle_fails(tmp_path, monkeypatch):
    monkeypatch.setitem(pipeline.ORACLES, "twa_check", [lambda: False])
    with pytest.raises(NumericalError):
        run_experiment(_cfg(tmp_path, experiment="twa_check"))
    assert not (tmp_path / "out" / "report.json").exists()


def test_twa_spinwave_jij_and_order_parameter(tmp_path):
    rep = run_experiment(_cfg(tmp_path, "twa", experiment="twa_check", sizes=[1],
                              options={"samples": 20000, "r": 0.5, "u": 1.0, "d": 0.8}))
    assert abs(rep["z_score"]) < 3
    rep = run_experiment(_cfg(tmp_path, "sw", experiment="spinwave_gap", sizes=[50],
                              model="power_law", p=0.9))
    assert 0.9 <= rep["50"]["b_c"] <= 1.05 and rep["50"]["lambda1_at_bc"] > 0.3
    rep = run_experiment(_cfg(tmp_path, "jij", experiment="jij_profile", sizes=[10],
                              model="ion_chain"))
    assert rep["10"]["power_exp"]["residual"] < rep["10"]["power_law"]["residual"]
    rep = run_experiment(_cfg(tmp_path, "op", experiment="order_parameter", sizes=[20],
                              fields=list(np.arange(0.1, 2.01, 0.1))))
    assert 0.8 <= rep["20"]["b_c"] <= 1.1
    assert (tmp_path / "op" / "order_parameter_N20.csv").exists()


def test_shot_noise_family(tmp_path):
    cfg = _cfg(tmp_path, "shots", model="power_law", p=0.89, sizes=[4, 6, 8], shots=400,
               bitflip_eps=0.05, options={"dt": 0.25, "span": 2.0})
    rep = run_experiment(cfg)
    again = run_experiment(_cfg(tmp_path, "shots2", model="power_law", p=0.89, sizes=[4, 6, 8],
                                shots=400, bitflip_eps=0.05, options={"dt": 0.25, "span": 2.0}))
    assert rep == again
    assert rep["collapse"]["meta"]["weighted"] is True
    with pytest.raises(ContractError):
        run_experiment(_cfg(tmp_path, "bad", shots=10))
