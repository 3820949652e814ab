import itertools
import json
from pathlib import Path

import numpy as np
import pytest

from modmetric import cli, fixtures
from modmetric.core import PointSpace

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

EXPECTED = {
    "axioms": 0,
    "gauges": 0,
    "topology_compare": 0,
    "topology_step": 2,
    "delta2_step": 2,
    "delta2_scaled": 0,
    "cauchy": 0,
    "nets": 0,
    "kr_lipschitz": 0,
    "kr_rademacher": 2,
    "fuzzy": 0,
    "adequacy": 0,
}


@pytest.mark.parametrize("name,code", sorted(EXPECTED.items()))
def test_shipped_configs(tmp_path, name, code):
    assert cli.main(["run", "--config", str(CONFIGS / f"{name}.json"), "--out", str(tmp_path), "--quiet"]) == code
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["report"]["status"] == {0: "pass", 2: "fail", 3: "inconclusive"}[code]
    if code == 2:
        assert rep["report"]["witness"]
    assert "timestamp" not in (tmp_path / "report.json").read_text()
    assert "timestamp" in json.loads((tmp_path / "metadata.json").read_text())


def test_every_experiment_has_a_config():
    named = {json.loads(p.read_text())["experiment"] for p in CONFIGS.glob("*.json")}
    assert named == set(cli.EXPERIMENTS)


def test_missing_config_is_usage_error(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1


def test_missing_input_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "adequacy", "space": {"path": "absent.json"}}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_schema_error_names_field(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "topology_compare", "n_max": "eight"}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "config.n_max" in capsys.readouterr().err
    cfg.write_text(json.dumps({"experiment": "kr", "family": {"generate": "lipschitz"}, "epsilons": [-1]}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "config.epsilons" in capsys.readouterr().err


def test_unknown_experiment(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "plot"}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert cli.main(["run"]) == 1


def test_experiment_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "axioms", "space": {"random": {"n": 5}}}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--experiment", "fuzzy",
                     "--quiet"]) == 0
    assert json.loads((tmp_path / "o" / "report.json").read_text())["experiment"] == "fuzzy"


def test_space_from_file(tmp_path):
    space = PointSpace.from_matrix(np.ones((3, 3)) - np.eye(3))
    (tmp_path / "s.json").write_text(json.dumps(fixtures.space_to_dict(space)))
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "adequacy", "space": {"path": "s.json"}, "subset": [0]}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 2
    rep = json.loads((tmp_path / "o" / "report.json").read_text())["report"]
    assert rep["evidence"]["defect"] == 2.0


def test_family_from_csv(tmp_path):
    a, omega = fixtures.lipschitz(16)
    fixtures.save_family(tmp_path / "fam.csv", a, omega)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "kr", "family": {"csv": "fam.csv"}, "epsilons": [0.1]}))
    assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"]) == 0
    assert (tmp_path / "o" / "net.csv").read_text().startswith("epsilon,member,center,dstar")


def test_inf_is_tokenized(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "delta2", "fixture": "step"}))
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--quiet"])
    text = (tmp_path / "o" / "report.json").read_text()
    assert '"inf"' in text and "Infinity" not in text


@pytest.mark.parametrize("config", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_determinism(tmp_path, config):
    outs = []
    for k in range(2):
        out = tmp_path / str(k)
        cli.main(["run", "--config", str(CONFIGS / config), "--out", str(out), "--seed", "11", "--quiet"])
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "metadata.json"})
    assert outs[0] == outs[1]


def test_seed_changes_random_space(tmp_path):
    reports = []
    for seed in ("1", "2"):
        out = tmp_path / seed
        cli.main(["run", "--config", str(CONFIGS / "gauges.json"), "--out", str(out), "--seed", seed, "--quiet"])
        reports.append((out / "d0.csv").read_text())
    assert reports[0] != reports[1]


# generate

def test_generate_random_metric_reproducible(tmp_path):
    for k in range(2):
        assert cli.main(["generate", "random_metric", "--out", str(tmp_path / str(k)), "--seed", "7",
                         "--param", "n=6"]) == 0
    a, b = [(tmp_path / str(k) / "space.json").read_bytes() for k in range(2)]
    assert a == b
    assert fixtures.load_space(tmp_path / "0" / "space.json").n == 6


def test_generate_rademacher(tmp_path):
    assert cli.main(["generate", "rademacher", "--out", str(tmp_path)]) == 0
    a, omega = fixtures.load_family(tmp_path / "rademacher.csv")
    assert a.shape == (16, 64) and set(np.unique(a)) == {-1.0, 1.0}
    for i, j in itertools.combinations(range(16), 2):
        assert float(np.abs(a[i] - a[j]) @ omega.masses) == 1.0


def test_generate_lipschitz(tmp_path):
    assert cli.main(["generate", "lipschitz", "--out", str(tmp_path), "--param", "n=64"]) == 0
    a, omega = fixtures.load_family(tmp_path / "lipschitz.csv")
    assert a.shape == (11, 64)
    assert np.all(np.diff(a, axis=1) >= 0)


def test_generate_rejects_unknown_param(tmp_path):
    assert cli.main(["generate", "step", "--out", str(tmp_path), "--param", "bogus=1"]) == 1
    assert cli.main(["generate", "rademacher", "--out", str(tmp_path), "--param", "n=60"]) == 1


# fixtures

def test_random_metric_separation():
    s = fixtures.random_metric(8, 3, min_separation=0.1)
    off = s.distance[~np.eye(8, dtype=bool)]
    assert off.min() >= 0.1
    assert np.array_equal(s.distance, fixtures.random_metric(8, 3, min_separation=0.1).distance)


def test_family_csv_roundtrip():
    a = np.random.default_rng(0).normal(size=(3, 5))
    assert np.array_equal(fixtures.family_from_csv(fixtures.family_to_csv(a)), a)
