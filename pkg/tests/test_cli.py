from __future__ import annotations

import json

import pytest
from click.testing import CliRunner

from aislebot.cli import main
from aislebot.config import ServiceConfig, build_orchestrator, packaged_text
from aislebot.gateway import ScriptedBackend
from aislebot.navigation import parse_waypoints


@pytest.fixture
def runner():
    return CliRunner()


def test_classify_train_eval_predict(tmp_path, runner):
    corpus = tmp_path / "corpus.csv"
    corpus.write_text(packaged_text("corpus.csv"), encoding="utf-8")
    model = tmp_path / "model.json"

    trained = runner.invoke(main, ["classify", "train", "--corpus", str(corpus),
                                   "--seed", "0", "--out", str(model)])
    assert trained.exit_code == 0, trained.output
    report = json.loads(trained.output)
    assert report["trained_on"] == 250
    assert report["test"]["f1"] >= 0.80

    evaluated = runner.invoke(main, ["classify", "eval", "--model", str(model),
                                     "--corpus", str(corpus), "--permissive"])
    assert evaluated.exit_code == 0, evaluated.output
    metrics = json.loads(evaluated.output)
    assert set(metrics) == {"accuracy", "precision", "recall", "f1", "per_class", "confusion"}
    assert 0.8 <= metrics["accuracy"] <= 1.0

    predicted = runner.invoke(main, ["classify", "predict", "--model", str(model),
                                     "--text", "Where can I find the olive oil?"])
    assert predicted.exit_code == 0, predicted.output
    result = json.loads(predicted.output)
    assert result["class"] == "low"
    assert set(result["scores"]) == {"high", "low", "modify", "miscellaneous"}


def test_train_defaults_to_bundled_corpus(tmp_path, runner):
    model = tmp_path / "model.json"
    trained = runner.invoke(main, ["classify", "train", "--out", str(model)])
    assert trained.exit_code == 0, trained.output
    assert model.exists()
    # same seed and corpus as the shipped model: byte-identical artifacts
    assert model.read_text(encoding="utf-8") == packaged_text("model.json")


def test_route_plan_cli(tmp_path, runner):
    catalog = tmp_path / "catalog.csv"
    catalog.write_text(packaged_text("catalog.csv"), encoding="utf-8")
    shelf_map = tmp_path / "map.yaml"
    shelf_map.write_text(packaged_text("shelf_map.yaml"), encoding="utf-8")
    final_list = tmp_path / "final.json"
    final_list.write_text(json.dumps({
        "lines": [{"product_id": "P001", "qty": 1}, {"product_id": "P026", "qty": 2},
                  {"product_id": "P191", "qty": 1}],
        "total_cents": 0,
    }), encoding="utf-8")

    result = runner.invoke(main, ["route", "plan", "--list", str(final_list),
                                  "--catalog", str(catalog), "--map", str(shelf_map)])
    assert result.exit_code == 0, result.output
    document = parse_waypoints(result.stdout)
    assert [w.shelf_id for w in document.waypoints] == ["S01", "S04"]
    assert "unroutable shelf S99" in result.stderr

    exact = runner.invoke(main, ["route", "plan", "--list", str(final_list),
                                 "--catalog", str(catalog), "--map", str(shelf_map), "--exact"])
    assert exact.exit_code == 0
    assert parse_waypoints(exact.stdout).total_distance == pytest.approx(document.total_distance, abs=1e-9)


def test_index_build_cli(tmp_path, runner):
    catalog = tmp_path / "catalog.csv"
    catalog.write_text(packaged_text("catalog.csv"), encoding="utf-8")
    out = tmp_path / "products.idx"
    result = runner.invoke(main, ["index", "build", "--catalog", str(catalog), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert out.stat().st_size > 0


def test_service_config_loader(tmp_path):
    fixture = tmp_path / "replies.json"
    fixture.write_text("{}", encoding="utf-8")
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({
        "listen_port": 9000,
        "backend": "scripted",
        "scripted_fixture_path": str(fixture),
        "classifier_threshold": 0.1,
    }), encoding="utf-8")
    config = ServiceConfig.from_file(config_path)
    assert config.listen_port == 9000
    orchestrator, shelf_map = build_orchestrator(config)
    assert isinstance(orchestrator.gateway.backend, ScriptedBackend)
    assert orchestrator.confidence_threshold == 0.1
    assert len(shelf_map.shelves) == 23
    assert len(orchestrator.catalog) > 150


def test_service_config_rejects_unknown_keys(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text('{"listen_prot": 1}', encoding="utf-8")
    with pytest.raises(ValueError, match="listen_prot"):
        ServiceConfig.from_file(config_path)
