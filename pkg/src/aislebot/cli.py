"""Command-line entry points: classifier workflow, route planning, serving."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .catalog import import_catalog
from .classifier import (
    QueryClassifier,
    evaluate,
    read_corpus,
    split_corpus,
    train as train_model,
)
from .config import ServiceConfig, build_orchestrator, default_corpus_text
from .navigation import emit_waypoints, load_shelf_map, route_for_products
from .retrieval import HashingTextEmbedder, build_index, save_index
from .service import create_app


@click.group()
def main():
    """Multi-LLM supermarket assistant toolkit."""


@main.group()
def classify():
    """Train, evaluate, and query the turn classifier."""


@classify.command("train")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False),
              help="Labeled corpus CSV (defaults to the bundled corpus)")
@click.option("--seed", type=int, default=0, show_default=True, help="Shuffle seed for the split")
@click.option("--alpha", type=float, default=1.0, show_default=True, help="Additive smoothing")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def classify_train(corpus_path, seed, alpha, out_path):
    """Split the corpus, fit on the training part, report held-out metrics."""
    text = Path(corpus_path).read_text(encoding="utf-8") if corpus_path else default_corpus_text()
    corpus = read_corpus(text)
    train_set, validation, test = split_corpus(corpus, seed)
    model = train_model(train_set, alpha=alpha)
    Path(out_path).write_text(model.to_json(), encoding="utf-8")
    val_metrics = evaluate(model, validation)
    test_metrics = evaluate(model, test)
    click.echo(json.dumps({
        "trained_on": len(train_set),
        "validation": {"accuracy": val_metrics.accuracy, "f1": val_metrics.f1},
        "test": {"accuracy": test_metrics.accuracy, "f1": test_metrics.f1},
        "model": out_path,
    }, indent=2))


@classify.command("eval")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--permissive", is_flag=True, help="Count alternate labels as correct for accuracy")
def classify_eval(model_path, corpus_path, permissive):
    """Score a saved model against a labeled corpus file."""
    model = QueryClassifier.from_json(Path(model_path).read_text(encoding="utf-8"))
    corpus = read_corpus(Path(corpus_path).read_text(encoding="utf-8"))
    metrics = evaluate(model, corpus, permissive=permissive)
    click.echo(json.dumps(metrics.to_dict(), indent=2))


@classify.command("predict")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--text", required=True)
def classify_predict(model_path, text):
    model = QueryClassifier.from_json(Path(model_path).read_text(encoding="utf-8"))
    result = model.classify(text)
    click.echo(json.dumps({
        "class": result.query_class.value,
        "confidence": result.confidence,
        "scores": {cls.value: score for cls, score in result.scores.items()},
    }, indent=2))


@main.group()
def route():
    """Shelf-route planning for an approved list."""


@route.command("plan")
@click.option("--list", "list_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Final list JSON: {\"lines\": [{\"product_id\": S, \"qty\": N}, ...]}")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--map", "map_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--exact", is_flag=True, help="Exhaustive optimum (10 shelves max) instead of NN+2-opt")
def route_plan(list_path, catalog_path, map_path, exact):
    """Emit the waypoint document for a final list on stdout."""
    final = json.loads(Path(list_path).read_text(encoding="utf-8"))
    product_ids = [line["product_id"] for line in final["lines"]]
    with open(catalog_path, encoding="utf-8") as fh:
        catalog, _ = import_catalog(fh)
    shelf_map = load_shelf_map(Path(map_path).read_text(encoding="utf-8"))
    plan, unroutable = route_for_products(product_ids, catalog, shelf_map, exact=exact)
    for shelf_id, pids in unroutable:
        click.echo(f"unroutable shelf {shelf_id}: {','.join(pids)}", err=True)
    sys.stdout.write(emit_waypoints(plan))


@main.group()
def index():
    """Product embedding index maintenance."""


@index.command("build")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--dimension", type=int, default=256, show_default=True)
def index_build(catalog_path, out_path, dimension):
    with open(catalog_path, encoding="utf-8") as fh:
        catalog, _ = import_catalog(fh)
    built = build_index(catalog, HashingTextEmbedder(dimension=dimension))
    save_index(built, out_path)
    click.echo(f"indexed {len(built)} products (dimension {dimension}) -> {out_path}")


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
def serve(config_path):
    """Run the HTTP service described by a JSON config file."""
    import uvicorn

    config = ServiceConfig.from_file(config_path)
    orchestrator, shelf_map = build_orchestrator(config)
    app = create_app(orchestrator, shelf_map)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="warning")


if __name__ == "__main__":
    main()
