"""Deployment configuration and assembly of a runnable engine.

Everything points at files (catalog CSV, shelf map YAML, prompt templates,
classifier model, scripted-backend fixture); anything left unset falls back
to the packaged defaults under aislebot/data. Secrets never appear here --
API keys come from the environment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .catalog import Catalog, import_catalog
from .classifier import QueryClassifier
from .gateway import Gateway, HTTPBackend, Role, RoleConfig, ScriptedBackend
from .navigation import ShelfMap, load_shelf_map
from .orchestrator import FileEventLog, InMemoryEventLog, Orchestrator
from .retrieval import DEFAULT_DIMENSION, DEFAULT_K, HashingTextEmbedder, build_index

_DATA = resources.files("aislebot") / "data"

DEFAULT_TEMPERATURES = {Role.HIGH: 0.7, Role.MEDIUM: 0.0, Role.LOW: 0.0}


def packaged_text(name: str) -> str:
    return (_DATA / name).read_text(encoding="utf-8")


def default_catalog() -> Catalog:
    catalog, _ = import_catalog(packaged_text("catalog.csv"))
    return catalog


def default_corpus_text() -> str:
    return packaged_text("corpus.csv")


def default_shelf_map() -> ShelfMap:
    return load_shelf_map(packaged_text("shelf_map.yaml"))


def default_tag_rules() -> dict:
    return json.loads(packaged_text("tag_rules.json"))


def default_classifier() -> QueryClassifier:
    return QueryClassifier.from_json(packaged_text("model.json"))


def default_role_configs() -> dict[Role, RoleConfig]:
    return {
        role: RoleConfig(
            role=role,
            system_prompt=packaged_text(f"prompts/{role.value}.txt"),
            temperature=DEFAULT_TEMPERATURES[role],
        )
        for role in Role
    }


def role_configs_from_dir(prompt_dir: str | Path) -> dict[Role, RoleConfig]:
    prompt_dir = Path(prompt_dir)
    return {
        role: RoleConfig(
            role=role,
            system_prompt=(prompt_dir / f"{role.value}.txt").read_text(encoding="utf-8"),
            temperature=DEFAULT_TEMPERATURES[role],
        )
        for role in Role
    }


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8000
    catalog_path: str | None = None
    shelf_map_path: str | None = None
    prompt_dir: str | None = None
    classifier_model_path: str | None = None
    tag_rules_path: str | None = None
    session_dir: str | None = None
    backend: str = "scripted"  # "scripted" or "http"
    scripted_fixture_path: str | None = None
    chat_endpoint: str | None = None
    request_timeout_s: float = 30.0
    retrieval_k: int = DEFAULT_K
    classifier_threshold: float = 0.0
    embedding_dimension: int = DEFAULT_DIMENSION

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def build_orchestrator(config: ServiceConfig) -> tuple[Orchestrator, ShelfMap]:
    if config.catalog_path:
        with open(config.catalog_path, encoding="utf-8") as fh:
            catalog, _ = import_catalog(fh)
    else:
        catalog = default_catalog()

    shelf_map = (
        load_shelf_map(Path(config.shelf_map_path).read_text(encoding="utf-8"))
        if config.shelf_map_path
        else default_shelf_map()
    )

    embedder = HashingTextEmbedder(dimension=config.embedding_dimension)
    index = build_index(catalog, embedder)

    if config.classifier_model_path:
        classifier = QueryClassifier.from_json(Path(config.classifier_model_path).read_text(encoding="utf-8"))
    else:
        classifier = default_classifier()

    role_configs = role_configs_from_dir(config.prompt_dir) if config.prompt_dir else default_role_configs()

    if config.backend == "scripted":
        if not config.scripted_fixture_path:
            raise ValueError("scripted backend requires scripted_fixture_path")
        backend = ScriptedBackend.from_file(config.scripted_fixture_path)
    elif config.backend == "http":
        backend = HTTPBackend(endpoint=config.chat_endpoint, timeout=config.request_timeout_s)
    else:
        raise ValueError(f"unknown backend kind {config.backend!r}")

    tag_rules = (
        json.loads(Path(config.tag_rules_path).read_text(encoding="utf-8"))
        if config.tag_rules_path
        else default_tag_rules()
    )

    event_log = FileEventLog(config.session_dir) if config.session_dir else InMemoryEventLog()
    orchestrator = Orchestrator(
        catalog=catalog,
        index=index,
        embedder=embedder,
        classifier=classifier,
        gateway=Gateway(role_configs, backend),
        event_log=event_log,
        tag_rules=tag_rules,
        retrieval_k=config.retrieval_k,
        confidence_threshold=config.classifier_threshold,
    )
    if config.session_dir:
        orchestrator.restore_sessions()
    return orchestrator, shelf_map
