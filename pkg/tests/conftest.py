from __future__ import annotations

import itertools

import pytest

from aislebot.classifier import QueryClassifier
from aislebot.config import (
    default_catalog,
    default_classifier,
    default_corpus_text,
    default_role_configs,
    default_shelf_map,
    default_tag_rules,
)
from aislebot.gateway import Gateway
from aislebot.orchestrator import Orchestrator
from aislebot.retrieval import HashingTextEmbedder, build_index


@pytest.fixture(scope="session")
def fixture_catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def embedder():
    return HashingTextEmbedder()


@pytest.fixture(scope="session")
def fixture_index(fixture_catalog, embedder):
    return build_index(fixture_catalog, embedder)


@pytest.fixture(scope="session")
def bundled_model() -> QueryClassifier:
    return default_classifier()


@pytest.fixture(scope="session")
def shelf_map():
    return default_shelf_map()


@pytest.fixture(scope="session")
def tag_rules():
    return default_tag_rules()


@pytest.fixture(scope="session")
def corpus_text():
    return default_corpus_text()


def fake_clock(start: float = 1000.0, step: float = 1.0):
    counter = itertools.count()
    return lambda: start + step * next(counter)


def fake_ids(prefix: str = "sess"):
    counter = itertools.count(1)
    return lambda: f"{prefix}-{next(counter):04d}"


@pytest.fixture
def make_orchestrator(fixture_catalog, fixture_index, embedder, bundled_model, tag_rules):
    """Factory for deterministic engines: injected clock, sequential ids."""

    def factory(backend, *, event_log=None, catalog=None, index=None,
                classifier=None, render_observer=None, threshold=0.0):
        return Orchestrator(
            catalog=catalog if catalog is not None else fixture_catalog,
            index=index if index is not None else fixture_index,
            embedder=embedder,
            classifier=classifier if classifier is not None else bundled_model,
            gateway=Gateway(default_role_configs(), backend, render_observer=render_observer),
            event_log=event_log,
            tag_rules=tag_rules,
            confidence_threshold=threshold,
            clock=fake_clock(),
            id_factory=fake_ids(),
        )

    return factory
