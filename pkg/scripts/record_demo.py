#!/usr/bin/env python3
"""Record the scripted demo fixture under demo/.

Replays every test scenario against a recording backend and merges the
digest-keyed reply tables. The resulting replies.json lets `aislebot serve`
answer those exact dialogues with no model behind it; digests key on message
content only, so the fixture works in any process.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from aislebot.config import (  # noqa: E402
    default_catalog,
    default_classifier,
    default_role_configs,
    default_tag_rules,
)
from aislebot.gateway import Gateway, RecordingBackend  # noqa: E402
from aislebot.orchestrator import Orchestrator  # noqa: E402
from aislebot.retrieval import HashingTextEmbedder, build_index  # noqa: E402
from scenario_defs import build_scenarios, drive_scenario  # noqa: E402


def main():
    catalog = default_catalog()
    embedder = HashingTextEmbedder()
    index = build_index(catalog, embedder)
    table: dict[str, str] = {}

    for scenario in build_scenarios(catalog).values():
        backend = RecordingBackend(scenario.reply_queue())
        orchestrator = Orchestrator(
            catalog=catalog,
            index=index,
            embedder=embedder,
            classifier=default_classifier(),
            gateway=Gateway(default_role_configs(), backend),
            tag_rules=default_tag_rules(),
        )
        drive_scenario(orchestrator, scenario)
        table.update(backend.table)

    demo = ROOT / "demo"
    demo.mkdir(exist_ok=True)
    (demo / "replies.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (demo / "config.json").write_text(json.dumps({
        "listen_host": "127.0.0.1",
        "listen_port": 8765,
        "backend": "scripted",
        "scripted_fixture_path": "demo/replies.json",
    }, indent=2) + "\n", encoding="utf-8")
    print(f"recorded {len(table)} scripted replies -> demo/replies.json")


if __name__ == "__main__":
    main()
