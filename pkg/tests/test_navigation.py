from __future__ import annotations

import itertools
import math
import random

import pytest

from aislebot.catalog import import_catalog
from aislebot.navigation import (
    RoutePlan,
    ShelfMap,
    ShelfMapError,
    ShelfPose,
    emit_waypoints,
    exact_route,
    load_shelf_map,
    parse_waypoints,
    partition_routable,
    plan_route,
    route_for_products,
    shelves_for,
    two_opt_is_stable,
)

CSV = """id,name,brand,category,price_cents,shelf_id,tags,description
P1,Milk,M,dairy,199,S1,,
P2,Eggs,E,dairy,329,S1,,
P3,Flour,F,baking,219,S2,,
P4,Jam,J,breakfast,275,S3,,
P5,Basket,G,seasonal,999,S99,,
"""


@pytest.fixture(scope="module")
def catalog():
    cat, _ = import_catalog(CSV)
    return cat


def grid_map(points: dict[str, tuple[float, float]], start=(0.0, 0.0)) -> ShelfMap:
    return ShelfMap(start=start, shelves={k: ShelfPose(x, y, 0.0) for k, (x, y) in points.items()})


# ---------------------------------------------------------------------------
# shelf map loading
# ---------------------------------------------------------------------------

GOOD_YAML = """\
start: {x: 0.0, y: 0.0}
shelves:
  S1: {x: 1.0, y: 2.0, yaw: 0.5}
  S2: {x: 3.0, y: 4.0, yaw: -1.0}
"""


def test_load_two_shelf_fixture():
    shelf_map = load_shelf_map(GOOD_YAML)
    assert set(shelf_map.shelves) == {"S1", "S2"}
    assert shelf_map.start == (0.0, 0.0)
    assert shelf_map.shelves["S1"].yaw == 0.5


def test_missing_start_errors():
    with pytest.raises(ShelfMapError, match="start"):
        load_shelf_map("shelves:\n  S1: {x: 1.0, y: 2.0, yaw: 0.0}\n")


def test_yaw_out_of_range():
    with pytest.raises(ShelfMapError, match="yaw out of range"):
        load_shelf_map("start: {x: 0, y: 0}\nshelves:\n  S1: {x: 1, y: 2, yaw: 4.0}\n")


def test_duplicate_shelf_id_rejected():
    doubled = "start: {x: 0, y: 0}\nshelves:\n  S1: {x: 1, y: 2, yaw: 0}\n  S1: {x: 3, y: 4, yaw: 0}\n"
    with pytest.raises(ShelfMapError, match="duplicate"):
        load_shelf_map(doubled)


def test_nonfinite_coordinate_rejected():
    with pytest.raises(ShelfMapError, match="finite"):
        load_shelf_map("start: {x: 0, y: 0}\nshelves:\n  S1: {x: .inf, y: 2, yaw: 0}\n")


def test_error_paths_name_the_key():
    with pytest.raises(ShelfMapError, match="shelves.S1.yaw"):
        load_shelf_map("start: {x: 0, y: 0}\nshelves:\n  S1: {x: 1, y: 2, yaw: oops}\n")


def test_packaged_shelf_map_loads(shelf_map):
    assert len(shelf_map.shelves) == 23
    assert "S99" not in shelf_map


# ---------------------------------------------------------------------------
# shelf extraction
# ---------------------------------------------------------------------------


def test_shelves_grouped_and_deduplicated(catalog):
    grouped = shelves_for(["P1", "P3", "P2"], catalog)
    assert grouped == [("S1", ("P1", "P2")), ("S2", ("P3",))]


def test_shelves_empty_list(catalog):
    assert shelves_for([], catalog) == []


def test_distinct_shelves_stay_distinct(catalog):
    grouped = shelves_for(["P1", "P3", "P4"], catalog)
    assert [s for s, _ in grouped] == ["S1", "S2", "S3"]


def test_partition_reports_unroutable(catalog):
    shelf_map = grid_map({"S1": (1, 0), "S2": (2, 0), "S3": (3, 0)})
    grouped = shelves_for(["P1", "P5"], catalog)
    routable, unroutable = partition_routable(grouped, shelf_map)
    assert [s for s, _ in routable] == ["S1"]
    assert unroutable == [("S99", ("P5",))]


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------


def test_single_shelf_route():
    shelf_map = grid_map({"S1": (3.0, 4.0)})
    plan = plan_route([("S1", ("P1",))], shelf_map)
    assert [w.shelf_id for w in plan.ordered_waypoints] == ["S1"]
    assert plan.total_distance == pytest.approx(5.0, abs=1e-12)  # 3-4-5 triangle
    assert plan.leg_distances == (5.0,)


def test_collinear_shelves_visit_in_order():
    shelf_map = grid_map({"SA": (1.0, 0.0), "SB": (2.0, 0.0), "SC": (3.0, 0.0)})
    plan = plan_route([("SA", ()), ("SB", ()), ("SC", ())], shelf_map)
    assert [w.shelf_id for w in plan.ordered_waypoints] == ["SA", "SB", "SC"]
    assert plan.total_distance == pytest.approx(3.0, abs=1e-12)
    exact = exact_route([("SA", ()), ("SB", ()), ("SC", ())], shelf_map)
    assert [w.shelf_id for w in exact.ordered_waypoints] == ["SA", "SB", "SC"]


def test_exact_route_two_shelves_picks_minimum():
    shelf_map = grid_map({"SA": (10.0, 0.0), "SB": (1.0, 0.0)})
    plan = exact_route([("SA", ()), ("SB", ())], shelf_map)
    assert [w.shelf_id for w in plan.ordered_waypoints] == ["SB", "SA"]
    assert plan.total_distance == pytest.approx(10.0, abs=1e-12)


def test_exact_route_tie_breaks_lexicographically():
    shelf_map = grid_map({"SA": (1.0, 0.0), "SB": (-1.0, 0.0)})
    plan = exact_route([("SA", ()), ("SB", ())], shelf_map)
    assert [w.shelf_id for w in plan.ordered_waypoints] == ["SA", "SB"]


def test_exact_route_size_guard():
    points = {f"S{i:02d}": (float(i), 0.0) for i in range(11)}
    shelf_map = grid_map(points)
    with pytest.raises(ValueError, match="limited to 10"):
        exact_route([(s, ()) for s in points], shelf_map)


def test_unknown_shelf_errors():
    shelf_map = grid_map({"S1": (1.0, 0.0)})
    with pytest.raises(ShelfMapError, match="S9"):
        plan_route([("S9", ())], shelf_map)


def test_empty_plan():
    plan = plan_route([], grid_map({"S1": (1.0, 0.0)}))
    assert plan == RoutePlan((), (), 0.0)


def _random_instance(rng: random.Random, n: int) -> ShelfMap:
    points = {f"S{i:02d}": (rng.uniform(0, 20), rng.uniform(0, 20)) for i in range(n)}
    return grid_map(points, start=(rng.uniform(0, 20), rng.uniform(0, 20)))


def oracle_best_total(shelf_map: ShelfMap) -> float:
    """Independent exhaustive minimum, no shared code with the planner."""
    ids = sorted(shelf_map.shelves)
    best = math.inf
    for order in itertools.permutations(ids):
        prev = shelf_map.start
        total = 0.0
        for shelf_id in order:
            pose = shelf_map.shelves[shelf_id]
            total += math.hypot(pose.x - prev[0], pose.y - prev[1])
            prev = (pose.x, pose.y)
        best = min(best, total)
    return best


def test_heuristic_close_to_oracle_and_stable():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.randint(2, 8)
        shelf_map = _random_instance(rng, n)
        shelf_set = [(s, ()) for s in shelf_map.shelves]
        plan = plan_route(shelf_set, shelf_map)
        best = oracle_best_total(shelf_map)
        assert plan.total_distance <= 1.05 * best + 1e-9
        assert plan.total_distance >= best - 1e-9
        if n <= 3:
            assert plan.total_distance == pytest.approx(best, abs=1e-9)
        assert two_opt_is_stable(plan, shelf_map)
        assert plan.total_distance == pytest.approx(sum(plan.leg_distances), abs=1e-9)
        assert sorted(w.shelf_id for w in plan.ordered_waypoints) == sorted(shelf_map.shelves)


def test_exact_algorithms_agree():
    # plan_route's small-n path is subset DP; exact_route scans permutations.
    # Two independent exact algorithms must produce the same minimum.
    rng = random.Random(5)
    for _ in range(150):
        n = rng.randint(1, 7)
        shelf_map = _random_instance(rng, n)
        shelf_set = [(s, ()) for s in sorted(shelf_map.shelves)]
        assert plan_route(shelf_set, shelf_map).total_distance == pytest.approx(
            exact_route(shelf_set, shelf_map).total_distance, abs=1e-9
        )


def test_heuristic_path_beyond_exact_limit():
    from aislebot.navigation import _distances, _held_karp_order, _path_length

    rng = random.Random(21)
    for _ in range(10):
        n = rng.randint(11, 13)
        shelf_map = _random_instance(rng, n)
        shelf_set = [(s, ()) for s in sorted(shelf_map.shelves)]
        plan = plan_route(shelf_set, shelf_map)
        assert sorted(w.shelf_id for w in plan.ordered_waypoints) == sorted(shelf_map.shelves)
        assert two_opt_is_stable(plan, shelf_map)
        assert plan == plan_route(shelf_set, shelf_map)  # deterministic
        ids = sorted(shelf_map.shelves)
        dist, start_dist = _distances(ids, shelf_map)
        optimal = _path_length(_held_karp_order(ids, dist, start_dist), dist, start_dist)
        assert optimal - 1e-9 <= plan.total_distance <= 1.05 * optimal


def test_total_invariant_under_shelf_relabeling():
    rng = random.Random(13)
    shelf_map = _random_instance(rng, 6)
    shelf_set = [(s, ()) for s in sorted(shelf_map.shelves)]
    baseline = plan_route(shelf_set, shelf_map).total_distance
    relabeled = ShelfMap(
        start=shelf_map.start,
        shelves={f"Z{i}": shelf_map.shelves[s] for i, s in enumerate(sorted(shelf_map.shelves))},
    )
    renamed = plan_route([(s, ()) for s in sorted(relabeled.shelves)], relabeled)
    assert renamed.total_distance == pytest.approx(baseline, abs=1e-9)


# ---------------------------------------------------------------------------
# waypoint documents
# ---------------------------------------------------------------------------


def test_emit_two_waypoints_order_preserved():
    shelf_map = grid_map({"S1": (1.0, 0.0), "S2": (2.0, 0.0)})
    plan = plan_route([("S1", ("P1",)), ("S2", ("P3",))], shelf_map)
    document = emit_waypoints(plan)
    lines = document.strip().splitlines()
    assert len(lines) == 3  # header + 2 records
    parsed = parse_waypoints(document)
    assert parsed.waypoints == plan.ordered_waypoints
    assert parsed.total_distance == plan.total_distance


def test_empty_document_has_header():
    document = emit_waypoints(RoutePlan((), (), 0.0))
    assert document == '{"waypoints":0,"total_distance":0.0}\n'
    parsed = parse_waypoints(document)
    assert parsed.waypoints == ()


def test_route_for_products_excludes_unroutable(catalog):
    shelf_map = grid_map({"S1": (1.0, 0.0), "S2": (2.0, 0.0), "S3": (3.0, 0.0)})
    plan, unroutable = route_for_products(["P1", "P4", "P5"], catalog, shelf_map)
    assert sorted(w.shelf_id for w in plan.ordered_waypoints) == ["S1", "S3"]
    assert unroutable == [("S99", ("P5",))]


# ---------------------------------------------------------------------------
# free-text extraction (alternate mode)
# ---------------------------------------------------------------------------


def test_extract_shelves_from_text_validates_against_map():
    from aislebot.navigation import extract_shelves_from_text

    shelf_map = grid_map({"S1": (1.0, 0.0), "S2": (2.0, 0.0)})
    prompts = []

    def scripted(prompt: str) -> str:
        prompts.append(prompt)
        return '{"shelves":["S2","S1","S2","S9"]}'

    valid, rejected = extract_shelves_from_text("Your list: milk (S1), jam (S2).", scripted, shelf_map)
    assert valid == ["S2", "S1"]  # deduplicated, model order kept
    assert rejected == ["S9"]
    assert "milk (S1)" in prompts[0]


def test_extract_shelves_rejects_malformed_reply():
    from aislebot.navigation import extract_shelves_from_text

    shelf_map = grid_map({"S1": (1.0, 0.0)})
    with pytest.raises(ValueError, match="not valid JSON"):
        extract_shelves_from_text("x", lambda p: "the shelves are S1", shelf_map)
    with pytest.raises(ValueError, match="shelves"):
        extract_shelves_from_text("x", lambda p: '{"aisles":["S1"]}', shelf_map)
