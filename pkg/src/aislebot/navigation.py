"""Turn an approved list into an ordered, distance-optimized shelf route.

Destination ordering only: the metric is straight-line distance between
shelf poses, and the path is open (the robot does not return to its start).
Obstacle-aware planning belongs to the downstream navigation stack, which
works from a pre-recorded map.
"""

from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import yaml

from .catalog import Catalog, get_product

EXACT_ROUTE_LIMIT = 10
_IMPROVEMENT_EPS = 1e-12


class ShelfMapError(Exception):
    """Shelf map file failed validation; message carries the offending key path."""


@dataclass(frozen=True)
class ShelfPose:
    x: float
    y: float
    yaw: float


@dataclass(frozen=True)
class ShelfMap:
    start: tuple[float, float]
    shelves: dict[str, ShelfPose]

    def __contains__(self, shelf_id: str) -> bool:
        return shelf_id in self.shelves


@dataclass(frozen=True)
class Waypoint:
    shelf_id: str
    x: float
    y: float
    yaw: float
    products_here: tuple[str, ...]


@dataclass(frozen=True)
class RoutePlan:
    ordered_waypoints: tuple[Waypoint, ...]
    leg_distances: tuple[float, ...]
    total_distance: float

    def to_dict(self) -> dict:
        return {
            "waypoints": [
                {"shelf_id": w.shelf_id, "x": w.x, "y": w.y, "yaw": w.yaw, "products": list(w.products_here)}
                for w in self.ordered_waypoints
            ],
            "leg_distances": list(self.leg_distances),
            "total_distance": self.total_distance,
        }


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys instead of keeping the last."""


def _construct_mapping(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            raise ShelfMapError(f"duplicate shelf_id {key!r}")
        seen.add(key)
    return yaml.SafeLoader.construct_mapping(loader, node, deep)


_StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _finite(value, path: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ShelfMapError(f"{path}: not a number ({value!r})")
    if not math.isfinite(out):
        raise ShelfMapError(f"{path}: coordinate must be finite")
    return out


def load_shelf_map(source: io.TextIOBase | str) -> ShelfMap:
    """Parse and validate the shelf coordinate file.

    Layout: top-level `start: {x, y}` and `shelves: {<id>: {x, y, yaw}}`;
    yaw must lie in [-pi, pi].
    """
    try:
        data = yaml.load(source, Loader=_StrictLoader)
    except yaml.YAMLError as exc:
        raise ShelfMapError(f"invalid YAML: {exc}")
    if not isinstance(data, dict):
        raise ShelfMapError("shelf map must be a mapping")
    if "start" not in data:
        raise ShelfMapError("start: missing")
    start_raw = data["start"]
    if not isinstance(start_raw, dict) or "x" not in start_raw or "y" not in start_raw:
        raise ShelfMapError("start: must provide x and y")
    start = (_finite(start_raw["x"], "start.x"), _finite(start_raw["y"], "start.y"))

    shelves_raw = data.get("shelves")
    if not isinstance(shelves_raw, dict) or not shelves_raw:
        raise ShelfMapError("shelves: missing or empty")
    shelves: dict[str, ShelfPose] = {}
    for shelf_id, pose in shelves_raw.items():
        key = str(shelf_id)
        if not isinstance(pose, dict):
            raise ShelfMapError(f"shelves.{key}: must be a mapping with x, y, yaw")
        x = _finite(pose.get("x"), f"shelves.{key}.x")
        y = _finite(pose.get("y"), f"shelves.{key}.y")
        yaw = _finite(pose.get("yaw", 0.0), f"shelves.{key}.yaw")
        if not -math.pi <= yaw <= math.pi:
            raise ShelfMapError(f"shelves.{key}.yaw: yaw out of range [-pi, pi] ({yaw})")
        shelves[key] = ShelfPose(x=x, y=y, yaw=yaw)
    return ShelfMap(start=start, shelves=shelves)


# ---------------------------------------------------------------------------
# Shelf extraction
# ---------------------------------------------------------------------------


def shelves_for(product_ids: Sequence[str], catalog: Catalog) -> list[tuple[str, tuple[str, ...]]]:
    """Distinct shelves for the given products, grouped and deduplicated.

    Deterministic pre-optimization order: ascending shelf_id, products
    within a shelf in input order.
    """
    grouped: dict[str, list[str]] = {}
    for pid in product_ids:
        product = get_product(catalog, pid)
        grouped.setdefault(product.shelf_id, [])
        if pid not in grouped[product.shelf_id]:
            grouped[product.shelf_id].append(pid)
    return [(shelf_id, tuple(grouped[shelf_id])) for shelf_id in sorted(grouped)]


def partition_routable(
    shelf_set: Sequence[tuple[str, tuple[str, ...]]], shelf_map: ShelfMap
) -> tuple[list[tuple[str, tuple[str, ...]]], list[tuple[str, tuple[str, ...]]]]:
    """Split grouped shelves into mappable and unroutable (absent from the map)."""
    routable = [(s, pids) for s, pids in shelf_set if s in shelf_map]
    unroutable = [(s, pids) for s, pids in shelf_set if s not in shelf_map]
    return routable, unroutable


# ---------------------------------------------------------------------------
# Route optimization
# ---------------------------------------------------------------------------


def _build_plan(order: Sequence[str], groups: dict[str, tuple[str, ...]], shelf_map: ShelfMap) -> RoutePlan:
    waypoints = []
    legs = []
    prev = shelf_map.start
    for shelf_id in order:
        pose = shelf_map.shelves[shelf_id]
        legs.append(math.dist(prev, (pose.x, pose.y)))
        waypoints.append(Waypoint(shelf_id, pose.x, pose.y, pose.yaw, groups[shelf_id]))
        prev = (pose.x, pose.y)
    return RoutePlan(tuple(waypoints), tuple(legs), sum(legs))


def _path_length(order: Sequence[str], dist: dict, start_dist: dict) -> float:
    if not order:
        return 0.0
    total = start_dist[order[0]]
    for a, b in zip(order, order[1:]):
        total += dist[a, b]
    return total


def _distances(shelf_ids: Sequence[str], shelf_map: ShelfMap) -> tuple[dict, dict]:
    points = {s: (shelf_map.shelves[s].x, shelf_map.shelves[s].y) for s in shelf_ids}
    dist = {(a, b): math.dist(points[a], points[b]) for a in shelf_ids for b in shelf_ids}
    start_dist = {s: math.dist(shelf_map.start, points[s]) for s in shelf_ids}
    return dist, start_dist


def _nearest_neighbor_order(shelf_ids: Sequence[str], dist: dict, first: str) -> list[str]:
    remaining = sorted(shelf_ids)
    remaining.remove(first)
    order = [first]
    while remaining:
        nxt = min(remaining, key=lambda s: (dist[order[-1], s], s))
        order.append(nxt)
        remaining.remove(nxt)
    return order


def _two_opt_pass(order: list[str], dist: dict, start_dist: dict) -> bool:
    # Open path with a fixed start: reversing order[i..j] rewires the edge
    # into position i and, when j is not the tail, the edge out of j.
    n = len(order)
    improved = False
    for i in range(n - 1):
        before = start_dist[order[i]] if i == 0 else dist[order[i - 1], order[i]]
        for j in range(i + 1, n):
            entering = start_dist[order[j]] if i == 0 else dist[order[i - 1], order[j]]
            if j < n - 1:
                delta = (entering + dist[order[i], order[j + 1]]) - (before + dist[order[j], order[j + 1]])
            else:
                delta = entering - before
            if delta < -_IMPROVEMENT_EPS:
                order[i:j + 1] = reversed(order[i:j + 1])
                improved = True
                before = start_dist[order[i]] if i == 0 else dist[order[i - 1], order[i]]
    return improved


def _or_opt_pass(order: list[str], dist: dict, start_dist: dict) -> bool:
    # Relocate short segments (1-3 shelves). 2-opt alone leaves open-path
    # local optima several percent off; or-opt moves escape the common ones.
    n = len(order)
    base = _path_length(order, dist, start_dist)
    for length in (1, 2, 3):
        for i in range(n - length + 1):
            segment = order[i:i + length]
            rest = order[:i] + order[i + length:]
            for k in range(len(rest) + 1):
                if k == i:
                    continue
                candidate = rest[:k] + segment + rest[k:]
                if _path_length(candidate, dist, start_dist) < base - _IMPROVEMENT_EPS:
                    order[:] = candidate
                    return True
    return False


def _local_search(order: list[str], dist: dict, start_dist: dict) -> list[str]:
    """Alternate 2-opt and or-opt until neither finds an improving move, so
    the result is in particular stable under single 2-opt swaps."""
    while True:
        improved = _two_opt_pass(order, dist, start_dist)
        if _or_opt_pass(order, dist, start_dist):
            improved = True
        if not improved:
            return order


def _held_karp_order(shelf_ids: Sequence[str], dist: dict, start_dist: dict) -> list[str]:
    """Exact open-path minimum by subset dynamic programming, O(n^2 * 2^n).

    Deliberately a different algorithm from exact_route's permutation scan,
    so the two exact paths cross-check each other in the test suite.
    """
    n = len(shelf_ids)
    # best[(visited_mask, last)] = (cost, predecessor)
    best: dict[tuple[int, int], tuple[float, int]] = {
        (1 << i, i): (start_dist[shelf_ids[i]], -1) for i in range(n)
    }
    for mask in range(1, 1 << n):
        for last in range(n):
            state = best.get((mask, last))
            if state is None or not mask & (1 << last):
                continue
            cost = state[0]
            for nxt in range(n):
                if mask & (1 << nxt):
                    continue
                key = (mask | (1 << nxt), nxt)
                candidate = cost + dist[shelf_ids[last], shelf_ids[nxt]]
                if key not in best or candidate < best[key][0]:
                    best[key] = (candidate, last)
    full = (1 << n) - 1
    last = min(range(n), key=lambda i: (best[(full, i)][0], shelf_ids[i]))
    order_rev = []
    mask = full
    while last != -1:
        order_rev.append(shelf_ids[last])
        mask, last = mask ^ (1 << last), best[(mask, last)][1]
    return list(reversed(order_rev))


def plan_route(shelf_set: Sequence[tuple[str, tuple[str, ...]]], shelf_map: ShelfMap) -> RoutePlan:
    """Distance-optimized visit order for the given shelves.

    Shelf counts up to 10 are solved exactly (subset DP; milliseconds at
    that size), which also makes the small-case optimality guarantees
    unconditional. Larger inputs fall back to nearest-neighbour
    construction -- one restart per candidate first shelf -- refined by
    2-opt and or-opt until no move improves.
    """
    groups = dict(shelf_set)
    unknown = [s for s in groups if s not in shelf_map]
    if unknown:
        raise ShelfMapError(f"unknown shelf ids: {sorted(unknown)}")
    if not groups:
        return RoutePlan((), (), 0.0)
    shelf_ids = sorted(groups)
    dist, start_dist = _distances(shelf_ids, shelf_map)
    if len(shelf_ids) <= EXACT_ROUTE_LIMIT:
        return _build_plan(_held_karp_order(shelf_ids, dist, start_dist), groups, shelf_map)
    best_order: list[str] | None = None
    best_length = math.inf
    for first in shelf_ids:
        order = _local_search(_nearest_neighbor_order(shelf_ids, dist, first), dist, start_dist)
        length = _path_length(order, dist, start_dist)
        if length < best_length - _IMPROVEMENT_EPS or (
            best_order is not None and abs(length - best_length) <= _IMPROVEMENT_EPS and order < best_order
        ):
            best_length = length
            best_order = order
    return _build_plan(best_order, groups, shelf_map)


def exact_route(shelf_set: Sequence[tuple[str, tuple[str, ...]]], shelf_map: ShelfMap) -> RoutePlan:
    """Brute-force global minimum over all visit orders; ties resolve to the
    lexicographically smallest shelf sequence. Guarded to 10 shelves."""
    groups = dict(shelf_set)
    unknown = [s for s in groups if s not in shelf_map]
    if unknown:
        raise ShelfMapError(f"unknown shelf ids: {sorted(unknown)}")
    if len(groups) > EXACT_ROUTE_LIMIT:
        raise ValueError(f"exact_route is limited to {EXACT_ROUTE_LIMIT} shelves, got {len(groups)}")
    if not groups:
        return RoutePlan((), (), 0.0)
    shelf_ids = sorted(groups)
    dist, start_dist = _distances(shelf_ids, shelf_map)
    best_order: tuple[str, ...] | None = None
    best_length = math.inf
    for order in itertools.permutations(shelf_ids):
        length = _path_length(order, dist, start_dist)
        if length < best_length:
            best_length = length
            best_order = order
    return _build_plan(best_order, groups, shelf_map)


def two_opt_is_stable(plan: RoutePlan, shelf_map: ShelfMap, tolerance: float = 1e-9) -> bool:
    """True when no single 2-opt segment reversal shortens the plan."""
    order = [w.shelf_id for w in plan.ordered_waypoints]
    if len(order) < 2:
        return True
    dist, start_dist = _distances(order, shelf_map)
    base = _path_length(order, dist, start_dist)
    for i in range(len(order) - 1):
        for j in range(i + 1, len(order)):
            candidate = order[:i] + list(reversed(order[i:j + 1])) + order[j + 1:]
            if _path_length(candidate, dist, start_dist) < base - tolerance:
                return False
    return True


# ---------------------------------------------------------------------------
# Waypoint documents
# ---------------------------------------------------------------------------


def emit_waypoints(plan: RoutePlan) -> str:
    """Serialize a plan as JSON lines: a header record, then one waypoint per
    line with seq, shelf_id, pose, and the products to collect there."""
    lines = [json.dumps(
        {"waypoints": len(plan.ordered_waypoints), "total_distance": plan.total_distance},
        separators=(",", ":"),
    )]
    for seq, w in enumerate(plan.ordered_waypoints):
        lines.append(json.dumps(
            {"seq": seq, "shelf_id": w.shelf_id, "x": w.x, "y": w.y, "yaw": w.yaw,
             "products": list(w.products_here)},
            separators=(",", ":"),
        ))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class WaypointDocument:
    total_distance: float
    waypoints: tuple[Waypoint, ...]


def parse_waypoints(document: str) -> WaypointDocument:
    lines = [line for line in document.splitlines() if line.strip()]
    if not lines:
        raise ValueError("waypoint document is empty (header line required)")
    header = json.loads(lines[0])
    records = [json.loads(line) for line in lines[1:]]
    if header.get("waypoints") != len(records):
        raise ValueError(f"header declares {header.get('waypoints')} waypoints, found {len(records)}")
    for seq, record in enumerate(records):
        if record.get("seq") != seq:
            raise ValueError(f"waypoint records out of order at seq {record.get('seq')}")
    waypoints = tuple(
        Waypoint(r["shelf_id"], r["x"], r["y"], r["yaw"], tuple(r["products"])) for r in records
    )
    return WaypointDocument(total_distance=header["total_distance"], waypoints=waypoints)


def route_for_products(
    product_ids: Sequence[str], catalog: Catalog, shelf_map: ShelfMap, exact: bool = False
) -> tuple[RoutePlan, list[tuple[str, tuple[str, ...]]]]:
    """Full pipeline: group by shelf, drop unroutable shelves (reported, not
    fatal), and order the rest."""
    shelf_set = shelves_for(product_ids, catalog)
    routable, unroutable = partition_routable(shelf_set, shelf_map)
    planner = exact_route if exact else plan_route
    return planner(routable, shelf_map), unroutable


_SHELF_EXTRACTION_PROMPT = """\
The final assistant message of a shopping session is quoted below. List the
shelf ids that need to be visited to collect every product it mentions.
Reply with exactly one JSON object and nothing else: {"shelves":["S01",...]}

Message:
"""


def extract_shelves_from_text(
    final_message: str, complete: "Callable[[str], str]", shelf_map: ShelfMap
) -> tuple[list[str], list[str]]:
    """Alternate extraction mode: let a chat model read a free-text final
    message and name the shelves, then validate its output against the map.

    The deterministic catalog join (shelves_for) is the default; this path
    exists for lists that never passed through the structured pipeline.
    Returns (valid shelf ids, rejected ids) -- rejected means the model named
    a shelf the map does not know.
    """
    raw = complete(_SHELF_EXTRACTION_PROMPT + final_message)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"shelf extraction reply is not valid JSON: {exc}")
    shelves = data.get("shelves") if isinstance(data, dict) else None
    if not isinstance(shelves, list) or not all(isinstance(s, str) for s in shelves):
        raise ValueError('shelf extraction reply must be {"shelves": [ids]}')
    deduplicated = list(dict.fromkeys(shelves))
    valid = [s for s in deduplicated if s in shelf_map]
    rejected = [s for s in deduplicated if s not in shelf_map]
    return valid, rejected
