"""Product catalog: CSV ingest, validation, lookup and substring search.

The catalog is immutable once imported; re-import builds a fresh catalog
with a bumped version and swaps it in atomically at the engine level.
Prices are integer minor units throughout -- no floats touch money.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

CSV_HEADER = ["id", "name", "brand", "category", "price_cents", "shelf_id", "tags", "description"]
TAG_SEPARATOR = ";"


class CatalogImportError(Exception):
    """Whole-file rejection: malformed header or duplicate product id."""


class ProductNotFoundError(KeyError):
    """Lookup of an id the catalog does not contain."""

    def __init__(self, product_id: str):
        super().__init__(product_id)
        self.product_id = product_id

    def __str__(self) -> str:
        return f"unknown product id {self.product_id!r}"


@dataclass(frozen=True)
class Product:
    id: str
    name: str
    brand: str
    category: str
    price_cents: int
    shelf_id: str
    tags: frozenset[str]
    description: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("product id must be non-empty")
        if self.price_cents < 0:
            raise ValueError(f"price_cents must be >= 0, got {self.price_cents}")
        if not self.shelf_id:
            raise ValueError("shelf_id must be non-empty")
        normalized = frozenset(t.strip().lower() for t in self.tags if t.strip())
        object.__setattr__(self, "tags", normalized)


@dataclass(frozen=True)
class UserProfile:
    """Shopper constraints and soft preferences, all lowercase tag sets.

    diet and allergens are hard constraints (products conflicting with them
    are filtered before any model sees them); preferences only annotate.
    """

    diet: frozenset[str] = frozenset()
    allergens: frozenset[str] = frozenset()
    preferences: frozenset[str] = frozenset()
    display_name: str = ""

    def __post_init__(self):
        for attr in ("diet", "allergens", "preferences"):
            tags = getattr(self, attr)
            object.__setattr__(self, attr, frozenset(t.strip().lower() for t in tags if t.strip()))

    @classmethod
    def from_dict(cls, data: dict) -> "UserProfile":
        return cls(
            diet=frozenset(data.get("diet", ())),
            allergens=frozenset(data.get("allergens", ())),
            preferences=frozenset(data.get("preferences", ())),
            display_name=str(data.get("display_name", "")),
        )

    def to_dict(self) -> dict:
        return {
            "diet": sorted(self.diet),
            "allergens": sorted(self.allergens),
            "preferences": sorted(self.preferences),
            "display_name": self.display_name,
        }


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass(frozen=True)
class CatalogSummary:
    count: int
    version: int
    rejected_rows: tuple[RejectedRow, ...] = ()

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "version": self.version,
            "rejected_rows": [{"line": r.line, "reason": r.reason} for r in self.rejected_rows],
        }


class Catalog:
    """Immutable product map with deterministic (ascending id) iteration."""

    def __init__(self, products: dict[str, Product], version: int = 1):
        self._products = {pid: products[pid] for pid in sorted(products)}
        self.version = version

    def __len__(self) -> int:
        return len(self._products)

    def __iter__(self):
        return iter(self._products.values())

    def __contains__(self, product_id: str) -> bool:
        return product_id in self._products

    def ids(self) -> list[str]:
        return list(self._products)

    def get(self, product_id: str) -> Product | None:
        return self._products.get(product_id)


def get_product(catalog: Catalog, product_id: str) -> Product:
    """Exact row as imported; raises ProductNotFoundError for unknown ids.

    Never fabricates a product -- callers that can tolerate absence should
    use Catalog.get.
    """
    product = catalog.get(product_id)
    if product is None:
        raise ProductNotFoundError(product_id)
    return product


def search_by_name(catalog: Catalog, needle: str) -> list[Product]:
    """Case-insensitive substring match over name+brand, ascending id order."""
    if not needle:
        raise ValueError("search needle must be non-empty")
    folded = needle.lower()
    return [p for p in catalog if folded in p.name.lower() or folded in p.brand.lower()]


def _parse_row(row: dict[str, str], line: int) -> Product:
    price_raw = (row.get("price_cents") or "").strip()
    try:
        price = int(price_raw)
    except ValueError:
        raise ValueError(f"price_cents is not an integer: {price_raw!r}")
    tags = frozenset(t for t in (row.get("tags") or "").split(TAG_SEPARATOR) if t.strip())
    return Product(
        id=(row.get("id") or "").strip(),
        name=row.get("name") or "",
        brand=row.get("brand") or "",
        category=row.get("category") or "",
        price_cents=price,
        shelf_id=(row.get("shelf_id") or "").strip(),
        tags=tags,
        description=row.get("description") or "",
    )


def import_catalog(source: io.TextIOBase | str, previous_version: int = 0) -> tuple[Catalog, CatalogSummary]:
    """Load a catalog from CSV, all-or-nothing per file.

    Value errors (negative price, empty shelf_id, bad integer) reject only
    that row and are reported with line numbers. A malformed header or a
    duplicated id signals a corrupt export and rejects the whole file.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise CatalogImportError("malformed header: empty file")
    if header != CSV_HEADER:
        raise CatalogImportError(f"malformed header: expected {CSV_HEADER}, got {header}")

    products: dict[str, Product] = {}
    rejected: list[RejectedRow] = []
    for line_no, raw in enumerate(reader, start=2):
        if not raw or all(not cell.strip() for cell in raw):
            continue
        if len(raw) != len(CSV_HEADER):
            rejected.append(RejectedRow(line_no, f"expected {len(CSV_HEADER)} fields, got {len(raw)}"))
            continue
        row = dict(zip(CSV_HEADER, raw))
        row_id = (row.get("id") or "").strip()
        if row_id and row_id in products:
            raise CatalogImportError(f"duplicate id {row_id}")
        try:
            product = _parse_row(row, line_no)
        except ValueError as exc:
            rejected.append(RejectedRow(line_no, str(exc)))
            continue
        products[product.id] = product

    version = previous_version + 1
    catalog = Catalog(products, version=version)
    summary = CatalogSummary(count=len(products), version=version, rejected_rows=tuple(rejected))
    return catalog, summary


def export_catalog(catalog: Catalog) -> str:
    """Serialize back to the import CSV format (round-trips accepted rows)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for p in catalog:
        writer.writerow([
            p.id, p.name, p.brand, p.category, str(p.price_cents),
            p.shelf_id, TAG_SEPARATOR.join(sorted(p.tags)), p.description,
        ])
    return buf.getvalue()
