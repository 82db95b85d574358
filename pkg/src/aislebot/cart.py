"""Deterministic cart state and the operations language models drive it with.

The engine owns every piece of arithmetic here; model output only ever
supplies (op, product_id, qty) triples, which are validated against the
catalog and applied left-to-right.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .catalog import Catalog


class CartOpKind(str, enum.Enum):
    ADD = "add"
    REMOVE = "remove"
    SET_QTY = "set_qty"


@dataclass(frozen=True)
class CartOp:
    op: CartOpKind
    product_id: str
    qty: int | None = None

    def __post_init__(self):
        if self.op in (CartOpKind.ADD, CartOpKind.SET_QTY):
            if self.qty is None or self.qty < 1:
                raise ValueError(f"{self.op.value} requires qty >= 1, got {self.qty}")
        elif self.qty is not None:
            raise ValueError("remove takes no qty")

    def to_dict(self) -> dict:
        payload = {"op": self.op.value, "product_id": self.product_id}
        if self.qty is not None:
            payload["qty"] = self.qty
        return payload

    @classmethod
    def from_dict(cls, data: dict) -> "CartOp":
        return cls(op=CartOpKind(data["op"]), product_id=data["product_id"], qty=data.get("qty"))


@dataclass(frozen=True)
class CartLine:
    product_id: str
    qty: int


@dataclass(frozen=True)
class Cart:
    """One line per product, insertion-ordered; totals are always derived."""

    lines: tuple[CartLine, ...] = ()
    approved: bool = False

    def find(self, product_id: str) -> CartLine | None:
        for line in self.lines:
            if line.product_id == product_id:
                return line
        return None

    def to_dict(self) -> dict:
        return {
            "lines": [{"product_id": l.product_id, "qty": l.qty} for l in self.lines],
            "approved": self.approved,
        }


@dataclass(frozen=True)
class OpDefect:
    op: CartOp
    reason: str

    def to_dict(self) -> dict:
        return {"op": self.op.to_dict(), "reason": self.reason}


class ApprovedCartError(Exception):
    """Mutation attempted on a cart that has already been approved."""


class UnresolvableCartError(Exception):
    def __init__(self, product_ids: list[str]):
        super().__init__(f"cart references unknown product ids: {product_ids}")
        self.product_ids = product_ids


def apply_cart_ops(cart: Cart, ops: list[CartOp], catalog: Catalog) -> tuple[Cart, list[OpDefect]]:
    """Apply ops left-to-right against the catalog.

    add merges into an existing line (qty accumulates); remove of an absent
    line is a recorded no-op, not an error, since models misremember list
    contents; set_qty replaces the quantity, creating the line when absent.
    Ops naming unknown product ids are skipped and reported -- the gateway
    already validates, so this is defense in depth.
    """
    if cart.approved:
        raise ApprovedCartError("cart is approved; no further edits")

    lines: list[CartLine] = list(cart.lines)
    defects: list[OpDefect] = []

    def index_of(pid: str) -> int | None:
        for i, line in enumerate(lines):
            if line.product_id == pid:
                return i
        return None

    for op in ops:
        if op.product_id not in catalog:
            defects.append(OpDefect(op, f"unknown product id {op.product_id}"))
            continue
        pos = index_of(op.product_id)
        if op.op is CartOpKind.ADD:
            if pos is None:
                lines.append(CartLine(op.product_id, op.qty))
            else:
                lines[pos] = CartLine(op.product_id, lines[pos].qty + op.qty)
        elif op.op is CartOpKind.REMOVE:
            if pos is None:
                defects.append(OpDefect(op, "remove of product not in cart"))
            else:
                del lines[pos]
        else:  # SET_QTY
            if pos is None:
                lines.append(CartLine(op.product_id, op.qty))
            else:
                lines[pos] = CartLine(op.product_id, op.qty)

    return Cart(lines=tuple(lines), approved=False), defects


def cart_total(cart: Cart, catalog: Catalog) -> int:
    """Exact integer total in minor units; errors list every unresolvable id."""
    missing = [l.product_id for l in cart.lines if l.product_id not in catalog]
    if missing:
        raise UnresolvableCartError(missing)
    return sum(l.qty * catalog.get(l.product_id).price_cents for l in cart.lines)


def replace_lines(cart: Cart, lines: list[CartLine]) -> Cart:
    """Swap the full line set (tailored-list adoption); keeps approval state."""
    if cart.approved:
        raise ApprovedCartError("cart is approved; no further edits")
    return replace(cart, lines=tuple(lines))
