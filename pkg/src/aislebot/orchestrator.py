"""Session state machine: classify each turn, route it to the right role,
run the rough-list -> retrieval -> tailored-list pipeline, own the cart.

State is event-sourced: one JSON line per completed turn or approval, written
before the caller sees the result, so any session can be replayed to the
byte from its log. A turn that fails (backend down, model output unparseable
after one retry) leaves the session untouched.
"""

from __future__ import annotations

import enum
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import retrieval
from .cart import Cart, CartLine, apply_cart_ops, cart_total, replace_lines
from .catalog import Catalog, UserProfile, get_product, import_catalog
from .classifier import QueryClass, TurnClassifier
from .gateway import (
    Answer,
    Ask,
    BackendError,
    ChatMessage,
    EnvelopeParseError,
    Gateway,
    Items,
    Role,
    RoleViolationError,
    Speaker,
    TailoredList,
    format_cart,
    format_products,
    format_profile,
    format_rough_items,
    validate_envelope,
)
from .retrieval import EmbeddingError, ProductIndex, ScoredProduct, build_index, profile_filter, top_k

LIST_INTRO_TEXT = "Here is the list I put together for you. Tell me about any changes, or approve it when ready."
APOLOGY_TEXT = "Sorry, I could not put together a proper answer just now. Could you rephrase that?"
UNAVAILABLE_TEXT = "The assistant backend is temporarily unavailable. Please try again in a moment."


class Phase(str, enum.Enum):
    AWAITING_QUERY = "awaiting_query"
    HIGH_DIALOGUE = "high_dialogue"
    LIST_REVIEW = "list_review"
    FINALIZED = "finalized"


class SessionNotFoundError(KeyError):
    def __init__(self, session_id: str):
        super().__init__(session_id)
        self.session_id = session_id


class SessionFinalizedError(Exception):
    """The session is finalized; it accepts no further turns or edits."""


class EmptyCartError(Exception):
    """Approval requires at least one cart line."""


@dataclass
class SessionState:
    session_id: str
    profile: UserProfile
    phase: Phase = Phase.AWAITING_QUERY
    chat_log: list[ChatMessage] = field(default_factory=list)
    rough_items: list[str] = field(default_factory=list)
    cart: Cart = field(default_factory=Cart)
    defects: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "profile": self.profile.to_dict(),
            "phase": self.phase.value,
            "chat_log": [m.to_dict() for m in self.chat_log],
            "rough_items": list(self.rough_items),
            "cart": self.cart.to_dict(),
            "defects": list(self.defects),
        }


@dataclass(frozen=True)
class ListViewRow:
    product_id: str
    name: str
    brand: str
    price_cents: int
    shelf_id: str
    reason: str

    def to_dict(self) -> dict:
        return {
            "product_id": self.product_id,
            "name": self.name,
            "brand": self.brand,
            "price_cents": self.price_cents,
            "shelf_id": self.shelf_id,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class AssistantTurn:
    text: str
    list_view: tuple[ListViewRow, ...] | None
    cart_snapshot: dict
    phase_after: Phase
    error_code: str | None = None

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "list_view": [r.to_dict() for r in self.list_view] if self.list_view is not None else None,
            "cart": self.cart_snapshot,
            "phase_after": self.phase_after.value,
            "error_code": self.error_code,
        }


@dataclass(frozen=True)
class FinalList:
    lines: tuple[CartLine, ...]
    total_cents: int

    def to_dict(self) -> dict:
        return {
            "lines": [{"product_id": l.product_id, "qty": l.qty} for l in self.lines],
            "total_cents": self.total_cents,
        }


def snapshot_cart(cart: Cart, catalog: Catalog) -> dict:
    """Cart lines joined from the live catalog; all money integer cents."""
    lines = []
    total = 0
    for line in cart.lines:
        product = get_product(catalog, line.product_id)
        line_total = line.qty * product.price_cents
        total += line_total
        lines.append({
            "product_id": line.product_id,
            "name": product.name,
            "brand": product.brand,
            "price_cents": product.price_cents,
            "shelf_id": product.shelf_id,
            "qty": line.qty,
            "line_total_cents": line_total,
        })
    return {"lines": lines, "total_cents": total, "approved": cart.approved}


# ---------------------------------------------------------------------------
# Event logs
# ---------------------------------------------------------------------------


class InMemoryEventLog:
    def __init__(self):
        self._events: dict[str, list[dict]] = {}

    def append(self, session_id: str, event: dict) -> None:
        self._events.setdefault(session_id, []).append(event)

    def read(self, session_id: str) -> list[dict]:
        if session_id not in self._events:
            raise SessionNotFoundError(session_id)
        return list(self._events[session_id])

    def session_ids(self) -> list[str]:
        return sorted(self._events)


class FileEventLog:
    """One append-only JSON-lines file per session under a root directory."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def _path(self, session_id: str) -> str:
        safe = "".join(c for c in session_id if c.isalnum() or c in "-_")
        return os.path.join(self.root, f"{safe}.jsonl")

    def append(self, session_id: str, event: dict) -> None:
        with open(self._path(session_id), "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, separators=(",", ":"), ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read(self, session_id: str) -> list[dict]:
        path = self._path(session_id)
        if not os.path.exists(path):
            raise SessionNotFoundError(session_id)
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]

    def session_ids(self) -> list[str]:
        return sorted(f[:-6] for f in os.listdir(self.root) if f.endswith(".jsonl"))


def replay_events(events: Sequence[dict]) -> SessionState:
    """Fold an event log back into a session; the one true state constructor."""
    state: SessionState | None = None
    for event in events:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "session_created":
            state = SessionState(
                session_id=payload["session_id"],
                profile=UserProfile.from_dict(payload["profile"]),
            )
        elif state is None:
            raise ValueError("event log does not start with session_created")
        elif kind == "turn_completed":
            user = payload["user_message"]
            assistant = payload["assistant_message"]
            state.chat_log.append(ChatMessage(Speaker.USER, user["text"], user["timestamp"]))
            state.chat_log.append(ChatMessage(Speaker.ASSISTANT, assistant["text"], assistant["timestamp"]))
            state.cart = Cart(
                lines=tuple(CartLine(l["product_id"], l["qty"]) for l in payload["cart"]["lines"]),
                approved=payload["cart"]["approved"],
            )
            state.rough_items = list(payload["rough_items"])
            state.defects.extend(payload["defects_added"])
            state.phase = Phase(payload["phase_after"])
        elif kind == "approved":
            state.cart = Cart(lines=state.cart.lines, approved=True)
            state.phase = Phase.FINALIZED
        else:
            raise ValueError(f"unknown event kind {kind!r}")
    if state is None:
        raise ValueError("empty event log")
    return state


# ---------------------------------------------------------------------------
# Orchestrator
# ---------------------------------------------------------------------------


def _default_id_factory() -> str:
    return uuid.uuid4().hex


class Orchestrator:
    """Owns sessions, the catalog/index pair, and all turn routing."""

    def __init__(
        self,
        catalog: Catalog,
        index: ProductIndex,
        embedder: retrieval.EmbeddingProvider,
        classifier: TurnClassifier,
        gateway: Gateway,
        event_log=None,
        tag_rules: dict | None = None,
        retrieval_k: int = retrieval.DEFAULT_K,
        confidence_threshold: float = 0.0,
        clock: Callable[[], float] = time.time,
        id_factory: Callable[[], str] = _default_id_factory,
    ):
        self.catalog = catalog
        self.index = index
        self.embedder = embedder
        self.classifier = classifier
        self.gateway = gateway
        self.event_log = event_log if event_log is not None else InMemoryEventLog()
        self.tag_rules = tag_rules
        self.retrieval_k = retrieval_k
        self.confidence_threshold = confidence_threshold
        self.clock = clock
        self.id_factory = id_factory

        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._meta_lock = threading.Lock()
        self._catalog_lock = threading.Lock()
        self._event_seq: dict[str, int] = {}

    # -- session plumbing

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._meta_lock:
            return self._locks.setdefault(session_id, threading.Lock())

    def _append_event(self, session_id: str, kind: str, payload: dict) -> None:
        seq = self._event_seq.get(session_id, 0) + 1
        self._event_seq[session_id] = seq
        self.event_log.append(session_id, {"seq": seq, "kind": kind, "payload": payload, "ts": self.clock()})

    def _get_state(self, session_id: str) -> SessionState:
        state = self._sessions.get(session_id)
        if state is None:
            # Fall back to the durable log (fresh process, old sessions).
            state = replay_events(self.event_log.read(session_id))
            self._sessions[session_id] = state
            self._event_seq[session_id] = len(self.event_log.read(session_id))
        return state

    def new_session(self, profile: UserProfile) -> SessionState:
        session_id = self.id_factory()
        state = SessionState(session_id=session_id, profile=profile)
        with self._lock_for(session_id):
            self._sessions[session_id] = state
            self._append_event(session_id, "session_created",
                               {"session_id": session_id, "profile": profile.to_dict()})
        return state

    def get_session(self, session_id: str) -> SessionState:
        with self._lock_for(session_id):
            return self._get_state(session_id)

    def restore_sessions(self) -> list[str]:
        """Replay every session in the event log (crash recovery on startup)."""
        restored = []
        for session_id in self.event_log.session_ids():
            events = self.event_log.read(session_id)
            self._sessions[session_id] = replay_events(events)
            self._event_seq[session_id] = len(events)
            restored.append(session_id)
        return restored

    # -- catalog lifecycle

    def import_catalog_text(self, csv_text: str):
        """Swap in a new catalog atomically and rebuild the product index."""
        with self._catalog_lock:
            catalog, summary = import_catalog(csv_text, previous_version=self.catalog.version)
            index = build_index(catalog, self.embedder)
            self.catalog = catalog
            self.index = index
        return summary

    # -- turn handling

    def handle_message(self, session_id: str, text: str) -> AssistantTurn:
        if not text or not text.strip():
            raise ValueError("message text must be non-empty")
        with self._lock_for(session_id):
            state = self._get_state(session_id)
            if state.phase is Phase.FINALIZED:
                raise SessionFinalizedError(f"session {session_id} is finalized")

            result = self.classifier.classify(text)
            query_class = result.query_class
            if result.confidence < self.confidence_threshold:
                # Misrouted queries hurt most when they miss retrieval; the
                # low role can answer anything with context, so it is the
                # safe fallback under classifier uncertainty.
                query_class = QueryClass.LOW

            user_message = ChatMessage(Speaker.USER, text, self.clock())
            working_log = state.chat_log + [user_message]

            high_route = state.phase is Phase.HIGH_DIALOGUE or (
                query_class is QueryClass.HIGH and state.phase is Phase.AWAITING_QUERY
            )
            try:
                if high_route:
                    outcome = self._run_high(state, working_log)
                else:
                    outcome = self._run_low(state, working_log, text)
            except BackendError:
                return AssistantTurn(
                    text=UNAVAILABLE_TEXT,
                    list_view=None,
                    cart_snapshot=snapshot_cart(state.cart, self.catalog),
                    phase_after=state.phase,
                    error_code="backend_unavailable",
                )
            except (EnvelopeParseError, RoleViolationError):
                return AssistantTurn(
                    text=APOLOGY_TEXT,
                    list_view=None,
                    cart_snapshot=snapshot_cart(state.cart, self.catalog),
                    phase_after=state.phase,
                    error_code="invalid_model_output",
                )

            turn, new_cart, new_rough, defects_added = outcome
            assistant_message = ChatMessage(Speaker.ASSISTANT, turn.text, self.clock())
            self._append_event(session_id, "turn_completed", {
                "user_message": user_message.to_dict(),
                "assistant_message": assistant_message.to_dict(),
                "turn": turn.to_dict(),
                "cart": new_cart.to_dict(),
                "rough_items": list(new_rough),
                "defects_added": defects_added,
                "phase_after": turn.phase_after.value,
            })
            state.chat_log.extend([user_message, assistant_message])
            state.cart = new_cart
            state.rough_items = list(new_rough)
            state.defects.extend(defects_added)
            state.phase = turn.phase_after
            return turn

    def _retrieve_pool(self, queries: Sequence[str]) -> list[ScoredProduct]:
        """Per-query top-k, merged by max score, descending score order."""
        best: dict[str, float] = {}
        for query in queries:
            try:
                vector = self.embedder.embed(query)
            except EmbeddingError:
                continue  # nothing left after preprocessing; skip the query
            for hit in top_k(self.index, vector, self.retrieval_k):
                if hit.product_id not in best or hit.score > best[hit.product_id]:
                    best[hit.product_id] = hit.score
        merged = [ScoredProduct(pid, score) for pid, score in best.items()]
        merged.sort(key=lambda s: (-s.score, s.product_id))
        return merged

    def _run_high(self, state: SessionState, working_log: list[ChatMessage]):
        context = {"profile": format_profile(state.profile)}
        envelope = self.gateway.exchange(Role.HIGH, context, working_log)

        if isinstance(envelope, Ask):
            turn = AssistantTurn(
                text=envelope.text,
                list_view=None,
                cart_snapshot=snapshot_cart(state.cart, self.catalog),
                phase_after=Phase.HIGH_DIALOGUE,
            )
            return turn, state.cart, state.rough_items, []

        assert isinstance(envelope, Items)
        rough_items = list(envelope.rough_items)
        pool = self._retrieve_pool(rough_items)
        kept, _excluded = profile_filter(pool, self.catalog, state.profile, self.tag_rules)

        medium_context = {
            "profile": format_profile(state.profile),
            "rough_items": format_rough_items(rough_items),
            "retrieved_products": format_products(kept, self.catalog),
        }
        tailored = self.gateway.exchange(Role.MEDIUM, medium_context, working_log)
        assert isinstance(tailored, TailoredList)
        validated, envelope_defects = validate_envelope(tailored, self.catalog)

        rows = []
        lines = []
        for entry in validated.entries:
            product = get_product(self.catalog, entry.product_id)
            rows.append(ListViewRow(
                product_id=product.id,
                name=product.name,
                brand=product.brand,
                price_cents=product.price_cents,
                shelf_id=product.shelf_id,
                reason=entry.reason,
            ))
            lines.append(CartLine(product.id, 1))
        new_cart = replace_lines(state.cart, lines)
        turn = AssistantTurn(
            text=LIST_INTRO_TEXT,
            list_view=tuple(rows),
            cart_snapshot=snapshot_cart(new_cart, self.catalog),
            phase_after=Phase.LIST_REVIEW,
        )
        defects = [d.to_dict() for d in envelope_defects]
        return turn, new_cart, rough_items, defects

    def _run_low(self, state: SessionState, working_log: list[ChatMessage], text: str):
        pool = self._retrieve_pool([text])
        kept, _excluded = profile_filter(pool, self.catalog, state.profile, self.tag_rules)
        context = {
            "profile": format_profile(state.profile),
            "cart": format_cart(state.cart, self.catalog),
            "retrieved_products": format_products(kept, self.catalog),
        }
        envelope = self.gateway.exchange(Role.LOW, context, working_log)
        assert isinstance(envelope, Answer)
        validated, envelope_defects = validate_envelope(envelope, self.catalog)

        defects = [d.to_dict() for d in envelope_defects]
        new_cart = state.cart
        if validated.cart_ops:
            new_cart, op_defects = apply_cart_ops(state.cart, list(validated.cart_ops), self.catalog)
            defects.extend(d.to_dict() for d in op_defects)

        turn = AssistantTurn(
            text=validated.text,
            list_view=None,
            cart_snapshot=snapshot_cart(new_cart, self.catalog),
            phase_after=state.phase,
        )
        return turn, new_cart, state.rough_items, defects

    # -- approval

    def approve(self, session_id: str) -> FinalList:
        with self._lock_for(session_id):
            state = self._get_state(session_id)
            if state.phase is Phase.FINALIZED:
                raise SessionFinalizedError(f"session {session_id} is already finalized")
            if not state.cart.lines:
                raise EmptyCartError("cannot approve an empty cart")
            if state.phase not in (Phase.LIST_REVIEW, Phase.AWAITING_QUERY):
                raise SessionFinalizedError(f"cannot approve from phase {state.phase.value}")
            total = cart_total(state.cart, self.catalog)
            final = FinalList(lines=state.cart.lines, total_cents=total)
            self._append_event(session_id, "approved", {"final_list": final.to_dict()})
            state.cart = Cart(lines=state.cart.lines, approved=True)
            state.phase = Phase.FINALIZED
            return final
