"""Prompt rendering, chat-completion backends, and the response envelope.

Every model reply must be a single JSON envelope; free-form output is a
parse error that the orchestrator turns into one formatting retry. The
strict grammar is what makes the routing decision (follow-up question vs.
finished item list) mechanically testable.

Wire grammar, one object per reply:
    {"type":"ask","text":S}
    {"type":"items","items":[S...]}
    {"type":"list","entries":[{"product_id":S,"reason":S}...]}
    {"type":"answer","text":S,"cart_ops":[{"op":"add"|"remove"|"set_qty","product_id":S,"qty":N}...]}
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import string
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import httpx

from .cart import Cart, CartOp, CartOpKind
from .catalog import Catalog, UserProfile

EMPTY_CART_MARKER = "[cart empty]"
FORMAT_REMINDER = "Your previous reply was not valid. Respond in the required format: a single JSON envelope."


class Role(str, enum.Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"


class Speaker(str, enum.Enum):
    USER = "user"
    ASSISTANT = "assistant"
    SYSTEM = "system"


@dataclass(frozen=True)
class ChatMessage:
    speaker: Speaker
    text: str
    timestamp: float = 0.0

    def to_dict(self) -> dict:
        return {"speaker": self.speaker.value, "text": self.text, "timestamp": self.timestamp}


# ---------------------------------------------------------------------------
# Envelopes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Ask:
    text: str


@dataclass(frozen=True)
class Items:
    rough_items: tuple[str, ...]


@dataclass(frozen=True)
class ListEntry:
    product_id: str
    reason: str


@dataclass(frozen=True)
class TailoredList:
    entries: tuple[ListEntry, ...]


@dataclass(frozen=True)
class Answer:
    text: str
    cart_ops: tuple[CartOp, ...] = ()


Envelope = Ask | Items | TailoredList | Answer

_ROLE_VARIANTS: dict[Role, tuple[type, ...]] = {
    Role.HIGH: (Ask, Items),
    Role.MEDIUM: (TailoredList,),
    Role.LOW: (Answer,),
}


class EnvelopeParseError(Exception):
    """Reply did not match the envelope grammar; carries the raw text."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


class RoleViolationError(Exception):
    """Structurally valid envelope, but not an admissible variant for the role."""

    def __init__(self, role: Role, got: str):
        super().__init__(f"role {role.value} may not produce {got!r} envelopes")
        self.role = role
        self.got = got


def serialize_envelope(envelope: Envelope) -> str:
    if isinstance(envelope, Ask):
        payload = {"type": "ask", "text": envelope.text}
    elif isinstance(envelope, Items):
        payload = {"type": "items", "items": list(envelope.rough_items)}
    elif isinstance(envelope, TailoredList):
        payload = {
            "type": "list",
            "entries": [{"product_id": e.product_id, "reason": e.reason} for e in envelope.entries],
        }
    elif isinstance(envelope, Answer):
        payload = {
            "type": "answer",
            "text": envelope.text,
            "cart_ops": [op.to_dict() for op in envelope.cart_ops],
        }
    else:
        raise TypeError(f"not an envelope: {envelope!r}")
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


def _require(condition: bool, message: str, raw: str):
    if not condition:
        raise EnvelopeParseError(message, raw)


def _parse_cart_op(data, raw: str) -> CartOp:
    _require(isinstance(data, dict), "cart op must be an object", raw)
    kind = data.get("op")
    _require(kind in ("add", "remove", "set_qty"), f"unknown cart op {kind!r}", raw)
    expected = {"op", "product_id"} if kind == "remove" else {"op", "product_id", "qty"}
    _require(set(data) == expected, f"cart op keys must be exactly {sorted(expected)}", raw)
    _require(isinstance(data["product_id"], str) and data["product_id"] != "", "product_id must be a non-empty string", raw)
    qty = data.get("qty")
    if kind != "remove":
        _require(isinstance(qty, int) and not isinstance(qty, bool) and qty >= 1, "qty must be an integer >= 1", raw)
    return CartOp(op=CartOpKind(kind), product_id=data["product_id"], qty=qty)


def parse_envelope(role: Role, raw: str) -> Envelope:
    """Strict parse of the envelope grammar; the role constrains variants."""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise EnvelopeParseError(f"not valid JSON: {exc}", raw)
    _require(isinstance(data, dict), "envelope must be a JSON object", raw)
    kind = data.get("type")

    if kind == "ask":
        _require(set(data) == {"type", "text"}, 'ask keys must be exactly ["text", "type"]', raw)
        _require(isinstance(data["text"], str), "ask text must be a string", raw)
        envelope: Envelope = Ask(text=data["text"])
    elif kind == "items":
        _require(set(data) == {"type", "items"}, 'items keys must be exactly ["items", "type"]', raw)
        _require(isinstance(data["items"], list) and all(isinstance(i, str) for i in data["items"]),
                 "items must be a list of strings", raw)
        envelope = Items(rough_items=tuple(data["items"]))
    elif kind == "list":
        _require(set(data) == {"type", "entries"}, 'list keys must be exactly ["entries", "type"]', raw)
        _require(isinstance(data["entries"], list), "entries must be a list", raw)
        entries = []
        for entry in data["entries"]:
            _require(isinstance(entry, dict) and set(entry) == {"product_id", "reason"},
                     'list entries must have exactly ["product_id", "reason"]', raw)
            _require(isinstance(entry["product_id"], str) and isinstance(entry["reason"], str),
                     "list entry fields must be strings", raw)
            entries.append(ListEntry(product_id=entry["product_id"], reason=entry["reason"]))
        envelope = TailoredList(entries=tuple(entries))
    elif kind == "answer":
        _require(set(data) == {"type", "text", "cart_ops"},
                 'answer keys must be exactly ["cart_ops", "text", "type"]', raw)
        _require(isinstance(data["text"], str), "answer text must be a string", raw)
        _require(isinstance(data["cart_ops"], list), "cart_ops must be a list", raw)
        try:
            ops = tuple(_parse_cart_op(op, raw) for op in data["cart_ops"])
        except ValueError as exc:
            raise EnvelopeParseError(str(exc), raw)
        envelope = Answer(text=data["text"], cart_ops=ops)
    else:
        raise EnvelopeParseError(f"unknown envelope type {kind!r}", raw)

    if not isinstance(envelope, _ROLE_VARIANTS[role]):
        raise RoleViolationError(role, kind)
    return envelope


@dataclass(frozen=True)
class EnvelopeDefect:
    kind: str
    product_id: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "product_id": self.product_id}


def validate_envelope(envelope: Envelope, catalog: Catalog) -> tuple[Envelope, list[EnvelopeDefect]]:
    """Strip references to product ids the catalog does not contain.

    Always returns an envelope plus a defect report; a model inventing
    products must never surface them to the user.
    """
    if isinstance(envelope, TailoredList):
        kept = [e for e in envelope.entries if e.product_id in catalog]
        defects = [EnvelopeDefect("unknown_product_in_list", e.product_id)
                   for e in envelope.entries if e.product_id not in catalog]
        return TailoredList(entries=tuple(kept)), defects
    if isinstance(envelope, Answer):
        kept_ops = [op for op in envelope.cart_ops if op.product_id in catalog]
        defects = [EnvelopeDefect("unknown_product_in_op", op.product_id)
                   for op in envelope.cart_ops if op.product_id not in catalog]
        return Answer(text=envelope.text, cart_ops=tuple(kept_ops)), defects
    return envelope, []


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------


class PromptContextError(KeyError):
    def __init__(self, placeholder: str):
        super().__init__(placeholder)
        self.placeholder = placeholder

    def __str__(self) -> str:
        return f"prompt template placeholder {self.placeholder!r} missing from context"


def _template_identifiers(template: string.Template) -> list[str]:
    # Template.get_identifiers() only exists on 3.11+.
    names = []
    for match in template.pattern.finditer(template.template):
        name = match.group("named") or match.group("braced")
        if name and name not in names:
            names.append(name)
    return names


def format_products(products: Sequence[tuple], catalog: Catalog) -> str:
    """Serialize retrieved products with id, name, brand, price, shelf so the
    model has nothing to invent. Accepts (id, ...) tuples, KeptProduct, or
    ScoredProduct-shaped values."""
    lines = []
    for item in products:
        pid = getattr(item, "product_id", None) or (item[0] if isinstance(item, tuple) else item)
        product = catalog.get(pid)
        if product is None:
            continue
        hits = getattr(item, "preference_hits", ())
        note = f" | matches: {','.join(hits)}" if hits else ""
        lines.append(
            f"- id={product.id} name={product.name!r} brand={product.brand!r} "
            f"price_cents={product.price_cents} shelf={product.shelf_id}{note}"
        )
    return "\n".join(lines) if lines else "(no products retrieved)"


def format_cart(cart: Cart, catalog: Catalog) -> str:
    if not cart.lines:
        return EMPTY_CART_MARKER
    lines = []
    for line in cart.lines:
        product = catalog.get(line.product_id)
        name = product.name if product else "?"
        lines.append(f"- {line.product_id} x{line.qty} ({name})")
    return "\n".join(lines)


def format_profile(profile: UserProfile) -> str:
    return (
        f"diet={','.join(sorted(profile.diet)) or 'none'}; "
        f"allergens={','.join(sorted(profile.allergens)) or 'none'}; "
        f"preferences={','.join(sorted(profile.preferences)) or 'none'}"
    )


def format_rough_items(items: Sequence[str]) -> str:
    return "\n".join(f"- {item}" for item in items) if items else "(none)"


@dataclass
class RoleConfig:
    role: Role
    system_prompt: str
    temperature: float = 0.0
    max_tokens: int = 512

    def placeholders(self) -> list[str]:
        return _template_identifiers(string.Template(self.system_prompt))


def render_prompt(role_config: RoleConfig, context: dict[str, str], chat_log: Sequence[ChatMessage]) -> list[ChatMessage]:
    """Fill the role template and prepend it to the dialogue as the system turn.

    Deterministic: same config, context, and log always render identical
    messages. Raises PromptContextError naming the first missing placeholder.
    """
    template = string.Template(role_config.system_prompt)
    for name in _template_identifiers(template):
        if name not in context:
            raise PromptContextError(name)
    rendered = template.safe_substitute(context)
    messages = [ChatMessage(Speaker.SYSTEM, rendered)]
    messages.extend(chat_log)
    return messages


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class Backend(Protocol):
    def complete(self, role: Role, messages: Sequence[ChatMessage], temperature: float, max_tokens: int) -> str: ...


class BackendError(Exception):
    """Transport-level failure talking to a chat backend."""

    def __init__(self, message: str, retryable: bool = True, retry_after: float | None = None):
        super().__init__(message)
        self.retryable = retryable
        self.retry_after = retry_after


class ScriptedBackendMiss(Exception):
    """The scripted backend saw a prompt it has no reply for -- a test bug."""

    def __init__(self, digest: str, messages: Sequence[ChatMessage]):
        preview = messages[-1].text[:120] if messages else ""
        super().__init__(f"unscripted prompt digest {digest} (last message: {preview!r})")
        self.digest = digest


def prompt_digest(role: Role, messages: Sequence[ChatMessage]) -> str:
    canonical = json.dumps(
        {"role": role.value, "messages": [{"speaker": m.speaker.value, "text": m.text} for m in messages]},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ScriptedBackend:
    """Replays a digest-keyed response table; any unknown prompt fails loudly.

    Message timestamps are excluded from the digest so a replayed session
    keys on content, not wall-clock time.
    """

    def __init__(self, table: dict[str, str]):
        self.table = dict(table)

    @classmethod
    def from_file(cls, path: str) -> "ScriptedBackend":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.table, fh, indent=2, sort_keys=True)

    def complete(self, role: Role, messages: Sequence[ChatMessage], temperature: float, max_tokens: int) -> str:
        digest = prompt_digest(role, messages)
        if digest not in self.table:
            raise ScriptedBackendMiss(digest, messages)
        return self.table[digest]


class RecordingBackend:
    """Plays an ordered script of replies while recording prompt digests.

    Drive a scenario once with this backend and the resulting table turns a
    ScriptedBackend into a byte-exact replay of that scenario.
    """

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self._cursor = 0
        self.table: dict[str, str] = {}

    def complete(self, role: Role, messages: Sequence[ChatMessage], temperature: float, max_tokens: int) -> str:
        if self._cursor >= len(self._replies):
            raise ScriptedBackendMiss(prompt_digest(role, messages), messages)
        reply = self._replies[self._cursor]
        self._cursor += 1
        self.table[prompt_digest(role, messages)] = reply
        return reply


class HTTPBackend:
    """Chat-completion HTTP client: bounded timeout, a single retry, and the
    API key taken from the environment only."""

    ENDPOINT_ENV = "AISLEBOT_CHAT_ENDPOINT"
    API_KEY_ENV = "AISLEBOT_CHAT_API_KEY"

    def __init__(
        self,
        endpoint: str | None = None,
        model: str = "",
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(self.ENDPOINT_ENV, "")
        if not self.endpoint:
            raise ValueError(f"no chat endpoint configured ({self.ENDPOINT_ENV})")
        self.model = model
        self.timeout = timeout
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, role: Role, messages: Sequence[ChatMessage], temperature: float, max_tokens: int) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": _wire_role(m.speaker), "content": m.text} for m in messages],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }
        headers = {}
        api_key = os.environ.get(self.API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        last_exc: Exception | None = None
        for attempt in range(2):
            try:
                response = self._client.post(self.endpoint, json=payload, headers=headers)
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_exc = exc
        raise BackendError(f"chat backend failed after retry: {last_exc}", retryable=True)


def _wire_role(speaker: Speaker) -> str:
    return {"user": "user", "assistant": "assistant", "system": "system"}[speaker.value]


# ---------------------------------------------------------------------------
# Gateway
# ---------------------------------------------------------------------------

RenderObserver = Callable[[Role, dict, Sequence[ChatMessage]], None]


class Gateway:
    """Stateless facade: render a role prompt, call its backend, parse the reply."""

    def __init__(self, role_configs: dict[Role, RoleConfig], backend: Backend,
                 render_observer: RenderObserver | None = None):
        missing = [r for r in Role if r not in role_configs]
        if missing:
            raise ValueError(f"missing role configs: {[r.value for r in missing]}")
        self.role_configs = role_configs
        self.backend = backend
        self.render_observer = render_observer

    def render(self, role: Role, context: dict[str, str], chat_log: Sequence[ChatMessage]) -> list[ChatMessage]:
        config = self.role_configs[role]
        messages = render_prompt(config, context, chat_log)
        if self.render_observer is not None:
            self.render_observer(role, context, messages)
        return messages

    def complete(self, role: Role, messages: Sequence[ChatMessage]) -> str:
        config = self.role_configs[role]
        return self.backend.complete(role, messages, config.temperature, config.max_tokens)

    def exchange(self, role: Role, context: dict[str, str], chat_log: Sequence[ChatMessage]) -> Envelope:
        """One render-complete-parse round with a single formatting retry."""
        messages = self.render(role, context, chat_log)
        raw = self.complete(role, messages)
        try:
            return parse_envelope(role, raw)
        except (EnvelopeParseError, RoleViolationError):
            retry_messages = messages + [ChatMessage(Speaker.SYSTEM, FORMAT_REMINDER)]
            raw = self.complete(role, retry_messages)
            return parse_envelope(role, raw)
