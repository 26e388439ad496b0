"""Bundle acquisition and persistence.

Bundles come from a Flashbots-style blocks feed (JSON over HTTP) or from
local fixture files in the same shape. Every live call path can be shadowed
by an on-disk cache so the whole pipeline runs offline and reproducibly.
"""

from __future__ import annotations

import hashlib
import json
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from .actlift import (DEFAULT_MATCH, MatchConfig, TransactionActions,
                      action_from_dict, action_to_dict, lift_transaction)
from .registry import EventRegistry
from .tracemodel import (Address, ExecutionTrace, MemoryTraceSource, TraceSource,
                         check_amount, parse_trace_fixture, serialize_trace_fixture)
from .transfers import StandardDetector


class BundleError(ValueError):
    pass


class FeedSchemaError(BundleError):
    """The bundle feed document does not have the expected shape."""

    def __init__(self, field_name: str, detail: str) -> None:
        super().__init__(f"bundle feed field {field_name!r}: {detail}")
        self.field_name = field_name


class FeedUnavailableError(BundleError):
    """Network-level failure talking to a live feed; retryable."""


class IncompleteBundleError(BundleError):
    def __init__(self, bundle: "Bundle", missing: tuple[bytes, ...]) -> None:
        listed = ", ".join("0x" + h.hex() for h in missing)
        super().__init__(
            f"bundle {bundle.block_number}/{bundle.bundle_index} is missing "
            f"traces for: {listed}")
        self.missing = missing


@dataclass(frozen=True)
class TxMeta:
    gas_used: int
    effective_gas_price: int

    def __post_init__(self) -> None:
        if self.gas_used < 0:
            raise ValueError("gas_used must be non-negative")
        check_amount(self.effective_gas_price, "effective_gas_price")


@dataclass(frozen=True)
class Bundle:
    block_number: int
    bundle_index: int
    tx_hashes: tuple[bytes, ...]
    coinbase: Address
    tx_meta: tuple[TxMeta, ...]

    def __post_init__(self) -> None:
        if self.block_number < 0 or self.bundle_index < 0:
            raise ValueError("block_number and bundle_index must be non-negative")
        if not self.tx_hashes:
            raise ValueError("bundle must contain at least one transaction")
        if len(self.tx_meta) != len(self.tx_hashes):
            raise ValueError("tx_meta must align with tx_hashes")

    @property
    def ref(self) -> str:
        return f"{self.block_number}/{self.bundle_index}"


@dataclass(frozen=True)
class BundleActions:
    bundle: Bundle
    per_tx: tuple[TransactionActions, ...]

    def __post_init__(self) -> None:
        if len(self.per_tx) != len(self.bundle.tx_hashes):
            raise ValueError("per_tx must align with the bundle's tx_hashes")

    def iter_actions(self):
        """Yields (tx_index, action) over the whole bundle in order."""
        for i, tx in enumerate(self.per_tx):
            for action in tx.actions:
                yield i, action


def _parse_hash(text: str, field_name: str) -> bytes:
    if not isinstance(text, str):
        raise FeedSchemaError(field_name, "expected a hex string")
    raw = text[2:] if text.startswith("0x") else text
    try:
        value = bytes.fromhex(raw)
    except ValueError:
        raise FeedSchemaError(field_name, f"not valid hex: {text!r}") from None
    if len(value) != 32:
        raise FeedSchemaError(field_name, f"expected 32 bytes, got {len(value)}")
    return value


def _parse_block(doc: dict) -> list[Bundle]:
    for key in ("block_number", "coinbase", "bundles"):
        if key not in doc:
            raise FeedSchemaError(key, "missing")
    block_number = int(doc["block_number"])
    coinbase = Address.from_hex(doc["coinbase"])
    out = []
    for bundle_doc in doc["bundles"]:
        if "bundle_index" not in bundle_doc or "txs" not in bundle_doc:
            raise FeedSchemaError("bundles[]", "needs bundle_index and txs")
        hashes = []
        meta = []
        for tx in bundle_doc["txs"]:
            hashes.append(_parse_hash(tx.get("hash"), "txs[].hash"))
            try:
                meta.append(TxMeta(int(tx["gas_used"]),
                                   int(tx["effective_gas_price"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise FeedSchemaError("txs[]", f"bad gas meta: {exc}") from None
        out.append(Bundle(block_number, int(bundle_doc["bundle_index"]),
                          tuple(hashes), coinbase, tuple(meta)))
    return out


def parse_bundle_feed(text: str | bytes) -> list[Bundle]:
    """Parse a feed document: a block object, a list of them, or
    {"blocks": [...]}. Returns bundles in (block_number, bundle_index) order."""
    doc = json.loads(text)
    if isinstance(doc, dict) and "blocks" in doc:
        blocks = doc["blocks"]
    elif isinstance(doc, dict):
        blocks = [doc]
    elif isinstance(doc, list):
        blocks = doc
    else:
        raise FeedSchemaError("<root>", "expected an object or a list")
    bundles: list[Bundle] = []
    for block in blocks:
        bundles.extend(_parse_block(block))
    bundles.sort(key=lambda b: (b.block_number, b.bundle_index))
    return bundles


def _cache_path(cache_dir: str, url: str) -> Path:
    digest = hashlib.sha256(url.encode()).hexdigest()[:32]
    return Path(cache_dir) / f"{digest}.json"


def fetch_bundles(source: str, from_block: int | None = None,
                  to_block: int | None = None,
                  cache_dir: str | None = None) -> list[Bundle]:
    """Fetch bundles from a local fixture path or an HTTP(S) feed URL.

    With cache_dir set, a URL is fetched at most once; later calls replay the
    cached body, so runs against a warmed cache need no network at all.
    """
    if source.startswith(("http://", "https://")):
        body: str | None = None
        cached = _cache_path(cache_dir, source) if cache_dir else None
        if cached is not None and cached.exists():
            body = cached.read_text()
        if body is None:
            try:
                with urllib.request.urlopen(source, timeout=30) as resp:
                    body = resp.read().decode()
            except (urllib.error.URLError, OSError) as exc:
                raise FeedUnavailableError(f"feed fetch failed: {exc}") from exc
            if cached is not None:
                cached.parent.mkdir(parents=True, exist_ok=True)
                cached.write_text(body)
    else:
        body = Path(source).read_text()
    bundles = parse_bundle_feed(body)
    if from_block is not None:
        bundles = [b for b in bundles if b.block_number >= from_block]
    if to_block is not None:
        bundles = [b for b in bundles if b.block_number <= to_block]
    return bundles


def lift_bundle(bundle: Bundle, trace_source: TraceSource,
                registry: EventRegistry, config: MatchConfig = DEFAULT_MATCH,
                standards: StandardDetector | None = None) -> BundleActions:
    missing = tuple(h for h in bundle.tx_hashes if h not in trace_source)
    if missing:
        raise IncompleteBundleError(bundle, missing)
    if standards is None:
        standards = StandardDetector()
    per_tx = tuple(lift_transaction(trace_source.get_trace(h), registry,
                                    config, standards)
                   for h in bundle.tx_hashes)
    return BundleActions(bundle, per_tx)


def bundle_actions_to_json(ba: BundleActions) -> str:
    b = ba.bundle
    doc = {
        "block_number": b.block_number,
        "bundle_index": b.bundle_index,
        "coinbase": b.coinbase.hex0x(),
        "txs": [{
            "hash": "0x" + h.hex(),
            "sender": tx.sender.hex0x() if tx.sender else None,
            "recipient": tx.recipient.hex0x() if tx.recipient else None,
            "gas_used": m.gas_used,
            "effective_gas_price": str(m.effective_gas_price),
            "actions": [action_to_dict(a) for a in tx.actions],
        } for h, m, tx in zip(b.tx_hashes, b.tx_meta, ba.per_tx)],
    }
    return json.dumps(doc, separators=(",", ":"))


def bundle_actions_from_json(text: str) -> BundleActions:
    doc = json.loads(text)
    hashes = []
    meta = []
    per_tx = []
    for tx in doc["txs"]:
        h = _parse_hash(tx["hash"], "txs[].hash")
        hashes.append(h)
        meta.append(TxMeta(int(tx["gas_used"]), int(tx["effective_gas_price"])))
        sender = Address.from_hex(tx["sender"]) if tx.get("sender") else None
        recipient = (Address.from_hex(tx["recipient"])
                     if tx.get("recipient") else None)
        per_tx.append(TransactionActions(h, tuple(
            action_from_dict(a, i) for i, a in enumerate(tx["actions"])),
            sender, recipient))
    bundle = Bundle(int(doc["block_number"]), int(doc["bundle_index"]),
                    tuple(hashes), Address.from_hex(doc["coinbase"]),
                    tuple(meta))
    return BundleActions(bundle, tuple(per_tx))


def store_bundle_actions(items, path) -> None:
    """Append lifted bundles to an NDJSON store, creating it if absent."""
    with open(path, "a", encoding="ascii") as fh:
        for item in items:
            fh.write(bundle_actions_to_json(item) + "\n")


def load_bundle_actions(path) -> list[BundleActions]:
    """Load a store back in insertion order. A corrupt line raises an error
    naming its position."""
    out: list[BundleActions] = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            if not line.endswith("\n"):
                raise BundleError(f"{path}: line {lineno}: truncated record")
            try:
                out.append(bundle_actions_from_json(line))
            except BundleError:
                raise
            except (ValueError, KeyError, TypeError) as exc:
                raise BundleError(f"{path}: line {lineno}: {exc}") from exc
    return out


def parse_bundle_fixture(document: bytes | str) -> tuple[Bundle, MemoryTraceSource]:
    """Parse a self-contained bundle fixture: bundle identity plus embedded
    trace documents. Gas metadata comes from the traces themselves."""
    doc = json.loads(document)
    traces = [parse_trace_fixture(json.dumps(t).encode())
              for t in doc["transactions"]]
    bundle = Bundle(
        int(doc["block_number"]), int(doc["bundle_index"]),
        tuple(t.tx_hash for t in traces),
        Address.from_hex(doc["coinbase"]),
        tuple(TxMeta(t.gas_used, t.effective_gas_price) for t in traces))
    return bundle, MemoryTraceSource(traces)


def serialize_bundle_fixture(bundle: Bundle, trace_source: TraceSource) -> bytes:
    docs = [json.loads(serialize_trace_fixture(trace_source.get_trace(h)))
            for h in bundle.tx_hashes]
    doc = {
        "block_number": bundle.block_number,
        "bundle_index": bundle.bundle_index,
        "coinbase": bundle.coinbase.hex0x(),
        "transactions": docs,
    }
    return json.dumps(doc, indent=1).encode()
