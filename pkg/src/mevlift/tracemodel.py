"""Canonical data model for distilled execution traces.

A trace here is not an opcode-level replay: it is the distilled record of what
the lifting pipeline actually consumes, namely emitted event logs, value-bearing
calls, and the deployed bytecode of every contract that emitted a log. Producers
(an archive-node adapter, or the JSON fixture format below) are responsible for
excluding records from reverted subcalls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Protocol, Union

UINT256_MAX = (1 << 256) - 1

Amount = int  # unsigned 256-bit; validated at construction boundaries


def check_amount(value: int, what: str = "amount") -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"{what} must be an int, got {type(value).__name__}")
    if value < 0 or value > UINT256_MAX:
        raise ValueError(f"{what} out of uint256 range: {value}")
    return value


class Address(bytes):
    """A 20-byte account address. Subclasses bytes, so hashing and equality
    come for free and instances are cheap to pass around."""

    def __new__(cls, value: bytes) -> "Address":
        if len(value) != 20:
            raise ValueError(f"address must be 20 bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        raw = text[2:] if text.startswith(("0x", "0X")) else text
        if len(raw) != 40:
            raise ValueError(f"address hex must be 40 chars, got {len(raw)}: {text!r}")
        return cls(bytes.fromhex(raw))

    def hex0x(self) -> str:
        return "0x" + self.hex()

    def __repr__(self) -> str:
        return f"Address({self.hex0x()})"


ZERO_ADDRESS = Address(b"\x00" * 20)


class TraceFormatError(ValueError):
    """Raised when a fixture document violates the trace schema."""

    def __init__(self, message: str, field_name: str | None = None):
        super().__init__(message)
        self.field_name = field_name


def _word(text: str, what: str) -> bytes:
    raw = text[2:] if text.startswith(("0x", "0X")) else text
    if len(raw) != 64:
        raise TraceFormatError(f"{what} must be a 32-byte hex word, got {text!r}", what)
    return bytes.fromhex(raw)


@dataclass(frozen=True)
class LogRecord:
    emitter: Address
    topics: tuple[bytes, ...]  # topic0 = event signature hash
    data: bytes
    trace_index: int

    def __post_init__(self) -> None:
        if not self.topics:
            raise ValueError("log record needs at least topic0")
        if len(self.topics) > 4:
            raise ValueError(f"log record has {len(self.topics)} topics, max is 4")
        for t in self.topics:
            if len(t) != 32:
                raise ValueError("log topics must be 32-byte words")
        if len(self.data) % 32:
            raise ValueError(f"log data length {len(self.data)} is not a multiple of 32")

    @property
    def signature(self) -> bytes:
        return self.topics[0]

    def data_words(self) -> tuple[bytes, ...]:
        return tuple(self.data[i:i + 32] for i in range(0, len(self.data), 32))


@dataclass(frozen=True)
class CallRecord:
    caller: Address
    callee: Address
    value: Amount
    trace_index: int

    def __post_init__(self) -> None:
        check_amount(self.value, "call value")


TraceRecord = Union[LogRecord, CallRecord]


@dataclass(frozen=True)
class ExecutionTrace:
    tx_hash: bytes
    sender: Address
    recipient: Address | None  # absent for contract creation
    tx_value: Amount
    gas_used: int
    effective_gas_price: Amount
    records: tuple[TraceRecord, ...]
    code_index: Mapping[Address, bytes] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.tx_hash) != 32:
            raise ValueError(f"tx hash must be 32 bytes, got {len(self.tx_hash)}")
        check_amount(self.tx_value, "tx value")
        check_amount(self.effective_gas_price, "effective gas price")
        last = -1
        for record in self.records:
            if record.trace_index <= last:
                raise ValueError("trace record ordinals must be strictly increasing")
            last = record.trace_index
            if isinstance(record, LogRecord) and record.emitter not in self.code_index:
                raise ValueError(
                    f"log emitter {record.emitter.hex0x()} missing from code index")

    def code_of(self, address: Address) -> bytes:
        return self.code_index.get(address, b"")


def events_of(trace: ExecutionTrace) -> list[LogRecord]:
    """All emitted events, in trace order."""
    return [r for r in trace.records if isinstance(r, LogRecord)]


def parse_trace_fixture(document: bytes) -> ExecutionTrace:
    """Parse the repository's JSON trace fixture format.

    Top level: tx_hash, from, to (null for creation), value, gas_used,
    effective_gas_price, records (tagged log/call objects), code (address to
    hex bytecode). Amount-like fields are decimal strings or ints.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise TraceFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TraceFormatError("trace document must be a JSON object")

    def req(name: str):
        if name not in doc:
            raise TraceFormatError(f"missing field {name!r}", name)
        return doc[name]

    def amount_of(value, what: str) -> int:
        try:
            parsed = int(value) if isinstance(value, str) else value
            return check_amount(parsed, what)
        except (TypeError, ValueError) as exc:
            raise TraceFormatError(f"bad {what}: {value!r}", what) from exc

    try:
        tx_hash = _word(str(req("tx_hash")), "tx_hash")
    except TraceFormatError:
        raise
    try:
        sender = Address.from_hex(str(req("from")))
    except ValueError as exc:
        raise TraceFormatError(str(exc), "from") from exc
    to_raw = doc.get("to")
    try:
        recipient = Address.from_hex(str(to_raw)) if to_raw else None
    except ValueError as exc:
        raise TraceFormatError(str(exc), "to") from exc

    tx_value = amount_of(req("value"), "value")
    gas_used = amount_of(req("gas_used"), "gas_used")
    gas_price = amount_of(req("effective_gas_price"), "effective_gas_price")

    code_index: dict[Address, bytes] = {}
    for addr_text, code_hex in (doc.get("code") or {}).items():
        try:
            addr = Address.from_hex(addr_text)
        except ValueError as exc:
            raise TraceFormatError(str(exc), "code") from exc
        raw = code_hex[2:] if code_hex.startswith("0x") else code_hex
        try:
            code_index[addr] = bytes.fromhex(raw)
        except ValueError as exc:
            raise TraceFormatError(f"bad bytecode for {addr_text}", "code") from exc

    records: list[TraceRecord] = []
    for pos, entry in enumerate(req("records") or []):
        if not isinstance(entry, dict) or "type" not in entry:
            raise TraceFormatError(f"record {pos} is not a tagged object", "records")
        kind = entry["type"]
        index = entry.get("index")
        if not isinstance(index, int):
            raise TraceFormatError(f"record {pos} has no integer index", "index")
        try:
            if kind == "log":
                emitter = Address.from_hex(str(entry["emitter"]))
                topics = tuple(_word(t, "topic") for t in entry["topics"])
                data_hex = entry.get("data", "0x")
                raw = data_hex[2:] if data_hex.startswith("0x") else data_hex
                data = bytes.fromhex(raw)
                if len(data) % 32:
                    raise TraceFormatError(
                        f"record {pos}: log data length {len(data)} not a multiple of 32",
                        "data")
                records.append(LogRecord(emitter, topics, data, index))
            elif kind == "call":
                records.append(CallRecord(
                    Address.from_hex(str(entry["caller"])),
                    Address.from_hex(str(entry["callee"])),
                    amount_of(entry.get("value", 0), "call value"),
                    index))
            else:
                raise TraceFormatError(f"record {pos}: unknown type {kind!r}", "type")
        except TraceFormatError:
            raise
        except (KeyError, ValueError, TypeError) as exc:
            raise TraceFormatError(f"record {pos}: {exc}", "records") from exc

    try:
        return ExecutionTrace(tx_hash, sender, recipient, tx_value, gas_used,
                              gas_price, tuple(records), code_index)
    except ValueError as exc:
        raise TraceFormatError(str(exc)) from exc


def serialize_trace_fixture(trace: ExecutionTrace) -> bytes:
    """Inverse of parse_trace_fixture (round-trips structurally)."""
    records = []
    for record in trace.records:
        if isinstance(record, LogRecord):
            records.append({
                "type": "log",
                "emitter": record.emitter.hex0x(),
                "topics": ["0x" + t.hex() for t in record.topics],
                "data": "0x" + record.data.hex(),
                "index": record.trace_index,
            })
        else:
            records.append({
                "type": "call",
                "caller": record.caller.hex0x(),
                "callee": record.callee.hex0x(),
                "value": str(record.value),
                "index": record.trace_index,
            })
    doc = {
        "tx_hash": "0x" + trace.tx_hash.hex(),
        "from": trace.sender.hex0x(),
        "to": trace.recipient.hex0x() if trace.recipient else None,
        "value": str(trace.tx_value),
        "gas_used": trace.gas_used,
        "effective_gas_price": str(trace.effective_gas_price),
        "records": records,
        "code": {a.hex0x(): "0x" + c.hex() for a, c in trace.code_index.items()},
    }
    return json.dumps(doc, indent=1).encode()


class TraceSource(Protocol):
    """Anything that can produce a trace for a transaction hash. The bundled
    implementation reads fixtures; an archive-node adapter satisfies the same
    contract by distilling debug trace output into ExecutionTrace."""

    def get_trace(self, tx_hash: bytes) -> ExecutionTrace: ...

    def __contains__(self, tx_hash: bytes) -> bool: ...


class FixtureTraceSource:
    """Trace source over fixture files.

    Accepts a directory of per-transaction files named ``<tx hash hex>.json``
    or a single JSON file holding an array of trace documents.
    """

    def __init__(self, path) -> None:
        from pathlib import Path
        self._traces: dict[bytes, ExecutionTrace] = {}
        path = Path(path)
        if path.is_dir():
            for child in sorted(path.glob("*.json")):
                trace = parse_trace_fixture(child.read_bytes())
                self._traces[trace.tx_hash] = trace
        else:
            doc = json.loads(path.read_bytes())
            items = doc if isinstance(doc, list) else [doc]
            for item in items:
                trace = parse_trace_fixture(json.dumps(item).encode())
                self._traces[trace.tx_hash] = trace

    def get_trace(self, tx_hash: bytes) -> ExecutionTrace:
        try:
            return self._traces[tx_hash]
        except KeyError:
            raise KeyError(f"no trace for 0x{tx_hash.hex()}") from None

    def __contains__(self, tx_hash: bytes) -> bool:
        return tx_hash in self._traces

    def __iter__(self) -> Iterator[ExecutionTrace]:
        return iter(self._traces.values())

    def __len__(self) -> int:
        return len(self._traces)


class MemoryTraceSource:
    """Trace source over traces already in memory, keyed by hash."""

    def __init__(self, traces=()) -> None:
        self._traces: dict[bytes, ExecutionTrace] = {t.tx_hash: t for t in traces}

    def add(self, trace: ExecutionTrace) -> None:
        self._traces[trace.tx_hash] = trace

    def get_trace(self, tx_hash: bytes) -> ExecutionTrace:
        try:
            return self._traces[tx_hash]
        except KeyError:
            raise KeyError(f"no trace for 0x{tx_hash.hex()}") from None

    def __contains__(self, tx_hash: bytes) -> bool:
        return tx_hash in self._traces

    def __len__(self) -> int:
        return len(self._traces)
