"""Event signature registry: maps event topic hashes to DeFi action types.

The registry is a data file, not code, so analysts can extend coverage without
rebuilding. A seed registry with well-known public contract events ships in
mevlift/data/seed_registry.json.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .keccak import event_topic

# ERC20/721 Transfer(address,address,uint256). Handled structurally by the
# transfer extractor (token transfers and the NFT mint/burn pathway), never as
# a direct action-type mapping.
TRANSFER_TOPIC = bytes.fromhex(
    "ddf252ad1be2c89b69c2b068fc378daa952ba7f163c4a11628f55a4df523b3ef")


class ActionType(Enum):
    SWAP = "Swap"
    ADD_LIQUIDITY = "AddLiquidity"
    REMOVE_LIQUIDITY = "RemoveLiquidity"
    BORROWING = "Borrowing"
    LEVERAGE = "Leverage"
    LIQUIDATION = "Liquidation"
    NFT_MINTING = "NftMinting"
    NFT_BURNING = "NftBurning"
    AIRDROP = "Airdrop"
    REBASING = "Rebasing"


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class RegistryEntry:
    signature_hash: bytes
    event: str  # textual declaration, doubles as the human-readable label
    action: ActionType
    source: str


@dataclass(frozen=True)
class EventRegistry:
    entries: dict[bytes, RegistryEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, topic0: bytes) -> bool:
        return topic0 in self.entries


def action_type_of(registry: EventRegistry, topic0: bytes) -> ActionType | None:
    entry = registry.entries.get(topic0)
    return entry.action if entry else None


def load_registry(document: bytes) -> EventRegistry:
    """Parse a registry JSON document (array of entry objects).

    Rejects duplicate signature hashes, unknown action names, and any attempt
    to map the ERC20 Transfer topic directly to an action type.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise RegistryError(f"registry is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise RegistryError("registry document must be a JSON array")

    entries: dict[bytes, RegistryEntry] = {}
    for pos, item in enumerate(doc):
        if not isinstance(item, dict):
            raise RegistryError(f"entry {pos} is not an object")
        try:
            hash_hex = item["signature_hash"]
            event = item["event"]
            action_name = item["action"]
        except KeyError as exc:
            raise RegistryError(f"entry {pos} missing field {exc}") from exc
        raw = hash_hex[2:] if hash_hex.startswith("0x") else hash_hex
        if len(raw) != 64:
            raise RegistryError(f"entry {pos}: signature_hash must be 32 bytes hex")
        sig = bytes.fromhex(raw)
        try:
            action = ActionType(action_name)
        except ValueError:
            raise RegistryError(
                f"entry {pos}: unknown action type {action_name!r}") from None
        if sig == TRANSFER_TOPIC:
            raise RegistryError(
                f"entry {pos}: the Transfer topic is handled structurally and "
                "cannot be registered as an action event")
        if sig in entries:
            raise RegistryError(
                f"entry {pos}: duplicate signature hash 0x{sig.hex()} "
                f"(already mapped to {entries[sig].action.value})")
        entries[sig] = RegistryEntry(sig, event, action, item.get("source", ""))
    return EventRegistry(entries)


def serialize_registry(registry: EventRegistry) -> bytes:
    doc = [
        {
            "signature_hash": "0x" + entry.signature_hash.hex(),
            "event": entry.event,
            "action": entry.action.value,
            "source": entry.source,
        }
        for entry in registry.entries.values()
    ]
    return json.dumps(doc, indent=1).encode()


def make_entry(event: str, action: ActionType, source: str = "") -> RegistryEntry:
    """Build an entry from a textual declaration, hashing it for the caller."""
    return RegistryEntry(event_topic(event), event, action, source)


def load_seed_registry() -> EventRegistry:
    """The registry shipped with the package."""
    data = resources.files("mevlift.data").joinpath("seed_registry.json").read_bytes()
    return load_registry(data)
