"""Asset transfer recognition over execution traces.

Three families of transfers are recognized: Ether movements (value-bearing
calls plus the transaction-level value), ERC20-style token transfers decoded
from Transfer events, and ERC721 mint/burn shapes (zero-address or self
endpoints on a contract that passes the ERC721 bytecode check).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .keccak import keccak256
from .registry import TRANSFER_TOPIC
from .tracemodel import (Address, Amount, CallRecord, ExecutionTrace, LogRecord,
                         ZERO_ADDRESS, check_amount)


class AssetKind(Enum):
    ETHER = "ether"
    TOKEN = "token"
    ERC721 = "erc721"


@dataclass(frozen=True)
class AssetId:
    kind: AssetKind
    contract: Address | None = None

    def __post_init__(self) -> None:
        if self.kind is AssetKind.ETHER:
            if self.contract is not None:
                raise ValueError("ether carries no contract address")
        elif self.contract is None:
            raise ValueError(f"{self.kind.value} asset needs a contract address")

    @classmethod
    def ether(cls) -> "AssetId":
        return cls(AssetKind.ETHER)

    @classmethod
    def token(cls, contract: Address) -> "AssetId":
        return cls(AssetKind.TOKEN, contract)

    @classmethod
    def erc721(cls, contract: Address) -> "AssetId":
        return cls(AssetKind.ERC721, contract)

    def short(self) -> str:
        if self.kind is AssetKind.ETHER:
            return "ether"
        return f"{self.kind.value}:{self.contract.hex0x()}"

    @classmethod
    def from_short(cls, text: str) -> "AssetId":
        if text == "ether":
            return cls.ether()
        kind_name, _, addr = text.partition(":")
        return cls(AssetKind(kind_name), Address.from_hex(addr))


ETHER = AssetId.ether()


class TransferKind(Enum):
    ETHER_TRANSFER = "ether_transfer"
    TOKEN_TRANSFER = "token_transfer"
    ERC721_MINT = "erc721_mint"
    ERC721_BURN = "erc721_burn"


@dataclass(frozen=True)
class AssetTransfer:
    asset: AssetId
    from_: Address
    to: Address
    value: Amount  # token id for the ERC721 kinds
    trace_index: int
    kind: TransferKind

    def __post_init__(self) -> None:
        check_amount(self.value, "transfer value")
        if self.kind in (TransferKind.ETHER_TRANSFER, TransferKind.TOKEN_TRANSFER):
            if self.value == 0:
                raise ValueError(f"{self.kind.value} with zero value")
            if self.from_ == self.to:
                raise ValueError(f"{self.kind.value} with identical endpoints")
        if self.kind is TransferKind.TOKEN_TRANSFER:
            special = (ZERO_ADDRESS, self.asset.contract)
            if self.from_ in special or self.to in special:
                raise ValueError("token transfer endpoint is zero or the token itself")
        if self.kind in (TransferKind.ERC721_MINT, TransferKind.ERC721_BURN):
            if self.asset.kind is not AssetKind.ERC721:
                raise ValueError(f"{self.kind.value} must carry an erc721 asset")
            special = (ZERO_ADDRESS, self.asset.contract)
            minted = self.kind is TransferKind.ERC721_MINT
            source, sink = (self.from_, self.to) if minted else (self.to, self.from_)
            if source not in special:
                raise ValueError(f"{self.kind.value} origin must be zero or the contract")
            if sink in special:
                raise ValueError(f"{self.kind.value} counterparty is zero or the contract")


class TokenStandard(Enum):
    ERC20 = "erc20"
    ERC721 = "erc721"
    NEITHER = "neither"


def _selector(signature: str) -> bytes:
    return keccak256(signature.encode("ascii"))[:4]


ERC20_SELECTORS = tuple(_selector(s) for s in (
    "totalSupply()",
    "balanceOf(address)",
    "transfer(address,uint256)",
    "transferFrom(address,address,uint256)",
    "approve(address,uint256)",
    "allowance(address,address)",
))

ERC721_SELECTORS = tuple(_selector(s) for s in (
    "ownerOf(uint256)",
    "getApproved(uint256)",
    "setApprovalForAll(address,bool)",
    "isApprovedForAll(address,address)",
    "safeTransferFrom(address,address,uint256)",
    "safeTransferFrom(address,address,uint256,bytes)",
))

PUSH4 = b"\x63"
STANDARD_THRESHOLD = 3


def is_token_contract(code: bytes) -> TokenStandard:
    """Classify deployed bytecode by scanning its dispatcher for standard
    function selectors (a selector counts when PUSH4 immediately precedes it).
    ERC721 wins when both thresholds are met, being the stricter claim."""
    if not code:
        return TokenStandard.NEITHER
    erc20_hits = sum(1 for sel in ERC20_SELECTORS if PUSH4 + sel in code)
    erc721_hits = sum(1 for sel in ERC721_SELECTORS if PUSH4 + sel in code)
    if erc721_hits >= STANDARD_THRESHOLD:
        return TokenStandard.ERC721
    if erc20_hits >= STANDARD_THRESHOLD:
        return TokenStandard.ERC20
    return TokenStandard.NEITHER


class StandardDetector:
    """Caching wrapper around is_token_contract.

    Also remembers address-to-bytecode bindings from traces it has observed,
    so later pipeline stages can ask about a contract by address alone (the
    rebase action check needs this after the trace itself is out of scope).
    """

    def __init__(self) -> None:
        self._by_code: dict[bytes, TokenStandard] = {}
        self._code_of: dict[Address, bytes] = {}

    def observe_trace(self, trace: ExecutionTrace) -> None:
        self._code_of.update(trace.code_index)

    def classify_code(self, code: bytes) -> TokenStandard:
        cached = self._by_code.get(code)
        if cached is None:
            cached = is_token_contract(code)
            self._by_code[code] = cached
        return cached

    def classify_address(self, address: Address) -> TokenStandard:
        return self.classify_code(self._code_of.get(address, b""))


def decode_transfer_event(record: LogRecord) -> tuple[Address, Address, int] | None:
    """Decode (from, to, value-or-token-id) from a Transfer event.

    Parameters are taken uniformly as topics[1:] followed by the data words,
    which covers the indexed 3-topic ERC20 layout, the 4-topic ERC721 layout,
    and unindexed layouts alike. Returns None when fewer than 3 parameter
    words are present.
    """
    params = record.topics[1:] + record.data_words()
    if len(params) < 3:
        return None
    return (Address(params[0][-20:]), Address(params[1][-20:]),
            int.from_bytes(params[2], "big"))


def extract_all_transfers(trace: ExecutionTrace,
                          standards: StandardDetector) -> list[AssetTransfer]:
    """All asset transfers of a transaction, in trace order.

    The transaction-level Ether transfer, when present, is emitted first with
    ordinal -1. Records that fail their occurrence or filter conditions are
    skipped silently.
    """
    standards.observe_trace(trace)
    out: list[AssetTransfer] = []

    if (trace.tx_value != 0 and trace.recipient is not None
            and trace.sender != trace.recipient):
        out.append(AssetTransfer(ETHER, trace.sender, trace.recipient,
                                 trace.tx_value, -1, TransferKind.ETHER_TRANSFER))

    for record in trace.records:
        if isinstance(record, CallRecord):
            if record.value != 0 and record.caller != record.callee:
                out.append(AssetTransfer(ETHER, record.caller, record.callee,
                                         record.value, record.trace_index,
                                         TransferKind.ETHER_TRANSFER))
            continue
        if record.signature != TRANSFER_TOPIC:
            continue
        decoded = decode_transfer_event(record)
        if decoded is None:
            continue
        from_, to, value = decoded
        contract = record.emitter
        special = (ZERO_ADDRESS, contract)
        if from_ in special and to not in special:
            if standards.classify_code(trace.code_of(contract)) is TokenStandard.ERC721:
                out.append(AssetTransfer(AssetId.erc721(contract), from_, to, value,
                                         record.trace_index, TransferKind.ERC721_MINT))
        elif to in special and from_ not in special:
            if standards.classify_code(trace.code_of(contract)) is TokenStandard.ERC721:
                out.append(AssetTransfer(AssetId.erc721(contract), from_, to, value,
                                         record.trace_index, TransferKind.ERC721_BURN))
        elif (from_ not in special and to not in special
              and value != 0 and from_ != to):
            out.append(AssetTransfer(AssetId.token(contract), from_, to, value,
                                     record.trace_index, TransferKind.TOKEN_TRANSFER))
    return out
