"""Lifting execution traces into typed DeFi actions.

Two steps. S-1 collects evidence: for every registered event in a trace it
gathers the transfers whose values (and, under stricter match modes, whose
addresses) are embedded in that event's words. S-2 turns each evidence item
into a concrete action by walking the matched transfers with per-action-type
rules (swap leg pairing, liquidity scans, and so on).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .registry import ActionType, EventRegistry, TRANSFER_TOPIC, action_type_of
from .tracemodel import (Address, Amount, ExecutionTrace, LogRecord, check_amount,
                         events_of)
from .transfers import (AssetId, AssetKind, AssetTransfer, StandardDetector,
                        TokenStandard, TransferKind, extract_all_transfers)


class MatchMode(Enum):
    C1 = "c1"  # transfer value appears among the event words
    C2 = "c2"  # c1, plus the asset contract address appears
    C3 = "c3"  # c2, plus both endpoint addresses appear


@dataclass(frozen=True)
class MatchConfig:
    mode: MatchMode = MatchMode.C1


DEFAULT_MATCH = MatchConfig()


class Direction(Enum):
    IN = "in"
    OUT = "out"


@dataclass(frozen=True)
class ActionParam:
    amount: Amount
    asset: AssetId
    direction: Direction
    counterparty: Address | None = None

    def __post_init__(self) -> None:
        check_amount(self.amount, "param amount")


@dataclass(frozen=True)
class DefiAction:
    contract: Address
    action_type: ActionType
    params: tuple[ActionParam, ...]
    ordinal: int
    token_id: Amount | None = None

    def __post_init__(self) -> None:
        t = self.action_type
        n_in = sum(1 for p in self.params if p.direction is Direction.IN)
        n_out = len(self.params) - n_in
        if t in (ActionType.SWAP, ActionType.LIQUIDATION):
            if n_in != 1 or n_out != 1:
                raise ValueError(f"{t.value} needs exactly one In and one Out param")
            if self.params[0].asset == self.params[1].asset:
                raise ValueError(f"{t.value} legs must carry distinct assets")
        elif t is ActionType.ADD_LIQUIDITY:
            if not self.params or n_out:
                raise ValueError("AddLiquidity needs one or more In params only")
        elif t is ActionType.REMOVE_LIQUIDITY:
            if not self.params or n_in:
                raise ValueError("RemoveLiquidity needs one or more Out params only")
        elif t in (ActionType.BORROWING, ActionType.LEVERAGE, ActionType.AIRDROP):
            if n_in != 0 or n_out != 1:
                raise ValueError(f"{t.value} needs exactly one Out param")
        elif t is ActionType.REBASING:
            if self.params:
                raise ValueError("Rebasing carries no params")
        elif t in (ActionType.NFT_MINTING, ActionType.NFT_BURNING):
            if self.params or self.token_id is None:
                raise ValueError(f"{t.value} carries a token id and no params")
        if t not in (ActionType.NFT_MINTING, ActionType.NFT_BURNING) and self.token_id is not None:
            raise ValueError(f"{t.value} does not carry a token id")
        distinct = {p.asset for p in self.params}
        if t in (ActionType.ADD_LIQUIDITY, ActionType.REMOVE_LIQUIDITY) and len(distinct) != len(self.params):
            raise ValueError(f"{t.value} params must carry distinct assets")


@dataclass(frozen=True)
class TransactionActions:
    tx_hash: bytes
    actions: tuple[DefiAction, ...]
    sender: Address | None = None
    recipient: Address | None = None

    def __post_init__(self) -> None:
        ordinals = [a.ordinal for a in self.actions]
        if any(b <= a for a, b in zip(ordinals, ordinals[1:])):
            raise ValueError("action ordinals must be strictly increasing")


@dataclass(frozen=True)
class ActionEvidence:
    contract: Address
    action_type: ActionType
    transfers: tuple[AssetTransfer, ...]
    event_ordinal: int


def _word_as_uint(word: bytes) -> int:
    return int.from_bytes(word, "big")


def _word_as_abs_signed(word: bytes) -> int:
    u = int.from_bytes(word, "big")
    if u >> 255:
        u -= 1 << 256
    return abs(u)


def is_logged(transfer: AssetTransfer, event: LogRecord, config: MatchConfig) -> bool:
    """Whether a transfer is reflected in an event's words under the
    configured match mode. Words are the non-signature topics followed by the
    32-byte data words; one word may satisfy several conditions at once."""
    words = list(event.topics[1:]) + list(event.data_words())
    if not any(_word_as_uint(w) == transfer.value
               or _word_as_abs_signed(w) == transfer.value for w in words):
        return False
    if config.mode is MatchMode.C1:
        return True
    if transfer.asset.kind is AssetKind.ETHER:
        return False
    if not any(w[-20:] == bytes(transfer.asset.contract) for w in words):
        return False
    if config.mode is MatchMode.C2:
        return True
    return (any(w[-20:] == bytes(transfer.from_) for w in words)
            and any(w[-20:] == bytes(transfer.to) for w in words))


_NFT_EVIDENCE = {
    TransferKind.ERC721_MINT: ActionType.NFT_MINTING,
    TransferKind.ERC721_BURN: ActionType.NFT_BURNING,
}


def step_s1(trace: ExecutionTrace, registry: EventRegistry, config: MatchConfig,
            standards: StandardDetector | None = None) -> list[ActionEvidence]:
    """Evidence collection: one entry per registered event occurrence, plus
    synthesized NFT mint/burn entries for Transfer events that decode to an
    ERC721 shape."""
    if standards is None:
        standards = StandardDetector()
    transfers = extract_all_transfers(trace, standards)
    by_index = {t.trace_index: t for t in transfers}
    evidence: list[ActionEvidence] = []
    for event in events_of(trace):
        action = action_type_of(registry, event.signature)
        if action is not None:
            matched = tuple(t for t in transfers if is_logged(t, event, config))
            evidence.append(ActionEvidence(event.emitter, action, matched,
                                           event.trace_index))
            continue
        if event.signature == TRANSFER_TOPIC:
            own = by_index.get(event.trace_index)
            if own is not None and own.kind in _NFT_EVIDENCE:
                evidence.append(ActionEvidence(event.emitter, _NFT_EVIDENCE[own.kind],
                                               (own,), event.trace_index))
    return evidence


def _first_leg_pair(contract: Address, transfers: tuple[AssetTransfer, ...],
                    ) -> tuple[AssetTransfer, AssetTransfer] | None:
    """First completed (inbound, outbound) pair with distinct assets, walking
    the matched transfers in trace order."""
    pending_in: list[AssetTransfer] = []
    pending_out: list[AssetTransfer] = []
    for t in transfers:
        if t.to == contract:
            for out in pending_out:
                if out.asset != t.asset:
                    return t, out
            pending_in.append(t)
        elif t.from_ == contract:
            for inc in pending_in:
                if inc.asset != t.asset:
                    return inc, t
            pending_out.append(t)
    return None


def _liquidity_scan(contract: Address, transfers: tuple[AssetTransfer, ...],
                    inbound: bool) -> list[AssetTransfer]:
    taken: list[AssetTransfer] = []
    seen: set[AssetId] = set()
    for t in transfers:
        at_contract = t.to == contract if inbound else t.from_ == contract
        if at_contract and t.asset not in seen:
            seen.add(t.asset)
            taken.append(t)
    return taken


def _action_for(evidence: ActionEvidence, standards: StandardDetector,
                ordinal: int) -> DefiAction | None:
    c = evidence.contract
    t = evidence.action_type
    ts = evidence.transfers
    if t in (ActionType.SWAP, ActionType.LIQUIDATION):
        pair = _first_leg_pair(c, ts)
        if pair is None:
            return None
        leg_in, leg_out = pair
        return DefiAction(c, t, (
            ActionParam(leg_in.value, leg_in.asset, Direction.IN, leg_in.from_),
            ActionParam(leg_out.value, leg_out.asset, Direction.OUT, leg_out.to),
        ), ordinal)
    if t in (ActionType.ADD_LIQUIDITY, ActionType.REMOVE_LIQUIDITY):
        inbound = t is ActionType.ADD_LIQUIDITY
        legs = _liquidity_scan(c, ts, inbound)
        if not legs:
            return None
        direction = Direction.IN if inbound else Direction.OUT
        return DefiAction(c, t, tuple(
            ActionParam(leg.value, leg.asset, direction,
                        leg.from_ if inbound else leg.to) for leg in legs), ordinal)
    if t in (ActionType.BORROWING, ActionType.LEVERAGE, ActionType.AIRDROP):
        for leg in ts:
            if leg.from_ == c:
                return DefiAction(c, t, (
                    ActionParam(leg.value, leg.asset, Direction.OUT, leg.to),), ordinal)
        return None
    if t is ActionType.REBASING:
        if standards.classify_address(c) is TokenStandard.NEITHER:
            return None
        return DefiAction(c, t, (), ordinal)
    if t in (ActionType.NFT_MINTING, ActionType.NFT_BURNING):
        wanted = (TransferKind.ERC721_MINT if t is ActionType.NFT_MINTING
                  else TransferKind.ERC721_BURN)
        for leg in ts:
            if leg.kind is wanted and leg.asset.contract == c:
                return DefiAction(c, t, (), ordinal, token_id=leg.value)
        return None
    return None


def step_s2(evidence: list[ActionEvidence], standards: StandardDetector,
            tx_hash: bytes = b"\x00" * 32, sender: Address | None = None,
            recipient: Address | None = None) -> TransactionActions:
    """Action recovery: dispatch each evidence item to its per-type rule.
    Evidence that does not complete a valid action yields nothing."""
    actions: list[DefiAction] = []
    for item in evidence:
        action = _action_for(item, standards, len(actions))
        if action is not None:
            actions.append(action)
    return TransactionActions(tx_hash, tuple(actions), sender, recipient)


def lift_transaction(trace: ExecutionTrace, registry: EventRegistry,
                     config: MatchConfig = DEFAULT_MATCH,
                     standards: StandardDetector | None = None) -> TransactionActions:
    if standards is None:
        standards = StandardDetector()
    evidence = step_s1(trace, registry, config, standards)
    return step_s2(evidence, standards, trace.tx_hash, trace.sender,
                   trace.recipient)


def naive_first_pair(transfers: list[AssetTransfer],
                     ) -> tuple[AssetTransfer, AssetTransfer] | None:
    """Baseline account-matching heuristic: the first transfer pair, scanned
    lexicographically, where one party sends one asset and receives another.
    Kept as a comparison point; it picks outer legs through intermediaries
    instead of the legs actually crossing the venue."""
    for i, a in enumerate(transfers):
        for j, b in enumerate(transfers):
            if i != j and a.from_ == b.to and a.asset != b.asset:
                return a, b
    return None


def action_to_dict(action: DefiAction) -> dict:
    doc: dict = {
        "contract": action.contract.hex0x(),
        "type": action.action_type.value,
        "params": [{
            "asset": p.asset.short(),
            "amount": str(p.amount),
            "dir": p.direction.value,
            "counterparty": p.counterparty.hex0x() if p.counterparty else None,
        } for p in action.params],
    }
    if action.token_id is not None:
        doc["token_id"] = str(action.token_id)
    return doc


def action_from_dict(doc: dict, ordinal: int) -> DefiAction:
    token_id = doc.get("token_id")
    return DefiAction(
        Address.from_hex(doc["contract"]),
        ActionType(doc["type"]),
        tuple(ActionParam(int(p["amount"]), AssetId.from_short(p["asset"]),
                          Direction(p["dir"]),
                          Address.from_hex(p["counterparty"]) if p.get("counterparty") else None)
              for p in doc["params"]),
        ordinal,
        token_id=int(token_id) if token_id is not None else None,
    )


def transaction_actions_to_json(ta: TransactionActions) -> str:
    doc = {"tx_hash": "0x" + ta.tx_hash.hex(),
           "actions": [action_to_dict(a) for a in ta.actions]}
    if ta.sender is not None:
        doc["sender"] = ta.sender.hex0x()
    if ta.recipient is not None:
        doc["recipient"] = ta.recipient.hex0x()
    return json.dumps(doc, separators=(",", ":"))


def transaction_actions_from_json(line: str) -> TransactionActions:
    doc = json.loads(line)
    hash_text = doc["tx_hash"]
    if hash_text.startswith("0x"):
        hash_text = hash_text[2:]
    sender = Address.from_hex(doc["sender"]) if doc.get("sender") else None
    recipient = Address.from_hex(doc["recipient"]) if doc.get("recipient") else None
    return TransactionActions(
        bytes.fromhex(hash_text),
        tuple(action_from_dict(a, i) for i, a in enumerate(doc["actions"])),
        sender, recipient)
