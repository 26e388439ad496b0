"""Deterministic builders for synthetic traces and bundles.

Used by the test suite, the shipped fixture generator, and the clustering
demo corpus. Everything is derived from string tags through keccak, so the
same tag always produces the same addresses, hashes, and traces.
"""

from __future__ import annotations

from .bundles import Bundle, BundleActions, TxMeta, lift_bundle
from .keccak import event_topic, keccak256
from .registry import TRANSFER_TOPIC, EventRegistry, load_seed_registry
from .tracemodel import (Address, CallRecord, ExecutionTrace, LogRecord,
                         MemoryTraceSource, ZERO_ADDRESS)
from .transfers import (ERC20_SELECTORS, ERC721_SELECTORS, PUSH4, AssetId,
                        AssetKind, StandardDetector)
from .actlift import DEFAULT_MATCH, MatchConfig


UNIV2_SWAP = event_topic("Swap(address,uint256,uint256,uint256,uint256,address)")
UNIV2_MINT = event_topic("Mint(address,uint256,uint256)")
UNIV2_BURN = event_topic("Burn(address,uint256,uint256,address)")
AMPL_REBASE = event_topic("LogRebase(uint256,uint256)")
CLAIMED = event_topic("Claimed(uint256,address,uint256)")
AAVE_BORROW = event_topic("Borrow(address,address,address,uint256,uint256,uint256,uint16)")
KASHI_BORROW = event_topic("LogBorrow(address,address,uint256,uint256)")
AAVE_LIQUIDATION = event_topic(
    "LiquidationCall(address,address,address,uint256,uint256,address,bool)")

# Solidity-style prologue so synthetic bytecode is not empty.
_PROLOGUE = bytes.fromhex("6080604052")

PLAIN_CODE = _PROLOGUE + bytes.fromhex("348015600f57600080fd5b50")
ERC20_CODE = _PROLOGUE + b"".join(PUSH4 + sel + b"\x14" for sel in ERC20_SELECTORS)
ERC721_CODE = _PROLOGUE + b"".join(PUSH4 + sel + b"\x14" for sel in ERC721_SELECTORS)


def tag_address(tag: str) -> Address:
    return Address(keccak256(b"addr:" + tag.encode())[-20:])


def tag_hash(tag: str) -> bytes:
    return keccak256(b"tx:" + tag.encode())


def word(value: int) -> bytes:
    return value.to_bytes(32, "big")


def pad_address(address: Address) -> bytes:
    return bytes(12) + bytes(address)


class TraceBuilder:
    def __init__(self, tag: str, sender: Address, recipient: Address | None,
                 value: int = 0, gas_used: int = 90_000,
                 gas_price: int = 30 * 10 ** 9) -> None:
        self.tx_hash = tag_hash(tag)
        self.sender = sender
        self.recipient = recipient
        self.value = value
        self.gas_used = gas_used
        self.gas_price = gas_price
        self._records: list = []
        self._code: dict[Address, bytes] = {}

    def set_code(self, address: Address, code: bytes) -> None:
        self._code.setdefault(address, code)

    def call(self, caller: Address, callee: Address, value: int) -> None:
        self._records.append(CallRecord(caller, callee, value, len(self._records)))

    def log(self, emitter: Address, topics: list[bytes], data: bytes = b"",
            code: bytes = PLAIN_CODE) -> None:
        self.set_code(emitter, code)
        self._records.append(LogRecord(emitter, tuple(topics), data,
                                       len(self._records)))

    def erc20_transfer(self, token: Address, from_: Address, to: Address,
                       value: int) -> None:
        self.log(token, [TRANSFER_TOPIC, pad_address(from_), pad_address(to)],
                 word(value), code=ERC20_CODE)

    def erc721_transfer(self, collection: Address, from_: Address, to: Address,
                        token_id: int) -> None:
        self.log(collection,
                 [TRANSFER_TOPIC, pad_address(from_), pad_address(to), word(token_id)],
                 b"", code=ERC721_CODE)

    def build(self) -> ExecutionTrace:
        return ExecutionTrace(self.tx_hash, self.sender, self.recipient,
                              self.value, self.gas_used, self.gas_price,
                              tuple(self._records), dict(self._code))


def add_swap(b: TraceBuilder, sender: Address, venue: Address,
             asset_in: AssetId, amount_in: int,
             asset_out: AssetId, amount_out: int,
             recipient: Address | None = None) -> None:
    """One swap on a venue: in leg, out leg, then the venue's Swap event with
    both amounts among its data words."""
    recipient = recipient or sender
    b.set_code(venue, PLAIN_CODE)
    if asset_in.kind is AssetKind.ETHER:
        b.call(sender, venue, amount_in)
    else:
        b.erc20_transfer(asset_in.contract, sender, venue, amount_in)
    if asset_out.kind is AssetKind.ETHER:
        b.call(venue, recipient, amount_out)
    else:
        b.erc20_transfer(asset_out.contract, venue, recipient, amount_out)
    b.log(venue, [UNIV2_SWAP, pad_address(sender), pad_address(recipient)],
          word(amount_in) + word(0) + word(0) + word(amount_out))


def add_liquidity(b: TraceBuilder, sender: Address, venue: Address,
                  legs: list[tuple[AssetId, int]]) -> None:
    b.set_code(venue, PLAIN_CODE)
    for asset, amount in legs:
        if asset.kind is AssetKind.ETHER:
            b.call(sender, venue, amount)
        else:
            b.erc20_transfer(asset.contract, sender, venue, amount)
    b.log(venue, [UNIV2_MINT, pad_address(sender)],
          b"".join(word(amount) for _, amount in legs))


def remove_liquidity(b: TraceBuilder, sender: Address, venue: Address,
                     legs: list[tuple[AssetId, int]]) -> None:
    b.set_code(venue, PLAIN_CODE)
    for asset, amount in legs:
        if asset.kind is AssetKind.ETHER:
            b.call(venue, sender, amount)
        else:
            b.erc20_transfer(asset.contract, venue, sender, amount)
    b.log(venue, [UNIV2_BURN, pad_address(sender), pad_address(sender)],
          b"".join(word(amount) for _, amount in legs))


def add_rebase(b: TraceBuilder, token: Address, epoch: int = 1,
               total_supply: int = 10 ** 24) -> None:
    b.log(token, [AMPL_REBASE, word(epoch)], word(total_supply), code=ERC20_CODE)


def add_airdrop(b: TraceBuilder, distributor: Address, token: Address,
                recipient: Address, amount: int, claim_index: int = 0) -> None:
    b.set_code(distributor, PLAIN_CODE)
    b.erc20_transfer(token, distributor, recipient, amount)
    b.log(distributor, [CLAIMED],
          word(claim_index) + pad_address(recipient) + word(amount))


def add_borrow(b: TraceBuilder, pool: Address, token: Address,
               borrower: Address, amount: int) -> None:
    b.set_code(pool, PLAIN_CODE)
    b.erc20_transfer(token, pool, borrower, amount)
    b.log(pool, [AAVE_BORROW, pad_address(token), pad_address(borrower), word(0)],
          pad_address(borrower) + word(amount) + word(2) + word(3 * 10 ** 25))


def add_leverage(b: TraceBuilder, platform: Address, token: Address,
                 user: Address, amount: int) -> None:
    b.set_code(platform, PLAIN_CODE)
    b.erc20_transfer(token, platform, user, amount)
    b.log(platform, [KASHI_BORROW, pad_address(platform), pad_address(user)],
          word(amount) + word(amount))


def add_liquidation(b: TraceBuilder, pool: Address, liquidator: Address,
                    debt_asset: AssetId, repay_amount: int,
                    collateral_asset: AssetId, seized_amount: int,
                    user: Address) -> None:
    b.set_code(pool, PLAIN_CODE)
    if debt_asset.kind is AssetKind.ETHER:
        b.call(liquidator, pool, repay_amount)
    else:
        b.erc20_transfer(debt_asset.contract, liquidator, pool, repay_amount)
    if collateral_asset.kind is AssetKind.ETHER:
        b.call(pool, liquidator, seized_amount)
    else:
        b.erc20_transfer(collateral_asset.contract, pool, liquidator, seized_amount)
    coll = (collateral_asset.contract if collateral_asset.kind is not AssetKind.ETHER
            else ZERO_ADDRESS)
    debt = (debt_asset.contract if debt_asset.kind is not AssetKind.ETHER
            else ZERO_ADDRESS)
    b.log(pool, [AAVE_LIQUIDATION, pad_address(coll), pad_address(debt),
                 pad_address(user)],
          word(repay_amount) + word(seized_amount) + pad_address(liquidator) + word(1))


def add_nft_mint(b: TraceBuilder, collection: Address, to: Address,
                 token_id: int) -> None:
    b.erc721_transfer(collection, ZERO_ADDRESS, to, token_id)


def add_nft_burn(b: TraceBuilder, collection: Address, from_: Address,
                 token_id: int) -> None:
    b.erc721_transfer(collection, from_, ZERO_ADDRESS, token_id)


def add_coinbase_tip(b: TraceBuilder, from_: Address, coinbase: Address,
                     value: int) -> None:
    b.call(from_, coinbase, value)


class BundleBuilder:
    def __init__(self, tag: str, block_number: int, bundle_index: int = 0,
                 coinbase: Address | None = None) -> None:
        self.tag = tag
        self.block_number = block_number
        self.bundle_index = bundle_index
        self.coinbase = coinbase or tag_address("coinbase")
        self._txs: list[TraceBuilder] = []

    def tx(self, sender: Address, recipient: Address | None = None,
           value: int = 0, gas_used: int = 90_000,
           gas_price: int = 30 * 10 ** 9) -> TraceBuilder:
        builder = TraceBuilder(f"{self.tag}:{len(self._txs)}", sender,
                               recipient, value, gas_used, gas_price)
        self._txs.append(builder)
        return builder

    def build(self) -> tuple[Bundle, MemoryTraceSource]:
        traces = [tb.build() for tb in self._txs]
        bundle = Bundle(
            self.block_number, self.bundle_index,
            tuple(t.tx_hash for t in traces), self.coinbase,
            tuple(TxMeta(t.gas_used, t.effective_gas_price) for t in traces))
        return bundle, MemoryTraceSource(traces)

    def build_actions(self, registry: EventRegistry | None = None,
                      config: MatchConfig = DEFAULT_MATCH,
                      standards: StandardDetector | None = None) -> BundleActions:
        if registry is None:
            registry = load_seed_registry()
        bundle, source = self.build()
        return lift_bundle(bundle, source, registry, config, standards)


def ether() -> AssetId:
    return AssetId.ether()


def token(tag: str) -> AssetId:
    return AssetId.token(tag_address(tag))


ETH = 10 ** 18


def sandwich_bundle(tag: str, block_number: int, bundle_index: int = 0,
                    victims: int = 1, front_in: int = 10 * ETH,
                    back_out: int = 11 * ETH) -> BundleBuilder:
    """Front-run swap, one or more victim swaps in the same direction on the
    same venue, then the attacker's reverse swap."""
    bb = BundleBuilder(tag, block_number, bundle_index)
    attacker = tag_address(f"{tag}:attacker")
    venue = tag_address(f"{tag}:venue")
    tok = token(f"{tag}:token")
    tokens_bought = front_in * 120
    b = bb.tx(attacker, venue)
    add_swap(b, attacker, venue, ether(), front_in, tok, tokens_bought)
    for v in range(victims):
        victim = tag_address(f"{tag}:victim:{v}")
        b = bb.tx(victim, venue)
        add_swap(b, victim, venue, ether(), 2 * ETH + v * ETH // 2,
                 tok, 200 * ETH + v * ETH)
    b = bb.tx(attacker, venue)
    add_swap(b, attacker, venue, tok, tokens_bought, ether(), back_out)
    return bb


def cyclic_arb_bundle(tag: str, block_number: int, bundle_index: int = 0,
                      profit: int = ETH // 2) -> BundleBuilder:
    """One transaction swapping A -> B -> C -> A across three venues."""
    bb = BundleBuilder(tag, block_number, bundle_index)
    arber = tag_address(f"{tag}:arber")
    a, c = ether(), token(f"{tag}:tokC")
    bmid = token(f"{tag}:tokB")
    tb = bb.tx(arber)
    add_swap(tb, arber, tag_address(f"{tag}:v1"), a, 4 * ETH, bmid, 900 * ETH)
    add_swap(tb, arber, tag_address(f"{tag}:v2"), bmid, 900 * ETH, c, 30 * ETH)
    add_swap(tb, arber, tag_address(f"{tag}:v3"), c, 30 * ETH, a, 4 * ETH + profit)
    return bb


def liquidation_bundle(tag: str, block_number: int,
                       bundle_index: int = 0) -> BundleBuilder:
    bb = BundleBuilder(tag, block_number, bundle_index)
    liquidator = tag_address(f"{tag}:liquidator")
    pool = tag_address(f"{tag}:pool")
    tb = bb.tx(liquidator, pool)
    add_liquidation(tb, pool, liquidator, token(f"{tag}:debt"), 5_000 * ETH,
                    token(f"{tag}:coll"), 3 * ETH, tag_address(f"{tag}:user"))
    return bb


def rebase_backrun_bundle(tag: str, block_number: int, bundle_index: int = 0,
                          rebase_token: Address | None = None,
                          venue: Address | None = None,
                          sold: int = 22_625_150_000_000,
                          bought: int = 42_610_000_000_000_000_000) -> BundleBuilder:
    """A token rebase followed by a separate transaction selling that token."""
    bb = BundleBuilder(tag, block_number, bundle_index)
    rebase_token = rebase_token or tag_address(f"{tag}:rebase-token")
    venue = venue or tag_address(f"{tag}:venue")
    caller = tag_address(f"{tag}:caller")
    arber = tag_address(f"{tag}:arber")
    tb = bb.tx(caller, rebase_token)
    add_rebase(tb, rebase_token)
    tb = bb.tx(arber, venue)
    add_swap(tb, arber, venue, AssetId.token(rebase_token), sold, ether(), bought)
    return bb


def failed_arb_bundle(tag: str, block_number: int, bundle_index: int = 0,
                      venue_a: Address | None = None,
                      venue_b: Address | None = None,
                      spent: int = 32_060_000_000_000_000_000,
                      recovered: int = 9_800_000_000_000_000_000) -> BundleBuilder:
    """A trader's swap followed by a backrun cycle that loses money."""
    bb = BundleBuilder(tag, block_number, bundle_index)
    venue_a = venue_a or tag_address(f"{tag}:venueA")
    venue_b = venue_b or tag_address(f"{tag}:venueB")
    trader = tag_address(f"{tag}:trader")
    arber = tag_address(f"{tag}:arber")
    tok = token(f"{tag}:tok")
    tb = bb.tx(trader, venue_a)
    add_swap(tb, trader, venue_a, tok, 5_000 * ETH, ether(), 6 * ETH // 5)
    tb = bb.tx(arber, venue_a)
    add_swap(tb, arber, venue_a, ether(), spent, tok, 130_000 * ETH)
    add_swap(tb, arber, venue_b, tok, 130_000 * ETH, ether(), recovered)
    return bb


def liquidity_sandwich_bundle(tag: str, block_number: int,
                              bundle_index: int = 0) -> BundleBuilder:
    """Add liquidity, let a victim swap through the pool, remove liquidity."""
    bb = BundleBuilder(tag, block_number, bundle_index)
    provider = tag_address(f"{tag}:provider")
    victim = tag_address(f"{tag}:victim")
    venue = tag_address(f"{tag}:venue")
    tok = token(f"{tag}:token")
    tb = bb.tx(provider, venue)
    add_liquidity(tb, provider, venue, [(ether(), 50 * ETH), (tok, 6_000 * ETH)])
    tb = bb.tx(victim, venue)
    add_swap(tb, victim, venue, ether(), 3 * ETH, tok, 350 * ETH)
    tb = bb.tx(provider, venue)
    remove_liquidity(tb, provider, venue,
                     [(ether(), 52 * ETH), (tok, 5_700 * ETH)])
    return bb


def liquidity_trade_bundle(tag: str, block_number: int,
                           bundle_index: int = 0) -> BundleBuilder:
    """One transaction both adding liquidity and swapping on the same venue."""
    bb = BundleBuilder(tag, block_number, bundle_index)
    actor = tag_address(f"{tag}:actor")
    venue = tag_address(f"{tag}:venue")
    tok = token(f"{tag}:token")
    tb = bb.tx(actor, venue)
    add_liquidity(tb, actor, venue, [(ether(), 20 * ETH), (tok, 2_400 * ETH)])
    add_swap(tb, actor, venue, ether(), 2 * ETH, tok, 230 * ETH)
    return bb


def nft_reforge_bundle(tag: str, block_number: int, bundle_index: int = 0,
                       token_id: int = 7) -> BundleBuilder:
    """Burn an NFT and mint the same token id again in one transaction."""
    bb = BundleBuilder(tag, block_number, bundle_index)
    owner = tag_address(f"{tag}:owner")
    collection = tag_address(f"{tag}:collection")
    tb = bb.tx(owner, collection)
    add_nft_burn(tb, collection, owner, token_id)
    add_nft_mint(tb, collection, owner, token_id)
    return bb


def airdrop_claim_bundle(tag: str, block_number: int,
                         bundle_index: int = 0) -> BundleBuilder:
    bb = BundleBuilder(tag, block_number, bundle_index)
    claimer = tag_address(f"{tag}:claimer")
    distributor = tag_address(f"{tag}:distributor")
    tb = bb.tx(claimer, distributor)
    add_airdrop(tb, distributor, tag_address(f"{tag}:token"), claimer, 1_000 * ETH)
    return bb


def plain_swap_bundle(tag: str, block_number: int,
                      bundle_index: int = 0) -> BundleBuilder:
    bb = BundleBuilder(tag, block_number, bundle_index)
    trader = tag_address(f"{tag}:trader")
    venue = tag_address(f"{tag}:venue")
    tb = bb.tx(trader, venue)
    add_swap(tb, trader, venue, ether(), 1 * ETH, token(f"{tag}:token"), 117 * ETH)
    return bb
