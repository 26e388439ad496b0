#!/usr/bin/env python3
"""Regenerates the JSON fixtures under tests/fixtures.

Everything here is deterministic: addresses and hashes derive from fixed
literals or tags, so reruns are bit-identical. Run from the repo root:

    python3 scripts/build_fixtures.py
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mevlift.synth import (BundleBuilder, TraceBuilder, UNIV2_SWAP,
                           add_coinbase_tip, cyclic_arb_bundle,
                           failed_arb_bundle, liquidity_sandwich_bundle,
                           liquidity_trade_bundle, nft_reforge_bundle,
                           pad_address, rebase_backrun_bundle,
                           sandwich_bundle, tag_address, word, ETH)
from mevlift.bundles import serialize_bundle_fixture
from mevlift.tracemodel import Address, serialize_trace_fixture

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

HEX_TOKEN = Address.from_hex("0x2b591e99afe9f32eaa6214f7b7629768c40eeb39")
USDC_TOKEN = Address.from_hex("0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48")
ROUTER = Address.from_hex("0x7a250d5630b4cf539739df2c5dacb4c659f2488d")
PAIR = Address.from_hex("0x69d9170ded2450f227a165a1c4f4318e9cebb3d0")
TRADER = Address.from_hex("0x3c5fa0b23a0df54de7e9eef25e0e49571c368a40")

HEX_IN = 50_018_700_000_000      # 500,187 HEX at 8 decimals
USDC_OUT = 14_082_220_000       # 14,082.22 USDC at 6 decimals


def hex_usdc_swap_trace() -> bytes:
    """A router-mediated HEX -> USDC swap with five asset transfers.

    The pool leg amounts appear in the pool's Swap event, the user legs
    reuse the same values, so value matching finds all four token
    transfers but only the pool legs touch the emitting contract.
    """
    b = TraceBuilder("hex-usdc-swap", TRADER, ROUTER)
    b.call(TRADER, ROUTER, 0)
    b.erc20_transfer(HEX_TOKEN, TRADER, ROUTER, HEX_IN)
    b.call(ROUTER, PAIR, 0)
    b.erc20_transfer(USDC_TOKEN, PAIR, ROUTER, USDC_OUT)
    b.erc20_transfer(HEX_TOKEN, ROUTER, PAIR, HEX_IN)
    b.log(PAIR, [UNIV2_SWAP, pad_address(ROUTER), pad_address(ROUTER)],
          word(HEX_IN) + word(0) + word(0) + word(USDC_OUT))
    b.erc20_transfer(USDC_TOKEN, ROUTER, TRADER, USDC_OUT)
    return serialize_trace_fixture(b.build())


def revenue_bundle() -> bytes:
    """One 21000-gas transaction at 100 gwei that tips the coinbase 1 ETH."""
    bb = BundleBuilder("revenue-fixture", block_number=15_537_394)
    payer = tag_address("revenue-payer")
    t = bb.tx(sender=payer, gas_used=21_000, gas_price=100 * 10 ** 9)
    add_coinbase_tip(t, payer, bb.coinbase, 1 * ETH)
    bundle, source = bb.build()
    return serialize_bundle_fixture(bundle, source)


def bundle_feed() -> str:
    """A tiny bundle feed: one block carrying two bundles."""
    bundles = []
    for index in range(2):
        bb = BundleBuilder("feed-fixture", block_number=14_000_100,
                           bundle_index=index)
        sender = tag_address(f"feed-sender-{index}")
        t = bb.tx(sender=sender, gas_used=150_000 + index * 10_000)
        t.call(sender, tag_address("feed-sink"), 10 ** 15)
        bundle, _ = bb.build()
        bundles.append(bundle)
    doc = {
        "block_number": 14_000_100,
        "coinbase": bundles[0].coinbase.hex0x(),
        "bundles": [
            {
                "bundle_index": b.bundle_index,
                "txs": [
                    {"hash": "0x" + h.hex(), "gas_used": m.gas_used,
                     "effective_gas_price": m.effective_gas_price}
                    for h, m in zip(b.tx_hashes, b.tx_meta)
                ],
            }
            for b in bundles
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    scenarios = {
        "rebase_backrun_bundle.json": rebase_backrun_bundle("fixture-rba", 13_000_000),
        "multi_victim_sandwich_bundle.json": sandwich_bundle(
            "fixture-mba", 13_100_000, victims=2),
        "failed_arb_bundle.json": failed_arb_bundle("fixture-fa", 13_200_000),
        "sandwich_bundle.json": sandwich_bundle("fixture-sa", 13_300_000),
        "cyclic_arb_bundle.json": cyclic_arb_bundle("fixture-ca", 13_400_000),
        "liquidity_sandwich_bundle.json": liquidity_sandwich_bundle(
            "fixture-lsa", 13_500_000),
        "liquidity_trade_bundle.json": liquidity_trade_bundle(
            "fixture-lt", 13_600_000),
        "nft_reforge_bundle.json": nft_reforge_bundle("fixture-nr", 13_700_000),
    }
    for name, builder in scenarios.items():
        bundle, source = builder.build()
        (FIXTURES / name).write_bytes(serialize_bundle_fixture(bundle, source))

    (FIXTURES / "hex_usdc_swap.json").write_bytes(hex_usdc_swap_trace())
    (FIXTURES / "revenue_bundle.json").write_bytes(revenue_bundle())
    (FIXTURES / "bundle_feed.json").write_text(bundle_feed(), encoding="utf-8")
    print(f"wrote {len(scenarios) + 3} fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
