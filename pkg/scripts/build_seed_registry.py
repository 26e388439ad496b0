#!/usr/bin/env python3
"""Regenerate mevlift/data/seed_registry.json from event declarations.

The declarations below are real events of well-known public contracts. The
shipped file freezes their topic hashes; tests re-derive every hash from the
declaration text, so edits here stay consistent by construction.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mevlift.keccak import event_topic

SEED = [
    # (event declaration, action, source note)
    ("Swap(address indexed sender, uint amount0In, uint amount1In, uint amount0Out, uint amount1Out, address indexed to)",
     "Swap", "Uniswap V2 pair (also SushiSwap and other forks)"),
    ("Swap(address indexed sender, address indexed recipient, int256 amount0, int256 amount1, uint160 sqrtPriceX96, uint128 liquidity, int24 tick)",
     "Swap", "Uniswap V3 pool"),
    ("TokenExchange(address indexed buyer, int128 sold_id, uint256 tokens_sold, int128 bought_id, uint256 tokens_bought)",
     "Swap", "Curve stable-swap pool"),
    ("Mint(address indexed sender, uint amount0, uint amount1)",
     "AddLiquidity", "Uniswap V2 pair"),
    ("Mint(address sender, address indexed owner, int24 indexed tickLower, int24 indexed tickUpper, uint128 amount, uint256 amount0, uint256 amount1)",
     "AddLiquidity", "Uniswap V3 pool"),
    ("AddLiquidity(address indexed provider, uint256[2] token_amounts, uint256[2] fees, uint256 invariant, uint256 token_supply)",
     "AddLiquidity", "Curve 2-coin pool"),
    ("Burn(address indexed sender, uint amount0, uint amount1, address indexed to)",
     "RemoveLiquidity", "Uniswap V2 pair"),
    ("Burn(address indexed owner, int24 indexed tickLower, int24 indexed tickUpper, uint128 amount, uint256 amount0, uint256 amount1)",
     "RemoveLiquidity", "Uniswap V3 pool"),
    ("RemoveLiquidity(address indexed provider, uint256[2] token_amounts, uint256[2] fees, uint256 token_supply)",
     "RemoveLiquidity", "Curve 2-coin pool"),
    ("Borrow(address indexed reserve, address user, address indexed onBehalfOf, uint256 amount, uint256 borrowRateMode, uint256 borrowRate, uint16 indexed referral)",
     "Borrowing", "Aave V2 LendingPool"),
    ("Borrow(address borrower, uint borrowAmount, uint accountBorrows, uint totalBorrows)",
     "Borrowing", "Compound cToken"),
    ("Work(uint256 id, uint256 loan)",
     "Leverage", "Alpha Homora v1 Bank, leveraged farming position"),
    ("LogBorrow(address indexed from, address indexed to, uint256 amount, uint256 part)",
     "Leverage", "Abracadabra Cauldron / Kashi-style leveraged lending"),
    ("LiquidationCall(address indexed collateralAsset, address indexed debtAsset, address indexed user, uint256 debtToCover, uint256 liquidatedCollateralAmount, address liquidator, bool receiveAToken)",
     "Liquidation", "Aave V2 LendingPool"),
    ("LiquidateBorrow(address liquidator, address borrower, uint repayAmount, address cTokenCollateral, uint seizeTokens)",
     "Liquidation", "Compound cToken"),
    ("Claimed(uint256 index, address account, uint256 amount)",
     "Airdrop", "Uniswap MerkleDistributor (UNI airdrop)"),
    ("RewardsClaimed(address account, uint256 amount)",
     "Airdrop", "dYdX merkle rewards distributor"),
    ("LogRebase(uint256 indexed epoch, uint256 totalSupply)",
     "Rebasing", "Ampleforth UFragments"),
    ("LogRebase(uint256 indexed epoch, uint256 rebase, uint256 index)",
     "Rebasing", "Olympus staked OHM"),
]


def main() -> None:
    out = []
    for event, action, source in SEED:
        out.append({
            "signature_hash": "0x" + event_topic(event).hex(),
            "event": event,
            "action": action,
            "source": source,
        })
    target = Path(__file__).resolve().parent.parent / "src/mevlift/data/seed_registry.json"
    target.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {len(out)} entries to {target}")


if __name__ == "__main__":
    main()
