"""Per-bundle miner revenue: transaction gas fees plus direct Ether
payments to the block's coinbase, with per-block aggregation.

All arithmetic is exact integer wei; a sum that would leave uint256
range raises instead of wrapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .bundles import Bundle, IncompleteBundleError
from .tracemodel import Amount, TraceSource, UINT256_MAX, check_amount
from .transfers import AssetKind, StandardDetector, extract_all_transfers


class RevenueError(ValueError):
    pass


class RevenueOverflowError(RevenueError):
    pass


def _checked_add(a: int, b: int, what: str) -> int:
    total = a + b
    if total > UINT256_MAX:
        raise RevenueOverflowError(f"{what} exceeds uint256")
    return total


@dataclass(frozen=True)
class BundleRevenue:
    block_number: int
    bundle_index: int
    gas_fee_total: Amount
    coinbase_transfer_total: Amount
    total: Amount

    def __post_init__(self) -> None:
        check_amount(self.gas_fee_total, "gas_fee_total")
        check_amount(self.coinbase_transfer_total, "coinbase_transfer_total")
        check_amount(self.total, "total")
        if self.total != self.gas_fee_total + self.coinbase_transfer_total:
            raise RevenueError("total must equal gas fees plus coinbase transfers")


def bundle_revenue(bundle: Bundle, traces: TraceSource,
                   standards: StandardDetector | None = None) -> BundleRevenue:
    """Gas fees from the bundle's receipts plus Ether transfers whose
    recipient is the coinbase, discovered in the execution traces."""
    if standards is None:
        standards = StandardDetector()
    gas_total = 0
    for meta in bundle.tx_meta:
        fee = meta.gas_used * meta.effective_gas_price
        if fee > UINT256_MAX:
            raise RevenueOverflowError("single transaction fee exceeds uint256")
        gas_total = _checked_add(gas_total, fee, "gas fee total")
    coinbase_total = 0
    missing = []
    for tx_hash in bundle.tx_hashes:
        try:
            trace = traces.get_trace(tx_hash)
        except KeyError:
            missing.append(tx_hash)
            continue
        for transfer in extract_all_transfers(trace, standards):
            if transfer.asset.kind is AssetKind.ETHER and \
                    transfer.to == bundle.coinbase:
                coinbase_total = _checked_add(
                    coinbase_total, transfer.value, "coinbase transfer total")
    if missing:
        raise IncompleteBundleError(bundle, missing)
    return BundleRevenue(
        block_number=bundle.block_number,
        bundle_index=bundle.bundle_index,
        gas_fee_total=gas_total,
        coinbase_transfer_total=coinbase_total,
        total=_checked_add(gas_total, coinbase_total, "bundle revenue"),
    )


def block_revenue(series: Iterable[BundleRevenue]) -> dict[int, Amount]:
    """Sums bundle revenue per block, keyed and ordered by block number."""
    totals: dict[int, int] = {}
    for item in series:
        totals[item.block_number] = _checked_add(
            totals.get(item.block_number, 0), item.total,
            f"block {item.block_number} revenue")
    return {block: totals[block] for block in sorted(totals)}


CSV_HEADER = "block_number,bundle_index,gas_fee_wei,coinbase_wei,total_wei"


def revenue_to_csv(series: Iterable[BundleRevenue]) -> str:
    lines = [CSV_HEADER]
    for item in series:
        lines.append(f"{item.block_number},{item.bundle_index},"
                     f"{item.gas_fee_total},{item.coinbase_transfer_total},"
                     f"{item.total}")
    return "\n".join(lines) + "\n"
