"""Fixed-shape numeric encoding of bundles for the representation learner.

A bundle becomes an H x W grid.  Each action is a small column block
(one-hot type header, a separator, one column per parameter), each
transaction wraps its action blocks with sender/recipient columns and a
final asset-change column, and transactions are joined with double
separators.  Everything lands in [-1, 1]; -1 doubles as padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .actlift import DefiAction, Direction, TransactionActions
from .bundles import BundleActions
from .registry import ActionType
from .tracemodel import Address
from .transfers import AssetId

# Row layout.  The first ten rows hold the one-hot action header, the
# next four hold parameter data.  Anything past PARAM_ROWS is dead space
# kept at -1 so taller configs stay valid.
ACTION_ROW = {t: i for i, t in enumerate(ActionType)}
HEADER_ROWS = len(ACTION_ROW)
DIRECTION_ROW = HEADER_ROWS
ASSET_ROW = HEADER_ROWS + 1
AMOUNT_ROW = HEADER_ROWS + 2
ADDRESS_ROW = HEADER_ROWS + 3

PAD = -1.0

AMOUNT_SCALES = ("signed-log", "linear")


class MatrixError(ValueError):
    pass


@dataclass(frozen=True)
class MatrixConfig:
    height: int = 16
    max_width: int = 256
    amount_scale: str = "signed-log"

    def __post_init__(self) -> None:
        if self.height < HEADER_ROWS + 2:
            raise MatrixError(
                f"height must be at least {HEADER_ROWS + 2}, got {self.height}")
        if self.max_width < 8:
            raise MatrixError(f"max_width must be at least 8, got {self.max_width}")
        if self.amount_scale not in AMOUNT_SCALES:
            raise MatrixError(f"unknown amount scale {self.amount_scale!r}")


class AssetIndex:
    """Corpus-wide asset popularity ranks.

    Assets are ranked by how often they appear as action parameters, most
    frequent first, ties broken by first appearance.  Ranks normalize to
    (0, 1]; an asset the corpus never saw maps to 1.0.
    """

    def __init__(self, ranked: Sequence[AssetId] = ()) -> None:
        self._rank: dict[AssetId, int] = {}
        for asset in ranked:
            if asset not in self._rank:
                self._rank[asset] = len(self._rank)

    @classmethod
    def from_corpus(cls, bundles: Iterable[BundleActions]) -> "AssetIndex":
        counts: dict[AssetId, int] = {}
        arrival: dict[AssetId, int] = {}
        for ba in bundles:
            for _, action in ba.iter_actions():
                for p in action.params:
                    if p.asset not in counts:
                        counts[p.asset] = 0
                        arrival[p.asset] = len(arrival)
                    counts[p.asset] += 1
        ranked = sorted(counts, key=lambda a: (-counts[a], arrival[a]))
        return cls(ranked)

    def __len__(self) -> int:
        return len(self._rank)

    def __contains__(self, asset: AssetId) -> bool:
        return asset in self._rank

    def rank_of(self, asset: AssetId) -> int | None:
        return self._rank.get(asset)

    def normalized(self, asset: AssetId) -> float:
        r = self._rank.get(asset)
        if r is None:
            return 1.0
        return (r + 1) / (len(self._rank) + 1)

    def to_meta(self) -> dict[str, int]:
        return {asset.short(): rank for asset, rank in self._rank.items()}


class AddressIndex:
    """Per-transaction address numbering in order of first appearance."""

    def __init__(self, ordered: Sequence[Address] = ()) -> None:
        self._index: dict[Address, int] = {}
        for addr in ordered:
            if addr not in self._index:
                self._index[addr] = len(self._index)

    @classmethod
    def for_transaction(cls, tx: TransactionActions) -> "AddressIndex":
        seen: dict[Address, None] = {}

        def note(addr: Address | None) -> None:
            if addr is not None and addr not in seen:
                seen[addr] = None

        note(tx.sender)
        note(tx.recipient)
        for action in tx.actions:
            note(action.contract)
            for p in action.params:
                note(p.counterparty)
        return cls(tuple(seen))

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, addr: Address) -> bool:
        return addr in self._index

    def index_of(self, addr: Address) -> int:
        return self._index[addr]

    def normalized(self, addr: Address) -> float:
        return self._index[addr] / len(self._index)

    def items(self):
        return self._index.items()

    def to_meta(self) -> dict[str, int]:
        return {addr.hex0x(): i for addr, i in self._index.items()}


@dataclass(frozen=True)
class EncodingIndices:
    """Everything a single column block needs to map values into [-1, 1]."""

    config: MatrixConfig
    assets: AssetIndex
    addresses: AddressIndex
    amount_max: int = 0

    def scale_amount(self, value: int) -> float:
        return scale_amount(value, self.amount_max, self.config.amount_scale)


def scale_amount(value: int, amount_max: int, rule: str = "signed-log") -> float:
    """Squashes a (possibly signed) integer amount into [-1, 1]."""
    if value == 0:
        return 0.0
    sign = 1.0 if value > 0 else -1.0
    if amount_max <= 0:
        return sign
    if rule == "signed-log":
        scaled = math.log1p(abs(value)) / math.log1p(amount_max)
    elif rule == "linear":
        scaled = abs(value) / amount_max
    else:
        raise MatrixError(f"unknown amount scale {rule!r}")
    return sign * min(scaled, 1.0)


def _blank_column(height: int) -> np.ndarray:
    return np.full(height, PAD, dtype=np.float64)


def encode_action(action: DefiAction, indices: EncodingIndices) -> np.ndarray:
    """One action as an H x (2 + n_params) block.

    Column 0 is the one-hot type header, column 1 a separator, then one
    column per parameter carrying direction, asset rank, amount, and the
    counterparty's address index on the fixed rows.
    """
    h = indices.config.height
    header = _blank_column(h)
    header[:HEADER_ROWS] = 0.0
    header[ACTION_ROW[action.action_type]] = 1.0
    cols = [header, _blank_column(h)]
    for p in action.params:
        col = _blank_column(h)
        col[DIRECTION_ROW] = 1.0 if p.direction is Direction.IN else -1.0
        col[ASSET_ROW] = indices.assets.normalized(p.asset)
        col[AMOUNT_ROW] = indices.scale_amount(p.amount)
        if p.counterparty is not None and p.counterparty in indices.addresses:
            col[ADDRESS_ROW] = indices.addresses.normalized(p.counterparty)
        cols.append(col)
    return np.stack(cols, axis=1)


def _address_column(addr: Address | None, indices: EncodingIndices) -> np.ndarray:
    col = _blank_column(indices.config.height)
    if addr is not None and addr in indices.addresses:
        col[ADDRESS_ROW] = indices.addresses.normalized(addr)
    return col


def _dominant_asset(tx: TransactionActions) -> AssetId | None:
    counts: dict[AssetId, int] = {}
    arrival: dict[AssetId, int] = {}
    for action in tx.actions:
        for p in action.params:
            if p.asset not in counts:
                counts[p.asset] = 0
                arrival[p.asset] = len(arrival)
            counts[p.asset] += 1
    if not counts:
        return None
    return min(counts, key=lambda a: (-counts[a], arrival[a]))


def _change_column(tx: TransactionActions, indices: EncodingIndices) -> np.ndarray:
    """Net flow of the transaction's most used asset, one row per address.

    A parameter moves its amount between the action's contract and the
    counterparty: In means the contract gains, the counterparty loses.
    Rows for addresses untouched by that asset stay at zero; rows past
    the address count stay at -1.
    """
    col = _blank_column(indices.config.height)
    n = len(indices.addresses)
    if n == 0:
        return col
    col[: min(n, indices.config.height)] = 0.0
    asset = _dominant_asset(tx)
    if asset is None:
        return col
    net: dict[Address, int] = {}
    for action in tx.actions:
        for p in action.params:
            if p.asset != asset:
                continue
            delta = p.amount if p.direction is Direction.IN else -p.amount
            net[action.contract] = net.get(action.contract, 0) + delta
            if p.counterparty is not None:
                net[p.counterparty] = net.get(p.counterparty, 0) - delta
    for addr, value in net.items():
        if addr not in indices.addresses:
            continue
        row = indices.addresses.index_of(addr)
        if row < indices.config.height:
            col[row] = indices.scale_amount(value)
    return col


def encode_transaction(tx: TransactionActions,
                       indices: EncodingIndices) -> np.ndarray:
    """One transaction as a block of columns.

    Layout: sender column, recipient column, the action blocks joined by
    single separators, and a closing asset-change column.
    """
    h = indices.config.height
    cols = [_address_column(tx.sender, indices),
            _address_column(tx.recipient, indices)]
    for i, action in enumerate(tx.actions):
        if i > 0:
            cols.append(_blank_column(h))
        block = encode_action(action, indices)
        cols.extend(block[:, j] for j in range(block.shape[1]))
    cols.append(_change_column(tx, indices))
    return np.stack(cols, axis=1)


def _transaction_roles(tx: TransactionActions) -> list[str]:
    roles = ["sender", "recipient"]
    for i, action in enumerate(tx.actions):
        if i > 0:
            roles.append("sep")
        roles.extend(["header", "sep"])
        roles.extend("param" for _ in action.params)
    roles.append("change")
    return roles


@dataclass(frozen=True, eq=False)
class BundleMatrix:
    """An encoded bundle: H x W float grid plus the maps that built it.

    meta carries "columns" (a role tag per column), "addresses" (one
    per-transaction address map), "assets" (the popularity ranks used)
    and "amount_max".
    """

    cells: np.ndarray
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.cells.ndim != 2:
            raise MatrixError(f"cells must be 2-D, got shape {self.cells.shape}")
        if not np.all((self.cells >= -1.0) & (self.cells <= 1.0)):
            raise MatrixError("matrix cells must lie in [-1, 1]")
        columns = self.meta.get("columns")
        if columns is not None and len(columns) != self.cells.shape[1]:
            raise MatrixError("column role list does not match matrix width")

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])


def bundle_amount_max(bundle: BundleActions) -> int:
    """Largest parameter amount in the bundle; the shared scale anchor."""
    best = 0
    for _, action in bundle.iter_actions():
        for p in action.params:
            if p.amount > best:
                best = p.amount
    return best


def encode_bundle(bundle: BundleActions,
                  config: MatrixConfig = MatrixConfig(),
                  assets: AssetIndex | None = None,
                  amount_max: int | None = None) -> BundleMatrix:
    """The whole bundle as an H x W matrix.

    Transaction blocks appear in order, separated by double separator
    columns, then the grid is truncated or padded with -1 out to W.
    Pass a corpus-level AssetIndex (and a shared amount_max) when
    encoding many bundles against one scale; by default both come from
    the bundle itself.
    """
    if assets is None:
        assets = AssetIndex.from_corpus([bundle])
    if amount_max is None:
        amount_max = bundle_amount_max(bundle)
    h, w = config.height, config.max_width
    cols: list[np.ndarray] = []
    roles: list[str] = []
    address_meta: list[dict[str, int]] = []
    for tx in bundle.per_tx:
        addresses = AddressIndex.for_transaction(tx)
        address_meta.append(addresses.to_meta())
        indices = EncodingIndices(config, assets, addresses, amount_max)
        if cols:
            cols.append(_blank_column(h))
            cols.append(_blank_column(h))
            roles.extend(["sep", "sep"])
        block = encode_transaction(tx, indices)
        cols.extend(block[:, j] for j in range(block.shape[1]))
        roles.extend(_transaction_roles(tx))
    if cols:
        cells = np.stack(cols, axis=1)
    else:
        cells = np.empty((h, 0), dtype=np.float64)
    if cells.shape[1] > w:
        cells = cells[:, :w]
        roles = roles[:w]
    elif cells.shape[1] < w:
        pad = np.full((h, w - cells.shape[1]), PAD, dtype=np.float64)
        cells = np.concatenate([cells, pad], axis=1)
        roles.extend("pad" for _ in range(w - len(roles)))
    meta = {
        "columns": tuple(roles),
        "addresses": tuple(address_meta),
        "assets": assets.to_meta(),
        "amount_max": amount_max,
    }
    return BundleMatrix(cells, meta)


def matrix_to_csv(matrix: BundleMatrix) -> str:
    """Debug dump: one CSV line per row, cells as 6-decimal fixed point."""
    lines = []
    for row in matrix.cells:
        lines.append(",".join(f"{cell:.6f}" for cell in row))
    return "\n".join(lines) + "\n"
