"""Shared randomized generators and independent reference oracles.

The generators deliberately produce hostile inputs (zero values, self
transfers, zero-address endpoints, undecodable events) alongside clean
ones.  The oracles are written as differently as possible from the
production code: exhaustive search for cycles, transitive-closure
DBSCAN, nested loops for convolution.
"""

from __future__ import annotations

import math

import numpy as np

from mevlift.actlift import ActionParam, DefiAction, Direction, TransactionActions
from mevlift.bundles import Bundle, BundleActions, TxMeta
from mevlift.registry import ActionType, TRANSFER_TOPIC, load_seed_registry
from mevlift.synth import ERC20_CODE, ERC721_CODE, PLAIN_CODE, pad_address, word
from mevlift.tracemodel import (Address, CallRecord, ExecutionTrace, LogRecord,
                                ZERO_ADDRESS)
from mevlift.transfers import AssetId

_SEED_TOPICS = list(load_seed_registry().entries)


def rng_address(rng: np.random.Generator) -> Address:
    return Address(rng.bytes(20))


def rng_amount(rng: np.random.Generator, lo_exp: int = 0,
               hi_exp: int = 27) -> int:
    exp = int(rng.integers(lo_exp, hi_exp + 1))
    mantissa = int(rng.integers(1, 1000))
    return mantissa * 10 ** exp


# ---------------------------------------------------------------------------
# Trace fuzzing


def random_trace(rng: np.random.Generator) -> ExecutionTrace:
    accounts = [rng_address(rng) for _ in range(5)]
    erc20s = [rng_address(rng) for _ in range(2)]
    nft = rng_address(rng)
    plain = rng_address(rng)
    code_index = {erc20s[0]: ERC20_CODE, erc20s[1]: ERC20_CODE,
                  nft: ERC721_CODE, plain: PLAIN_CODE}
    emitters = erc20s + [nft, plain]
    endpoints = accounts + [ZERO_ADDRESS]

    records = []
    emitted_values: list[int] = []
    emitted_transfers: list[tuple[Address, Address, Address, int]] = []
    index = 0

    def pick_value() -> int:
        return 0 if rng.random() < 0.15 else rng_amount(rng, 0, 24)

    for _ in range(int(rng.integers(0, 13))):
        kind = rng.random()
        if kind < 0.25:
            caller = endpoints[int(rng.integers(len(endpoints)))]
            callee = caller if rng.random() < 0.2 else \
                endpoints[int(rng.integers(len(endpoints)))]
            records.append(CallRecord(caller, callee, pick_value(), index))
        elif kind < 0.75:
            emitter = emitters[int(rng.integers(len(emitters)))]
            pool = endpoints + [emitter]
            from_ = pool[int(rng.integers(len(pool)))]
            to = from_ if rng.random() < 0.15 else \
                pool[int(rng.integers(len(pool)))]
            value = pick_value()
            layout = rng.random()
            if layout < 0.5:
                topics = (TRANSFER_TOPIC, pad_address(from_), pad_address(to))
                data = word(value)
            elif layout < 0.75:
                topics = (TRANSFER_TOPIC, pad_address(from_), pad_address(to),
                          word(value))
                data = b""
            elif layout < 0.9:
                topics = (TRANSFER_TOPIC,)
                data = pad_address(from_) + pad_address(to) + word(value)
            else:
                # Undecodable: fewer than three parameter words.
                topics = (TRANSFER_TOPIC, pad_address(from_))
                data = b""
            records.append(LogRecord(emitter, topics, data, index))
            if len(topics) + len(data) // 32 >= 4:
                emitted_values.append(value)
                emitted_transfers.append((emitter, from_, to, value))
        else:
            emitter = emitters[int(rng.integers(len(emitters)))]
            topic0 = _SEED_TOPICS[int(rng.integers(len(_SEED_TOPICS)))]
            words = []
            for _ in range(int(rng.integers(0, 5))):
                roll = rng.random()
                if roll < 0.35 and emitted_transfers:
                    token, from_, to, value = emitted_transfers[
                        int(rng.integers(len(emitted_transfers)))]
                    grade = rng.random()
                    words.append(word(value))
                    if grade < 0.6:
                        words.append(pad_address(token))
                    if grade < 0.3:
                        words.append(pad_address(from_))
                        words.append(pad_address(to))
                elif roll < 0.5 and emitted_values:
                    words.append(word(emitted_values[
                        int(rng.integers(len(emitted_values)))]))
                else:
                    words.append(rng.bytes(32))
            n_topics = min(int(rng.integers(0, 4)), len(words))
            topics = (topic0, *words[:n_topics])
            data = b"".join(words[n_topics:])
            records.append(LogRecord(emitter, topics, data, index))
        index += int(rng.integers(1, 4))

    sender = accounts[0]
    roll = rng.random()
    if roll < 0.1:
        recipient = None
    elif roll < 0.2:
        recipient = sender
    else:
        recipient = accounts[int(rng.integers(len(accounts)))]
    return ExecutionTrace(
        tx_hash=rng.bytes(32),
        sender=sender,
        recipient=recipient,
        tx_value=pick_value(),
        gas_used=int(rng.integers(21_000, 2_000_000)),
        effective_gas_price=int(rng.integers(1, 500)) * 10 ** 9,
        records=tuple(records),
        code_index=code_index,
    )


# ---------------------------------------------------------------------------
# Bundle fuzzing (already lifted actions, for the matrix encoder)


def _asset_pool(rng: np.random.Generator) -> list[AssetId]:
    tokens = [AssetId.token(rng_address(rng)) for _ in range(3)]
    return [AssetId.ether()] + tokens


def random_action(rng: np.random.Generator, ordinal: int,
                  assets: list[AssetId],
                  addresses: list[Address]) -> DefiAction:
    contract = addresses[int(rng.integers(len(addresses)))]
    kind = list(ActionType)[int(rng.integers(len(ActionType)))]

    def party() -> Address | None:
        if rng.random() < 0.4:
            return None
        return addresses[int(rng.integers(len(addresses)))]

    def param(direction: Direction, asset: AssetId) -> ActionParam:
        return ActionParam(rng_amount(rng), asset, direction, party())

    if kind in (ActionType.SWAP, ActionType.LIQUIDATION):
        a, b = rng.choice(len(assets), size=2, replace=False)
        params = (param(Direction.IN, assets[a]),
                  param(Direction.OUT, assets[b]))
        return DefiAction(contract, kind, params, ordinal)
    if kind in (ActionType.ADD_LIQUIDITY, ActionType.REMOVE_LIQUIDITY):
        count = int(rng.integers(1, min(3, len(assets)) + 1))
        chosen = rng.choice(len(assets), size=count, replace=False)
        direction = Direction.IN if kind is ActionType.ADD_LIQUIDITY \
            else Direction.OUT
        params = tuple(param(direction, assets[i]) for i in chosen)
        return DefiAction(contract, kind, params, ordinal)
    if kind in (ActionType.BORROWING, ActionType.LEVERAGE, ActionType.AIRDROP):
        asset = assets[int(rng.integers(len(assets)))]
        return DefiAction(contract, kind, (param(Direction.OUT, asset),),
                          ordinal)
    if kind is ActionType.REBASING:
        return DefiAction(contract, kind, (), ordinal)
    token_id = int(rng.integers(1, 10_000))
    return DefiAction(contract, kind, (), ordinal, token_id=token_id)


def random_bundle_actions(rng: np.random.Generator) -> BundleActions:
    assets = _asset_pool(rng)
    addresses = [rng_address(rng) for _ in range(6)]
    n_tx = int(rng.integers(1, 5))
    per_tx = []
    metas = []
    hashes = []
    for _ in range(n_tx):
        actions = []
        ordinal = 0
        for _ in range(int(rng.integers(0, 5))):
            ordinal += int(rng.integers(1, 5))
            actions.append(random_action(rng, ordinal, assets, addresses))
        sender = None if rng.random() < 0.2 else \
            addresses[int(rng.integers(len(addresses)))]
        recipient = None if rng.random() < 0.2 else \
            addresses[int(rng.integers(len(addresses)))]
        per_tx.append(TransactionActions(rng.bytes(32), tuple(actions),
                                         sender, recipient))
        hashes.append(per_tx[-1].tx_hash)
        metas.append(TxMeta(int(rng.integers(21_000, 1_000_000)),
                            int(rng.integers(1, 300)) * 10 ** 9))
    bundle = Bundle(
        block_number=int(rng.integers(1, 20_000_000)),
        bundle_index=int(rng.integers(0, 4)),
        tx_hashes=tuple(hashes),
        coinbase=rng_address(rng),
        tx_meta=tuple(metas),
    )
    return BundleActions(bundle, tuple(per_tx))


# ---------------------------------------------------------------------------
# Swap-cycle oracle: exhaustive chain search with memoized pruning


def random_swap_tx(rng: np.random.Generator, max_swaps: int = 8
                   ) -> TransactionActions:
    """Swaps over a small asset pool so closed chains actually occur."""
    pool = [AssetId.token(Address(bytes([i]) * 20)) for i in range(1, 5)]
    venue = rng_address(rng)
    n = int(rng.integers(0, max_swaps + 1))
    actions = []
    for i in range(n):
        a, b = rng.choice(len(pool), size=2, replace=False)
        params = (ActionParam(rng_amount(rng, 0, 20), pool[a], Direction.IN),
                  ActionParam(rng_amount(rng, 0, 20), pool[b], Direction.OUT))
        actions.append(DefiAction(venue, ActionType.SWAP, params, i))
    return TransactionActions(rng.bytes(32), tuple(actions))


def oracle_cycle_class(tx: TransactionActions) -> str | None:
    """Checks every ordering of every swap subset for a closed chain.

    Returns "CA" when the full swap set admits one, "PCA" when only a
    proper subset does, None otherwise.  The search walks chains one
    linkable swap at a time, which enumerates exactly the orderings a
    naive permutation scan would accept.
    """
    swaps = [a for a in tx.actions if a.action_type is ActionType.SWAP]
    n = len(swaps)
    if n < 2:
        return None
    ins = [next(p.asset for p in s.params if p.direction is Direction.IN)
           for s in swaps]
    outs = [next(p.asset for p in s.params if p.direction is Direction.OUT)
            for s in swaps]
    state = {"full": False, "partial": False}

    def walk(used: list[bool], first_in, last_out, length: int) -> None:
        if state["full"]:
            return
        if last_out == first_in:
            if length == n:
                state["full"] = True
                return
            state["partial"] = True
        for i in range(n):
            if not used[i] and ins[i] == last_out:
                used[i] = True
                walk(used, first_in, outs[i], length + 1)
                used[i] = False

    for start in range(n):
        used = [False] * n
        used[start] = True
        walk(used, ins[start], outs[start], 1)
        if state["full"]:
            return "CA"
    return "PCA" if state["partial"] else None


# ---------------------------------------------------------------------------
# DBSCAN reference: transitive closure over the core-core graph


def brute_force_dbscan(points, epsilon: float, min_pts: int = 2) -> list[int]:
    pts = [tuple(float(v) for v in p) for p in points]
    n = len(pts)
    if n == 0:
        return []
    within = [[math.dist(pts[i], pts[j]) <= epsilon for j in range(n)]
              for i in range(n)]
    core = [sum(row) >= min_pts for row in within]
    reach = [[within[i][j] and core[i] and core[j] for j in range(n)]
             for i in range(n)]
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                reach[i] = [a or b for a, b in zip(reach[i], reach[k])]
    labels = [-1] * n
    next_id = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = next_id
        for j in range(i + 1, n):
            if core[j] and reach[i][j]:
                labels[j] = next_id
        next_id += 1
    for i in range(n):
        if core[i]:
            continue
        for j in range(n):
            if within[i][j] and core[j]:
                labels[i] = labels[j]
                break
    return labels


def canonical_clustering(labels) -> list[int]:
    """Relabels clusters by first appearance; noise stays -1."""
    remap: dict[int, int] = {}
    out = []
    for c in labels:
        if c == -1:
            out.append(-1)
            continue
        if c not in remap:
            remap[c] = len(remap)
        out.append(remap[c])
    return out


def random_point_set(rng: np.random.Generator, max_points: int = 64
                     ) -> tuple[np.ndarray, float, int]:
    dims = int(rng.integers(1, 5))
    n = int(rng.integers(1, max_points + 1))
    style = rng.random()
    if style < 0.4:
        centers = rng.uniform(-50, 50, size=(int(rng.integers(1, 5)), dims))
        idx = rng.integers(0, len(centers), size=n)
        pts = centers[idx] + rng.normal(0, 1.5, size=(n, dims))
    elif style < 0.7:
        # Integer grids make exact-boundary distances common.
        pts = rng.integers(-6, 7, size=(n, dims)).astype(float)
    else:
        pts = rng.uniform(-30, 30, size=(n, dims))
    epsilon = float(rng.choice([1.0, 2.0, 3.0, 5.0, 8.0]))
    min_pts = int(rng.integers(2, 5))
    return pts, epsilon, min_pts


# ---------------------------------------------------------------------------
# Matrix invariants


def check_matrix_invariants(matrix, config) -> None:
    from mevlift.matrix import HEADER_ROWS

    cells = matrix.cells
    assert cells.shape == (config.height, config.max_width), cells.shape
    assert np.all(cells >= -1.0) and np.all(cells <= 1.0)
    roles = matrix.meta["columns"]
    assert len(roles) == config.max_width
    for j, role in enumerate(roles):
        col = cells[:, j]
        if role == "header":
            head = col[:HEADER_ROWS]
            assert np.all((head == 0.0) | (head == 1.0))
            assert head.sum() == 1.0
            assert np.all(col[HEADER_ROWS:] == -1.0)
        elif role in ("sep", "pad"):
            assert np.all(col == -1.0)
