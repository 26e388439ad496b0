"""MEV activity detection over lifted bundles.

Twenty activity kinds: the three long-known ones (sandwich, cyclic
arbitrage, liquidation) plus seventeen further patterns over DeFi action
sequences. Each detector is a small predicate over the bundle's per-
transaction action lists; hunt() unions them with the precedence rules
documented on each detector (most-specific shape wins).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .actlift import ActionParam, DefiAction, Direction, TransactionActions
from .bundles import BundleActions
from .registry import ActionType
from .tracemodel import Address
from .transfers import AssetId


class MevActivityType(Enum):
    SA = "Sandwich Attack"
    CA = "Cyclic Arbitrage"
    LI = "Liquidation"
    SBA = "Swap Backrun Arbitrage"
    LBA = "Liquidity Backrun Arbitrage"
    LSA = "Liquidity Sandwich Arbitrage"
    MBA = "Multi-layered Burger Arbitrage"
    LT = "Liquidity-swap Trade"
    PCA = "Partial Cyclic Arbitrage"
    BCA = "Backrun Cyclic Arbitrage"
    HA = "Hybrid Arbitrage"
    FA = "Failed Arbitrage"
    NST = "Non-cyclic Swap Trade"
    RBA = "Rebasing Backrun Arbitrage"
    AT = "Airdrop-swap Trade"
    BN = "Bulk NFT-Minting"
    NR = "NFT Reforging"
    AC = "Airdrop Claiming"
    NT = "NFT-Minting-swap Trade"
    LA = "Loan-powered Arbitrage"


KNOWN_ACTIVITIES = (MevActivityType.SA, MevActivityType.CA, MevActivityType.LI)

_EXACTLY_ONE_TX = {
    MevActivityType.CA, MevActivityType.PCA, MevActivityType.LI,
    MevActivityType.LT, MevActivityType.AT, MevActivityType.BN,
    MevActivityType.NR, MevActivityType.AC, MevActivityType.NT,
    MevActivityType.LA, MevActivityType.HA,
}
_EXACTLY_TWO_TX = {
    MevActivityType.SBA, MevActivityType.LBA, MevActivityType.BCA,
    MevActivityType.RBA,
}


@dataclass(frozen=True)
class MevFinding:
    activity: MevActivityType
    block_number: int
    bundle_index: int
    tx_indices: tuple[int, ...]
    contracts: tuple[Address, ...]
    assets: tuple[AssetId, ...]
    covered: tuple[tuple[int, int], ...] = ()
    profit: int | None = None
    profit_asset: AssetId | None = None

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.tx_indices, self.tx_indices[1:])):
            raise ValueError("witness tx indices must be strictly increasing")
        if not self.tx_indices:
            raise ValueError("witness needs at least one transaction")
        n = len(self.tx_indices)
        if self.activity in _EXACTLY_ONE_TX and n != 1:
            raise ValueError(f"{self.activity.name} witness must be one transaction")
        if self.activity in _EXACTLY_TWO_TX and n != 2:
            raise ValueError(f"{self.activity.name} witness must be two transactions")
        if self.activity in (MevActivityType.SA, MevActivityType.MBA) and n < 3:
            raise ValueError(f"{self.activity.name} witness needs at least three transactions")
        if self.activity is MevActivityType.LSA and n != 3:
            raise ValueError("LSA witness must be three transactions")


def finding_to_doc(finding: MevFinding) -> dict:
    doc = {
        "block": finding.block_number,
        "bundle_index": finding.bundle_index,
        "activity": finding.activity.name,
        "activity_name": finding.activity.value,
        "witness": {
            "txs": list(finding.tx_indices),
            "contracts": [c.hex0x() for c in finding.contracts],
            "assets": [a.short() for a in finding.assets],
            "covered": [list(pair) for pair in finding.covered],
        },
    }
    if finding.profit is not None:
        doc["profit"] = str(finding.profit)
        if finding.profit_asset is not None:
            doc["profit_asset"] = finding.profit_asset.short()
    return doc


def finding_to_json(finding: MevFinding) -> str:
    return json.dumps(finding_to_doc(finding), separators=(",", ":"))


def _leg(action: DefiAction, direction: Direction) -> ActionParam:
    return next(p for p in action.params if p.direction is direction)


def _swaps(tx: TransactionActions) -> list[DefiAction]:
    return [a for a in tx.actions if a.action_type is ActionType.SWAP]


@dataclass(frozen=True)
class CycleWitness:
    """A maximal chain of swaps linked Out asset -> next In asset."""
    ordinals: tuple[int, ...]
    assets: tuple[AssetId, ...]
    cyclic: bool
    complete: bool  # uses every swap in the transaction


def detect_swap_cycles(actions: TransactionActions) -> list[CycleWitness]:
    """Enumerate maximal swap chains in one transaction. A chain is cyclic
    when its last Out asset equals its first In asset; a cyclic chain over
    every swap in the transaction is the full-cycle witness."""
    swaps = _swaps(actions)
    n = len(swaps)
    witnesses: dict[tuple[int, ...], CycleWitness] = {}

    def extend(chain: list[int]) -> None:
        tail_out = _leg(swaps[chain[-1]], Direction.OUT).asset
        grew = False
        for i in range(n):
            if i in chain:
                continue
            if _leg(swaps[i], Direction.IN).asset == tail_out:
                grew = True
                extend(chain + [i])
        if not grew:
            ordinals = tuple(swaps[i].ordinal for i in chain)
            assets = tuple(_leg(swaps[i], Direction.IN).asset for i in chain)
            assets += (_leg(swaps[chain[-1]], Direction.OUT).asset,)
            cyclic = assets[-1] == assets[0]
            witnesses[ordinals] = CycleWitness(ordinals, assets, cyclic,
                                               len(chain) == n)

    for start in range(n):
        extend([start])
    return list(witnesses.values())


def _cycle_class(tx: TransactionActions) -> MevActivityType | None:
    """CA when the whole swap set forms one closed chain (per-asset inflow
    equals outflow and the swap graph is connected); PCA when only a proper
    subset closes a loop; None otherwise."""
    swaps = _swaps(tx)
    if len(swaps) < 2:
        return None
    degree: dict[AssetId, int] = {}
    edges = []
    for s in swaps:
        a_in = _leg(s, Direction.IN).asset
        a_out = _leg(s, Direction.OUT).asset
        degree[a_in] = degree.get(a_in, 0) + 1
        degree[a_out] = degree.get(a_out, 0) - 1
        edges.append((a_in, a_out))
    balanced = all(v == 0 for v in degree.values())
    if balanced and _connected(edges):
        return MevActivityType.CA
    if _has_cycle(edges):
        return MevActivityType.PCA
    return None


def _connected(edges: list[tuple[AssetId, AssetId]]) -> bool:
    nodes = {a for e in edges for a in e}
    if not nodes:
        return False
    neighbours: dict[AssetId, set[AssetId]] = {a: set() for a in nodes}
    for a, b in edges:
        neighbours[a].add(b)
        neighbours[b].add(a)
    seen = set()
    stack = [next(iter(nodes))]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(neighbours[node] - seen)
    return seen == nodes


def _has_cycle(edges: list[tuple[AssetId, AssetId]]) -> bool:
    remaining = list(edges)
    while remaining:
        out_deg: dict[AssetId, int] = {}
        in_deg: dict[AssetId, int] = {}
        for a, b in remaining:
            out_deg[a] = out_deg.get(a, 0) + 1
            in_deg[b] = in_deg.get(b, 0) + 1
        trimmed = [(a, b) for a, b in remaining
                   if in_deg.get(a, 0) > 0 and out_deg.get(b, 0) > 0]
        if len(trimmed) == len(remaining):
            return True
        remaining = trimmed
    return False


def _pivot_profit(swaps: list[DefiAction], pivot: AssetId) -> int:
    received = sum(_leg(s, Direction.OUT).amount for s in swaps
                   if _leg(s, Direction.OUT).asset == pivot)
    sent = sum(_leg(s, Direction.IN).amount for s in swaps
               if _leg(s, Direction.IN).asset == pivot)
    return received - sent


@dataclass
class _Context:
    bundle: BundleActions

    @property
    def block(self) -> int:
        return self.bundle.bundle.block_number

    @property
    def index(self) -> int:
        return self.bundle.bundle.bundle_index

    def finding(self, activity, txs, contracts=(), assets=(), covered=(),
                profit=None, profit_asset=None) -> MevFinding:
        return MevFinding(activity, self.block, self.index, tuple(txs),
                          tuple(contracts), tuple(assets), tuple(covered),
                          profit, profit_asset)


def _sandwich_shapes(ctx: _Context) -> list[MevFinding]:
    """SA, MBA, and failed-sandwich FA. Outer legs by one sender bracketing
    one or more victim swaps in the same direction on the same venue; two or
    more victims makes it MBA; outer profit below zero makes it FA."""
    per_tx = ctx.bundle.per_tx
    out: list[MevFinding] = []
    for i, open_tx in enumerate(per_tx):
        if open_tx.sender is None:
            continue
        for a in _swaps(open_tx):
            x = _leg(a, Direction.IN)
            y = _leg(a, Direction.OUT)
            for k in range(i + 2, len(per_tx)):
                close_tx = per_tx[k]
                if close_tx.sender != open_tx.sender:
                    continue
                for b in _swaps(close_tx):
                    if (b.contract != a.contract
                            or _leg(b, Direction.IN).asset != y.asset
                            or _leg(b, Direction.OUT).asset != x.asset):
                        continue
                    victims = []
                    for j in range(i + 1, k):
                        mid = per_tx[j]
                        if mid.sender == open_tx.sender:
                            continue
                        for v in _swaps(mid):
                            if (v.contract == a.contract
                                    and _leg(v, Direction.IN).asset == x.asset
                                    and _leg(v, Direction.OUT).asset == y.asset):
                                victims.append((j, v))
                                break
                    if not victims:
                        continue
                    profit = _leg(b, Direction.OUT).amount - x.amount
                    activity = (MevActivityType.MBA if len(victims) >= 2
                                else MevActivityType.SA)
                    if profit < 0:
                        activity = MevActivityType.FA
                    covered = [(i, a.ordinal)]
                    covered += [(j, v.ordinal) for j, v in victims]
                    covered.append((k, b.ordinal))
                    out.append(ctx.finding(
                        activity, [i] + [j for j, _ in victims] + [k],
                        contracts=(a.contract,),
                        assets=(x.asset, y.asset),
                        covered=covered, profit=profit, profit_asset=x.asset))
    return out


def _swap_backruns(ctx: _Context, sandwich_tx_sets: list[set[int]]) -> list[MevFinding]:
    """SBA: a transaction immediately followed by another sender's single
    swap reversing it on the same venue. Pairs absorbed by a sandwich shape
    are not reported again."""
    per_tx = ctx.bundle.per_tx
    out = []
    for i in range(len(per_tx) - 1):
        leader, follower = per_tx[i], per_tx[i + 1]
        if leader.sender is None or leader.sender == follower.sender:
            continue
        follower_swaps = _swaps(follower)
        if len(follower_swaps) != 1:
            continue
        b = follower_swaps[0]
        if any({i, i + 1} <= s for s in sandwich_tx_sets):
            continue
        for a in _swaps(leader):
            if (a.contract == b.contract
                    and _leg(a, Direction.IN).asset == _leg(b, Direction.OUT).asset
                    and _leg(a, Direction.OUT).asset == _leg(b, Direction.IN).asset):
                out.append(ctx.finding(
                    MevActivityType.SBA, [i, i + 1],
                    contracts=(a.contract,),
                    assets=(_leg(a, Direction.IN).asset,
                            _leg(a, Direction.OUT).asset),
                    covered=[(i, a.ordinal), (i + 1, b.ordinal)]))
                break
    return out


_LIQUIDITY = (ActionType.ADD_LIQUIDITY, ActionType.REMOVE_LIQUIDITY)


def _liquidity_sandwiches(ctx: _Context) -> list[MevFinding]:
    """LSA: add liquidity, another sender swaps through the venue, then the
    provider removes liquidity, across three transactions in order."""
    per_tx = ctx.bundle.per_tx
    out = []
    for i, tx_add in enumerate(per_tx):
        adds = [a for a in tx_add.actions if a.action_type is ActionType.ADD_LIQUIDITY]
        for add in adds:
            for j in range(i + 1, len(per_tx)):
                swaps = [s for s in _swaps(per_tx[j])
                         if s.contract == add.contract
                         and per_tx[j].sender != tx_add.sender]
                if not swaps:
                    continue
                for k in range(j + 1, len(per_tx)):
                    if per_tx[k].sender != tx_add.sender:
                        continue
                    removes = [r for r in per_tx[k].actions
                               if r.action_type is ActionType.REMOVE_LIQUIDITY
                               and r.contract == add.contract]
                    if not removes:
                        continue
                    covered = [(i, add.ordinal)]
                    covered += [(j, s.ordinal) for s in swaps]
                    covered += [(k, removes[0].ordinal)]
                    out.append(ctx.finding(
                        MevActivityType.LSA, [i, j, k],
                        contracts=(add.contract,),
                        assets=tuple(p.asset for p in add.params),
                        covered=covered))
                    break
                else:
                    continue
                break
    return out


def _liquidity_backruns(ctx: _Context, lsa_tx_sets: list[set[int]]) -> list[MevFinding]:
    """LBA: a liquidity change followed, in a later transaction, by another
    sender's swap on the same venue. Shapes inside an LSA witness are the
    sandwich's own legs and are not reported separately."""
    per_tx = ctx.bundle.per_tx
    out = []
    for i, leader in enumerate(per_tx):
        for liq in [a for a in leader.actions if a.action_type in _LIQUIDITY]:
            done = False
            for j in range(i + 1, len(per_tx)):
                if per_tx[j].sender == leader.sender:
                    continue
                if any({i, j} <= s for s in lsa_tx_sets):
                    continue
                for s in _swaps(per_tx[j]):
                    if s.contract == liq.contract:
                        out.append(ctx.finding(
                            MevActivityType.LBA, [i, j],
                            contracts=(liq.contract,),
                            assets=tuple(p.asset for p in liq.params),
                            covered=[(i, liq.ordinal), (j, s.ordinal)]))
                        done = True
                        break
                if done:
                    break
    return out


def _cycle_findings(ctx: _Context) -> list[MevFinding]:
    """Per-transaction CA / PCA findings; a full cycle that loses money in
    its pivot asset is reported as FA instead."""
    out = []
    for t, tx in enumerate(ctx.bundle.per_tx):
        kind = _cycle_class(tx)
        if kind is None:
            continue
        swaps = _swaps(tx)
        covered = [(t, s.ordinal) for s in swaps]
        contracts = tuple(dict.fromkeys(s.contract for s in swaps))
        if kind is MevActivityType.CA:
            pivot = _leg(swaps[0], Direction.IN).asset
            profit = _pivot_profit(swaps, pivot)
            activity = MevActivityType.FA if profit < 0 else MevActivityType.CA
            out.append(ctx.finding(activity, [t], contracts=contracts,
                                   assets=(pivot,), covered=covered,
                                   profit=profit, profit_asset=pivot))
        else:
            out.append(ctx.finding(MevActivityType.PCA, [t],
                                   contracts=contracts,
                                   assets=tuple(dict.fromkeys(
                                       _leg(s, Direction.IN).asset for s in swaps)),
                                   covered=covered))
    return out


def _backrun_cycles(ctx: _Context, cycle_findings: list[MevFinding]) -> list[MevFinding]:
    """BCA: someone's swap or liquidity change followed by a different
    sender's profitable full-cycle transaction."""
    per_tx = ctx.bundle.per_tx
    healthy = {f.tx_indices[0]: f for f in cycle_findings
               if f.activity is MevActivityType.CA}
    out = []
    trigger_types = (ActionType.SWAP,) + _LIQUIDITY
    for j, cycle in sorted(healthy.items()):
        cycle_sender = per_tx[j].sender
        for i in range(j):
            leader = per_tx[i]
            if leader.sender is None or leader.sender == cycle_sender:
                continue
            triggers = [a for a in leader.actions
                        if a.action_type in trigger_types]
            if not triggers:
                continue
            out.append(ctx.finding(
                MevActivityType.BCA, [i, j],
                contracts=(triggers[0].contract,) + cycle.contracts,
                assets=cycle.assets,
                covered=[(i, triggers[0].ordinal)] + list(cycle.covered),
                profit=cycle.profit, profit_asset=cycle.profit_asset))
            break
    return out


def _rebase_backruns(ctx: _Context) -> list[MevFinding]:
    """RBA: a token rebase followed by a later transaction swapping that
    token. Profit is what the swap took out."""
    per_tx = ctx.bundle.per_tx
    out = []
    for i, leader in enumerate(per_tx):
        for reb in [a for a in leader.actions
                    if a.action_type is ActionType.REBASING]:
            rebased = AssetId.token(reb.contract)
            done = False
            for j in range(i + 1, len(per_tx)):
                for s in _swaps(per_tx[j]):
                    legs = {_leg(s, Direction.IN).asset, _leg(s, Direction.OUT).asset}
                    if rebased in legs:
                        out_leg = _leg(s, Direction.OUT)
                        out.append(ctx.finding(
                            MevActivityType.RBA, [i, j],
                            contracts=(reb.contract, s.contract),
                            assets=(rebased, out_leg.asset),
                            covered=[(i, reb.ordinal), (j, s.ordinal)],
                            profit=out_leg.amount, profit_asset=out_leg.asset))
                        done = True
                        break
                if done:
                    break
    return out


def _liquidations(ctx: _Context) -> list[MevFinding]:
    out = []
    for t, tx in enumerate(ctx.bundle.per_tx):
        for a in tx.actions:
            if a.action_type is ActionType.LIQUIDATION:
                out.append(ctx.finding(
                    MevActivityType.LI, [t], contracts=(a.contract,),
                    assets=tuple(p.asset for p in a.params),
                    covered=[(t, a.ordinal)]))
    return out


def detect_single_tx_patterns(actions: TransactionActions, block_number: int = 0,
                              bundle_index: int = 0,
                              tx_index: int = 0) -> list[MevFinding]:
    """The seven one-transaction patterns: LT, AT, BN, NR, AC, NT, LA."""
    t = tx_index
    acts = list(actions.actions)
    swaps = _swaps(actions)
    out: list[MevFinding] = []

    def finding(activity, contracts=(), assets=(), covered=(), profit=None,
                profit_asset=None):
        out.append(MevFinding(activity, block_number, bundle_index, (t,),
                              tuple(contracts), tuple(assets), tuple(covered),
                              profit, profit_asset))

    # LT: swap and liquidity change on one venue in the same transaction.
    venues = {}
    for a in acts:
        if a.action_type is ActionType.SWAP or a.action_type in _LIQUIDITY:
            venues.setdefault(a.contract, []).append(a)
    for venue, group in venues.items():
        kinds = {a.action_type for a in group}
        if ActionType.SWAP in kinds and kinds & set(_LIQUIDITY):
            finding(MevActivityType.LT, contracts=(venue,),
                    assets=tuple(dict.fromkeys(
                        p.asset for a in group for p in a.params)),
                    covered=[(t, a.ordinal) for a in group])

    # AT: airdrop claimed, then a swap sells the claimed asset.
    for a in acts:
        if a.action_type is not ActionType.AIRDROP:
            continue
        claimed = a.params[0].asset
        sells = [s for s in swaps if s.ordinal > a.ordinal
                 and _leg(s, Direction.IN).asset == claimed]
        if sells:
            finding(MevActivityType.AT, contracts=(a.contract, sells[0].contract),
                    assets=(claimed,),
                    covered=[(t, a.ordinal)] + [(t, s.ordinal) for s in sells])
            break

    # BN: two or more mints on one collection and nothing but NFT actions.
    nft_only = acts and all(a.action_type in (ActionType.NFT_MINTING,
                                              ActionType.NFT_BURNING)
                            for a in acts)
    if nft_only:
        mints = {}
        for a in acts:
            if a.action_type is ActionType.NFT_MINTING:
                mints.setdefault(a.contract, []).append(a)
        for collection, group in mints.items():
            if len(group) >= 2:
                finding(MevActivityType.BN, contracts=(collection,),
                        assets=(AssetId.erc721(collection),),
                        covered=[(t, a.ordinal) for a in group])

    # NR: burn then mint of the same token id on the same collection.
    for burn in acts:
        if burn.action_type is not ActionType.NFT_BURNING:
            continue
        remint = [m for m in acts if m.action_type is ActionType.NFT_MINTING
                  and m.contract == burn.contract
                  and m.token_id == burn.token_id
                  and m.ordinal > burn.ordinal]
        if remint:
            finding(MevActivityType.NR, contracts=(burn.contract,),
                    assets=(AssetId.erc721(burn.contract),),
                    covered=[(t, burn.ordinal), (t, remint[0].ordinal)])
            break

    # AC: the transaction does nothing but claim airdrops.
    if acts and all(a.action_type is ActionType.AIRDROP for a in acts):
        finding(MevActivityType.AC,
                contracts=tuple(dict.fromkeys(a.contract for a in acts)),
                assets=tuple(dict.fromkeys(a.params[0].asset for a in acts)),
                covered=[(t, a.ordinal) for a in acts])

    # NT: mint then a swap selling the minted collection's asset.
    for mint in acts:
        if mint.action_type is not ActionType.NFT_MINTING:
            continue
        sales = [s for s in swaps if s.ordinal > mint.ordinal
                 and _leg(s, Direction.IN).asset.contract == mint.contract]
        if sales:
            finding(MevActivityType.NT, contracts=(mint.contract, sales[0].contract),
                    assets=(_leg(sales[0], Direction.IN).asset,),
                    covered=[(t, mint.ordinal), (t, sales[0].ordinal)])
            break

    # LA: borrow or leverage, then swaps spending the loaned asset.
    for loan in acts:
        if loan.action_type not in (ActionType.BORROWING, ActionType.LEVERAGE):
            continue
        loaned = loan.params[0].asset
        uses = [s for s in swaps if s.ordinal > loan.ordinal
                and _leg(s, Direction.IN).asset == loaned]
        if uses:
            finding(MevActivityType.LA, contracts=(loan.contract,),
                    assets=(loaned,),
                    covered=[(t, loan.ordinal)] + [(t, s.ordinal) for s in uses])
            break

    return out


def detect_bundle_patterns(bundle: BundleActions) -> list[MevFinding]:
    """Cross-transaction patterns plus the per-transaction cycle and
    liquidation findings they build on."""
    ctx = _Context(bundle)
    sandwiches = _sandwich_shapes(ctx)
    sandwich_sets = [set(f.tx_indices) for f in sandwiches]
    lsa = _liquidity_sandwiches(ctx)
    lsa_sets = [set(f.tx_indices) for f in lsa]
    cycles = _cycle_findings(ctx)
    findings = list(sandwiches)
    findings += _swap_backruns(ctx, sandwich_sets)
    findings += lsa
    findings += _liquidity_backruns(ctx, lsa_sets)
    findings += cycles
    findings += _backrun_cycles(ctx, cycles)
    findings += _rebase_backruns(ctx)
    findings += _liquidations(ctx)

    # HA: one transaction claimed by at least two distinct known activities.
    known = [f for f in findings if f.activity in KNOWN_ACTIVITIES]
    by_tx: dict[int, list[MevFinding]] = {}
    for f in known:
        for t in f.tx_indices:
            by_tx.setdefault(t, []).append(f)
    for t, group in sorted(by_tx.items()):
        kinds = {f.activity for f in group}
        if len(kinds) >= 2:
            covered = [pair for f in group for pair in f.covered
                       if pair[0] == t]
            findings.append(ctx.finding(
                MevActivityType.HA, [t],
                contracts=tuple(dict.fromkeys(
                    c for f in group for c in f.contracts)),
                assets=tuple(dict.fromkeys(
                    a for f in group for a in f.assets)),
                covered=tuple(dict.fromkeys(covered))))
    return findings


def _non_cyclic_swap_trade(ctx: _Context) -> MevFinding | None:
    per_tx = ctx.bundle.per_tx
    all_actions = [(t, a) for t, tx in enumerate(per_tx) for a in tx.actions]
    if not all_actions:
        return None
    if any(a.action_type is not ActionType.SWAP for _, a in all_actions):
        return None
    if any(_cycle_class(tx) is not None for tx in per_tx):
        return None
    txs = sorted({t for t, _ in all_actions})
    return ctx.finding(
        MevActivityType.NST, txs,
        contracts=tuple(dict.fromkeys(a.contract for _, a in all_actions)),
        assets=tuple(dict.fromkeys(
            p.asset for _, a in all_actions for p in a.params)),
        covered=[(t, a.ordinal) for t, a in all_actions])


def hunt(bundle: BundleActions) -> list[MevFinding]:
    """All findings for one bundle, deduplicated and deterministically
    ordered. NST is the fallback classification: reported only when nothing
    else fired and the bundle is all swaps with no cycle."""
    findings = detect_bundle_patterns(bundle)
    for t, tx in enumerate(bundle.per_tx):
        findings += detect_single_tx_patterns(
            tx, bundle.bundle.block_number, bundle.bundle.bundle_index, t)
    findings = list(dict.fromkeys(findings))
    if not findings:
        nst = _non_cyclic_swap_trade(_Context(bundle))
        if nst is not None:
            findings.append(nst)
    findings.sort(key=lambda f: (f.tx_indices[0], f.activity.name))
    return findings
