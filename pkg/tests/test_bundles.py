import json

import pytest

from mevlift.bundles import (Bundle, BundleActions, BundleError,
                             FeedSchemaError, FeedUnavailableError,
                             IncompleteBundleError, TxMeta, _cache_path,
                             bundle_actions_from_json, bundle_actions_to_json,
                             fetch_bundles, lift_bundle, load_bundle_actions,
                             parse_bundle_feed, parse_bundle_fixture,
                             serialize_bundle_fixture, store_bundle_actions)
from mevlift.registry import ActionType
from mevlift.synth import (BundleBuilder, add_swap, tag_address, tag_hash,
                           token)
from mevlift.tracemodel import MemoryTraceSource

COINBASE = tag_address("coinbase")


def _tx_doc(tag, gas=21_000, price=10 ** 9):
    return {"hash": "0x" + tag_hash(tag).hex(), "gas_used": gas,
            "effective_gas_price": price}


def _block_doc(number, bundles):
    return {"block_number": number, "coinbase": COINBASE.hex0x(),
            "bundles": bundles}


def test_tx_meta_validation():
    with pytest.raises(ValueError):
        TxMeta(-1, 10)
    with pytest.raises(TypeError):
        TxMeta(21_000, True)
    TxMeta(0, 0)


def test_bundle_validation():
    h = tag_hash("a")
    with pytest.raises(ValueError):
        Bundle(1, 0, (), COINBASE, ())
    with pytest.raises(ValueError):
        Bundle(-1, 0, (h,), COINBASE, (TxMeta(1, 1),))
    with pytest.raises(ValueError):
        Bundle(1, 0, (h,), COINBASE, ())
    b = Bundle(15_537_394, 3, (h,), COINBASE, (TxMeta(1, 1),))
    assert b.ref == "15537394/3"


def test_parse_feed_fixture(fixtures_dir):
    bundles = parse_bundle_feed((fixtures_dir / "bundle_feed.json").read_text())
    assert [b.ref for b in bundles] == ["14000100/0", "14000100/1"]
    assert all(b.coinbase == bundles[0].coinbase for b in bundles)
    assert all(len(b.tx_hashes) == len(b.tx_meta) for b in bundles)


def test_parse_feed_accepts_all_three_shapes():
    block = _block_doc(5, [{"bundle_index": 0, "txs": [_tx_doc("t")]}])
    single = parse_bundle_feed(json.dumps(block))
    as_list = parse_bundle_feed(json.dumps([block]))
    wrapped = parse_bundle_feed(json.dumps({"blocks": [block]}))
    assert single == as_list == wrapped
    assert single[0].block_number == 5


def test_parse_feed_sorts_by_block_then_index():
    doc = [
        _block_doc(7, [{"bundle_index": 1, "txs": [_tx_doc("b")]},
                       {"bundle_index": 0, "txs": [_tx_doc("a")]}]),
        _block_doc(3, [{"bundle_index": 0, "txs": [_tx_doc("c")]}]),
    ]
    refs = [b.ref for b in parse_bundle_feed(json.dumps(doc))]
    assert refs == ["3/0", "7/0", "7/1"]


def test_parse_feed_schema_errors():
    with pytest.raises(FeedSchemaError):
        parse_bundle_feed("42")
    with pytest.raises(FeedSchemaError, match="block_number"):
        parse_bundle_feed(json.dumps({"coinbase": COINBASE.hex0x(),
                                      "bundles": []}))
    with pytest.raises(FeedSchemaError, match="bundle_index"):
        parse_bundle_feed(json.dumps(_block_doc(1, [{"txs": []}])))
    bad_hash = _block_doc(1, [{"bundle_index": 0,
                               "txs": [{"hash": "0x12", "gas_used": 1,
                                        "effective_gas_price": 1}]}])
    with pytest.raises(FeedSchemaError, match="hash"):
        parse_bundle_feed(json.dumps(bad_hash))
    no_gas = _block_doc(1, [{"bundle_index": 0,
                             "txs": [{"hash": "0x" + tag_hash("x").hex()}]}])
    with pytest.raises(FeedSchemaError, match="gas meta"):
        parse_bundle_feed(json.dumps(no_gas))


def test_fetch_bundles_local_path_and_block_filters(fixtures_dir, tmp_path):
    feed = tmp_path / "feed.json"
    feed.write_text(json.dumps([
        _block_doc(10, [{"bundle_index": 0, "txs": [_tx_doc("a")]}]),
        _block_doc(20, [{"bundle_index": 0, "txs": [_tx_doc("b")]}]),
        _block_doc(30, [{"bundle_index": 0, "txs": [_tx_doc("c")]}]),
    ]))
    assert len(fetch_bundles(str(feed))) == 3
    assert [b.block_number for b in fetch_bundles(str(feed), from_block=20)] \
        == [20, 30]
    assert [b.block_number for b in fetch_bundles(str(feed), to_block=20)] \
        == [10, 20]
    assert [b.block_number
            for b in fetch_bundles(str(feed), from_block=20, to_block=20)] \
        == [20]


def test_fetch_bundles_replays_cache_without_network(tmp_path):
    url = "https://blocks.example/api/v1/blocks?block_number=77"
    body = json.dumps(_block_doc(77, [{"bundle_index": 0,
                                       "txs": [_tx_doc("cached")]}]))
    cache = _cache_path(str(tmp_path), url)
    cache.parent.mkdir(parents=True, exist_ok=True)
    cache.write_text(body)
    bundles = fetch_bundles(url, cache_dir=str(tmp_path))
    assert [b.block_number for b in bundles] == [77]


def test_fetch_bundles_network_failure_is_typed():
    # Nothing listens on this port, so the fetch fails fast.
    with pytest.raises(FeedUnavailableError):
        fetch_bundles("http://127.0.0.1:9/feed")


def _swap_bundle():
    bb = BundleBuilder("lift-me", 12_000_000)
    trader, venue = tag_address("trader"), tag_address("venue")
    t = bb.tx(trader, venue)
    add_swap(t, trader, venue, token("dai"), 500, token("weth"), 1)
    bb.tx(tag_address("idle"), tag_address("sink"))
    return bb


def test_lift_bundle_round(registry):
    bundle, source = _swap_bundle().build()
    ba = lift_bundle(bundle, source, registry)
    assert len(ba.per_tx) == 2
    assert [a.action_type for _, a in ba.iter_actions()] == [ActionType.SWAP]
    assert next(ba.iter_actions())[0] == 0  # the swap sits in tx 0


def test_lift_bundle_missing_traces(registry):
    bundle, source = _swap_bundle().build()
    empty = MemoryTraceSource([])
    with pytest.raises(IncompleteBundleError) as err:
        lift_bundle(bundle, empty, registry)
    assert err.value.missing == bundle.tx_hashes
    assert "missing traces" in str(err.value)


def test_bundle_actions_json_roundtrip(registry):
    ba = _swap_bundle().build_actions(registry)
    line = bundle_actions_to_json(ba)
    assert "\n" not in line
    assert bundle_actions_from_json(line) == ba


def test_ndjson_store_appends_and_loads(tmp_path, registry):
    path = tmp_path / "actions.ndjson"
    first = _swap_bundle().build_actions(registry)
    bb = BundleBuilder("other", 12_000_001)
    bb.tx(tag_address("solo"), tag_address("sink"))
    second = bb.build_actions(registry)
    store_bundle_actions([first], path)
    store_bundle_actions([second], path)
    loaded = load_bundle_actions(path)
    assert loaded == [first, second]


def test_ndjson_load_reports_corrupt_line(tmp_path, registry):
    path = tmp_path / "actions.ndjson"
    store_bundle_actions([_swap_bundle().build_actions(registry)], path)
    with open(path, "a", encoding="ascii") as fh:
        fh.write("\n{not json}\n")
    with pytest.raises(BundleError, match="line 3"):
        load_bundle_actions(path)


def test_bundle_fixture_roundtrip(fixtures_dir):
    document = (fixtures_dir / "rebase_backrun_bundle.json").read_bytes()
    bundle, source = parse_bundle_fixture(document)
    again, source2 = parse_bundle_fixture(serialize_bundle_fixture(bundle, source))
    assert again == bundle
    assert all(h in source2 for h in bundle.tx_hashes)
    for h in bundle.tx_hashes:
        assert source2.get_trace(h) == source.get_trace(h)
