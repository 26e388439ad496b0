import json

import pytest

from mevlift.tracemodel import (Address, CallRecord, ExecutionTrace,
                                FixtureTraceSource, LogRecord,
                                MemoryTraceSource, TraceFormatError,
                                UINT256_MAX, ZERO_ADDRESS, check_amount,
                                events_of, parse_trace_fixture,
                                serialize_trace_fixture)

A1 = Address(b"\x11" * 20)
A2 = Address(b"\x22" * 20)


def test_address_roundtrip():
    a = Address.from_hex("0x" + "ab" * 20)
    assert a.hex0x() == "0x" + "ab" * 20
    assert Address.from_hex("AB" * 20) == a  # no prefix, different case


def test_address_rejects_bad_lengths():
    with pytest.raises(ValueError):
        Address(b"\x00" * 19)
    with pytest.raises(ValueError):
        Address.from_hex("0x1234")


def test_check_amount_bounds():
    assert check_amount(0) == 0
    assert check_amount(UINT256_MAX) == UINT256_MAX
    with pytest.raises(ValueError):
        check_amount(-1)
    with pytest.raises(ValueError):
        check_amount(UINT256_MAX + 1)
    with pytest.raises(TypeError):
        check_amount(True)
    with pytest.raises(TypeError):
        check_amount(1.0)


def test_log_record_validation():
    with pytest.raises(ValueError):
        LogRecord(A1, (), b"", 0)
    with pytest.raises(ValueError):
        LogRecord(A1, tuple(b"\x00" * 32 for _ in range(5)), b"", 0)
    with pytest.raises(ValueError):
        LogRecord(A1, (b"\x00" * 31,), b"", 0)
    with pytest.raises(ValueError):
        LogRecord(A1, (b"\x00" * 32,), b"\x00" * 33, 0)
    rec = LogRecord(A1, (b"\x01" * 32, b"\x02" * 32), b"\x03" * 64, 7)
    assert rec.signature == b"\x01" * 32
    assert rec.data_words() == (b"\x03" * 32, b"\x03" * 32)


def test_trace_requires_increasing_ordinals_and_known_emitters():
    with pytest.raises(ValueError):
        ExecutionTrace(b"\x00" * 32, A1, A2, 0, 21_000, 10 ** 9,
                       (CallRecord(A1, A2, 1, 3), CallRecord(A1, A2, 1, 3)))
    with pytest.raises(ValueError, match="missing from code index"):
        ExecutionTrace(b"\x00" * 32, A1, A2, 0, 21_000, 10 ** 9,
                       (LogRecord(A1, (b"\x00" * 32,), b"", 0),))


def test_events_of_filters_calls():
    trace = ExecutionTrace(
        b"\x00" * 32, A1, A2, 0, 21_000, 10 ** 9,
        (CallRecord(A1, A2, 5, 0),
         LogRecord(A1, (b"\x07" * 32,), b"", 1)),
        {A1: b"\x60"})
    assert [r.trace_index for r in events_of(trace)] == [1]


def test_fixture_roundtrip(fixtures_dir):
    raw = (fixtures_dir / "hex_usdc_swap.json").read_bytes()
    trace = parse_trace_fixture(raw)
    again = parse_trace_fixture(serialize_trace_fixture(trace))
    assert again == trace
    assert trace.sender.hex0x() == "0x3c5fa0b23a0df54de7e9eef25e0e49571c368a40"
    assert len(trace.records) == 7


def test_parse_rejects_malformed_documents():
    with pytest.raises(TraceFormatError):
        parse_trace_fixture(b"{not json")
    with pytest.raises(TraceFormatError):
        parse_trace_fixture(b"[]")
    base = {"tx_hash": "0x" + "00" * 32, "from": "0x" + "11" * 20,
            "to": None, "value": "0", "gas_used": 21_000,
            "effective_gas_price": "1", "records": [], "code": {}}
    for broken in (
        {**base, "tx_hash": "0x1234"},
        {**base, "from": "zzz"},
        {**base, "value": "-5"},
        {**base, "records": [{"no": "type"}]},
        {**base, "records": [{"type": "stateDiff", "index": 0}]},
        {**base, "records": [{"type": "call", "caller": "0x" + "11" * 20,
                              "callee": "0x" + "22" * 20, "value": "1"}]},
    ):
        with pytest.raises(TraceFormatError):
            parse_trace_fixture(json.dumps(broken).encode())


def test_fixture_trace_source_single_file_and_dir(fixtures_dir, tmp_path):
    source = FixtureTraceSource(fixtures_dir / "hex_usdc_swap.json")
    assert len(source) == 1
    trace = next(iter(source))
    assert trace.tx_hash in source
    assert source.get_trace(trace.tx_hash) == trace
    with pytest.raises(KeyError):
        source.get_trace(b"\xff" * 32)

    # Directory layout: one file per transaction hash.
    per_file = tmp_path / "traces"
    per_file.mkdir()
    name = "0x" + trace.tx_hash.hex() + ".json"
    (per_file / name).write_bytes(serialize_trace_fixture(trace))
    from_dir = FixtureTraceSource(per_file)
    assert from_dir.get_trace(trace.tx_hash) == trace

    # Single file holding an array of documents.
    doc = json.loads(serialize_trace_fixture(trace))
    bulk = tmp_path / "all.json"
    bulk.write_text(json.dumps([doc]))
    assert len(FixtureTraceSource(bulk)) == 1


def test_memory_trace_source():
    trace = ExecutionTrace(b"\x05" * 32, A1, A2, 0, 21_000, 10 ** 9, ())
    source = MemoryTraceSource([trace])
    assert trace.tx_hash in source
    source.add(trace)
    assert len(source) == 1
    with pytest.raises(KeyError):
        source.get_trace(b"\x06" * 32)
