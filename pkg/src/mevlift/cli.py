"""Command line entry points for every pipeline stage.

Exit codes: 0 on success, 1 on operational errors (missing files, bad
data, incomplete bundles), 2 on usage errors (argparse's default).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .actlift import (MatchConfig, MatchMode, lift_transaction,
                      transaction_actions_to_json)
from .bundles import (fetch_bundles, lift_bundle, load_bundle_actions,
                      parse_bundle_fixture, store_bundle_actions)
from .hunter import finding_to_json, hunt
from .matrix import MatrixConfig, matrix_to_csv
from .nn import ModelConfig
from .registry import EventRegistry, load_registry, load_seed_registry
from .revenue import bundle_revenue, revenue_to_csv
from .tracemodel import FixtureTraceSource, parse_trace_fixture


def _load_registry(path: str | None) -> EventRegistry:
    if path is None:
        return load_seed_registry()
    return load_registry(Path(path).read_bytes())


def _match_config(mode: str) -> MatchConfig:
    return MatchConfig(mode=MatchMode[mode.upper()])


def _matrix_config(args) -> MatrixConfig:
    return MatrixConfig(height=args.height, max_width=args.width)


def _model_config(args) -> ModelConfig:
    cfg = ModelConfig(input_height=args.height, input_width=args.width)
    return replace(cfg, epochs=args.epochs, seed=args.seed)


def _write_out(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _add_matrix_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--height", type=int, default=16,
                   help="matrix row count (default 16)")
    p.add_argument("--width", type=int, default=256,
                   help="matrix column count (default 256)")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    _add_matrix_flags(p)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)


def cmd_ingest(args) -> int:
    registry = _load_registry(args.registry)
    config = _match_config(args.mode)
    bundles = fetch_bundles(args.source, args.from_block, args.to_block,
                            cache_dir=args.cache)
    source = FixtureTraceSource(args.traces)
    lifted = [lift_bundle(b, source, registry, config) for b in bundles]
    store_bundle_actions(lifted, args.out)
    print(f"ingested {len(lifted)} bundles into {args.out}")
    return 0


def cmd_lift(args) -> int:
    registry = _load_registry(args.registry)
    config = _match_config(args.mode)
    doc = json.loads(Path(args.trace).read_text(encoding="utf-8"))
    docs = doc if isinstance(doc, list) else [doc]
    lines = []
    for entry in docs:
        trace = parse_trace_fixture(json.dumps(entry))
        ta = lift_transaction(trace, registry, config)
        lines.append(transaction_actions_to_json(ta))
    _write_out("".join(line + "\n" for line in lines), args.out)
    return 0


def cmd_hunt(args) -> int:
    lines = []
    for ba in load_bundle_actions(args.bundles):
        for finding in hunt(ba):
            lines.append(finding_to_json(finding))
    _write_out("".join(line + "\n" for line in lines), args.out)
    return 0


def cmd_matrix(args) -> int:
    from .workflow import corpus_by_ref, encode_corpus

    corpus = corpus_by_ref(load_bundle_actions(args.bundles))
    matrices = encode_corpus(corpus, _matrix_config(args))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for ref, matrix in matrices.items():
        name = ref.replace("/", "_") + ".csv"
        (out_dir / name).write_text(matrix_to_csv(matrix), encoding="utf-8")
    print(f"wrote {len(matrices)} matrices to {out_dir}")
    return 0


def cmd_train(args) -> int:
    from .nn import save_model
    from .workflow import corpus_by_ref, train_and_embed

    corpus = corpus_by_ref(load_bundle_actions(args.bundles))
    labels = [s for s in args.labels.split(",") if s]
    model, _, trace = train_and_embed(corpus, labels, _model_config(args),
                                      _matrix_config(args))
    save_model(model, args.model)
    final = f"{trace[-1]:.6f}" if trace else "n/a"
    print(f"trained on {len(corpus)} bundles, {len(labels)} labels, "
          f"final loss {final}; saved {args.model}")
    return 0


def _print_summary(session) -> None:
    from .service import session_summary
    print(json.dumps(session_summary(session), indent=2))


def cmd_cluster_init(args) -> int:
    from .cluster import ClusterConfig, new_session, save_session
    from .workflow import corpus_by_ref, train_and_embed

    corpus = corpus_by_ref(load_bundle_actions(args.bundles))
    labels = [s for s in args.labels.split(",") if s]
    config = ClusterConfig(epsilon=args.epsilon, eta=args.eta,
                           min_pts=args.min_pts, max_rounds=args.max_rounds,
                           noise_sample_cap=args.noise_cap)
    _, embeddings, _ = train_and_embed(corpus, labels, _model_config(args),
                                       _matrix_config(args))
    session_id = args.session_id or Path(args.session).stem
    session = new_session(session_id, corpus, embeddings, config, labels)
    save_session(session, args.session)
    _print_summary(session)
    return 0


def cmd_cluster_label(args) -> int:
    from .cluster import load_session, save_session, submit_label

    session = load_session(args.session)
    submit_label(session, args.bundle, args.kind, args.label,
                 actor=args.actor, audit_path=args.audit)
    save_session(session, args.session)
    _print_summary(session)
    return 0


def cmd_cluster_advance(args) -> int:
    from .cluster import advance_round, load_session, save_session
    from .workflow import corpus_by_ref, train_and_embed

    session = load_session(args.session)
    store = corpus_by_ref(load_bundle_actions(args.bundles))
    missing = [ref for ref in session.refs if ref not in store]
    if missing:
        raise FileNotFoundError(
            f"bundle store lacks {', '.join(missing[:5])}")
    corpus = {ref: store[ref] for ref in session.refs}
    _, embeddings, _ = train_and_embed(corpus, session.label_set,
                                       _model_config(args),
                                       _matrix_config(args))
    advance_round(session, embeddings, corpus)
    save_session(session, args.session)
    _print_summary(session)
    return 0


def cmd_cluster_show(args) -> int:
    from .cluster import load_session

    _print_summary(load_session(args.session))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        sessions_dir=args.sessions,
        bundles_path=args.bundles,
        audit_path=args.audit,
        host=args.host,
        port=args.port,
        matrix_config=_matrix_config(args),
        model_config=_model_config(args),
        cors_origins=tuple(args.cors or ()),
        auth_token=args.token,
        static_dir=args.static,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port,
                log_level="warning")
    return 0


def cmd_revenue(args) -> int:
    rows = []
    for path in args.fixtures:
        bundle, source = parse_bundle_fixture(Path(path).read_bytes())
        rows.append(bundle_revenue(bundle, source))
    _write_out(revenue_to_csv(rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mevlift",
        description="Lift EVM traces into DeFi actions, hunt MEV in "
                    "bundles, and run the clustering review loop.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="fetch bundles, lift, append to a store")
    p.add_argument("--source", required=True,
                   help="feed URL or fixture path")
    p.add_argument("--from-block", type=int, default=None)
    p.add_argument("--to-block", type=int, default=None)
    p.add_argument("--out", required=True, help="NDJSON action store")
    p.add_argument("--traces", required=True,
                   help="trace fixture file or directory")
    p.add_argument("--registry", default=None)
    p.add_argument("--mode", default="C1", choices=["C1", "C2", "C3"])
    p.add_argument("--cache", default=None, help="feed cache directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("lift", help="lift one trace fixture to actions")
    p.add_argument("--trace", required=True)
    p.add_argument("--registry", default=None)
    p.add_argument("--mode", default="C1", choices=["C1", "C2", "C3"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("hunt", help="detect MEV activities in a store")
    p.add_argument("--bundles", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_hunt)

    p = sub.add_parser("matrix", help="dump bundle matrices as CSV")
    p.add_argument("--bundles", required=True)
    p.add_argument("--out", required=True, help="output directory")
    _add_matrix_flags(p)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("train", help="train the representation model")
    p.add_argument("--bundles", required=True)
    p.add_argument("--model", required=True, help="checkpoint output path")
    p.add_argument("--labels", default="SA,CA,LI")
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cluster", help="review-loop session operations")
    csub = p.add_subparsers(dest="cluster_command", required=True)

    c = csub.add_parser("init", help="create a session from a store")
    c.add_argument("--bundles", required=True)
    c.add_argument("--session", required=True, help="session JSON path")
    c.add_argument("--session-id", default=None)
    c.add_argument("--labels", default="SA,CA,LI")
    c.add_argument("--epsilon", type=float, default=16.0)
    c.add_argument("--eta", type=float, default=0.5)
    c.add_argument("--min-pts", type=int, default=2)
    c.add_argument("--max-rounds", type=int, default=8)
    c.add_argument("--noise-cap", type=int, default=10)
    _add_model_flags(c)
    c.set_defaults(func=cmd_cluster_init)

    c = csub.add_parser("label", help="record an analyst decision")
    c.add_argument("--session", required=True)
    c.add_argument("--bundle", required=True, help="bundle ref block/index")
    c.add_argument("--kind", required=True,
                   choices=["known", "new", "dismissed"])
    c.add_argument("--label", default=None)
    c.add_argument("--actor", default="analyst")
    c.add_argument("--audit", default=None)
    c.set_defaults(func=cmd_cluster_label)

    c = csub.add_parser("advance", help="close the round and re-cluster")
    c.add_argument("--session", required=True)
    c.add_argument("--bundles", required=True)
    _add_model_flags(c)
    c.set_defaults(func=cmd_cluster_advance)

    c = csub.add_parser("show", help="print a session summary")
    c.add_argument("--session", required=True)
    c.set_defaults(func=cmd_cluster_show)

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--sessions", required=True, help="session directory")
    p.add_argument("--bundles", required=True)
    p.add_argument("--audit", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8571)
    p.add_argument("--static", default=None, help="static UI directory")
    p.add_argument("--token", default=None, help="require this bearer token")
    p.add_argument("--cors", nargs="*", default=None)
    _add_model_flags(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("revenue", help="per-bundle miner revenue CSV")
    p.add_argument("fixtures", nargs="+", help="bundle fixture paths")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_revenue)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
