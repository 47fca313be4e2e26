"""Command-line entry points for the full pipeline.

Subcommands: ingest (corpus -> passage manifest), index (manifest ->
bundle), query (one-shot or REPL), eval (run the question set, write the
results CSV, summarize), serve (HTTP query service).

Every command exits 0 on success and nonzero with a one-line diagnostic on
stderr on failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import evaluation
from .answer import ask
from .config import AppConfig, default_questions_text, load_config
from .embed import build_embedder
from .errors import BularagError, EmptyInput
from .index import IndexBundle, build_index, load_bundle, save_bundle
from .ingest import ingest_directory


def _config_from_args(args: argparse.Namespace) -> AppConfig:
    return load_config(getattr(args, "config", None))


def cmd_ingest(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    corpus_dir = args.corpus_dir or cfg.corpus_dir
    if not corpus_dir:
        raise BularagError("no corpus directory given (argument or config corpus_dir)")
    documents, passages = ingest_directory(
        corpus_dir,
        max_tokens=cfg.ingest.max_tokens,
        heading_patterns=cfg.ingest.heading_patterns,
        dosage_pattern=cfg.ingest.dosage_pattern,
    )
    medicines = {doc.filename: doc.medicine_name for doc in documents}
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        for p in passages:
            fh.write(
                json.dumps(
                    {
                        "id": p.id,
                        "doc_id": p.doc_id,
                        "source": p.source,
                        "section_label": p.section_label,
                        "text": p.text,
                        "token_count": p.token_count,
                        "medicine": medicines[p.source],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"{len(documents)} documents, {len(passages)} passages -> {out}")
    return 0


def _read_manifest(path: str | Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    records.sort(key=lambda r: r["id"])
    if [r["id"] for r in records] != list(range(len(records))):
        raise BularagError("manifest passage ids are not dense 0..N-1")
    return records


def cmd_index(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    manifest = Path(args.manifest)
    records = _read_manifest(manifest)
    if not records:
        raise EmptyInput(f"manifest {str(manifest)!r} holds no passages")
    embedder = build_embedder(cfg.embedder)
    embeddings = embedder.embed([r["text"] for r in records])
    index = build_index(embeddings, [r["id"] for r in records])
    created_at = datetime.fromtimestamp(
        manifest.stat().st_mtime, tz=timezone.utc
    ).isoformat(timespec="seconds")
    bundle = IndexBundle(
        index=index,
        passages=[r["text"] for r in records],
        sources=[r["source"] for r in records],
        meta={
            "embedder": embedder.fingerprint(),
            "normalized": True,
            "created_at": created_at,
            "medicines": {r["source"]: r["medicine"] for r in records},
            "sections": [r["section_label"] for r in records],
            "passage_count": len(records),
        },
    )
    save_bundle(bundle, args.out)
    print(f"{len(records)} vectors (dim {index.dim}) -> {args.out}")
    return 0


def _engine_parts(args: argparse.Namespace, cfg: AppConfig):
    bundle = load_bundle(args.bundle)
    embedder = build_embedder(cfg.embedder)
    if bundle.index.dim != embedder.dim:
        raise BularagError(
            f"bundle dim {bundle.index.dim} != embedder dim {embedder.dim}; "
            "check the embedder config"
        )
    return bundle, embedder


def _print_result(result: dict, show_context: bool) -> None:
    answer = result["answer"]
    print(answer.text)
    sources = []
    for hit in result["hits"]:
        if hit.source not in sources:
            sources.append(hit.source)
    print(f"\nFontes: {', '.join(sources) if sources else '(nenhuma)'}")
    print(f"Tempo: {answer.latency_s:.2f}s")
    if show_context:
        print("\nTrechos:")
        for hit in result["hits"]:
            print(f"--- [{hit.origin}] {hit.source} (id {hit.passage_id}, score {hit.score:.4f})")
            print(hit.text)


def cmd_query(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    bundle, embedder = _engine_parts(args, cfg)

    def run_one(question: str) -> None:
        result = ask(
            question,
            bundle,
            embedder,
            cfg.retrieval,
            cfg.provider,
            rules=cfg.prompt.rules,
            template=cfg.prompt.template_text(),
            not_found=cfg.prompt.not_found,
        )
        _print_result(result, args.show_context)

    if args.repl:
        while True:
            try:
                question = input("pergunta> ")
            except EOFError:
                print()
                return 0
            if not question.strip():
                continue
            try:
                run_one(question.strip())
            except BularagError as exc:
                print(f"error: {exc}", file=sys.stderr)
        return 0
    if not args.question:
        raise BularagError("give a question or use --repl")
    run_one(args.question)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)

    if args.import_labels:
        rows = evaluation.read_rows_csv(args.import_labels)
        summary = evaluation.summarize(rows)
        print(json.dumps(evaluation.summary_to_dict(summary), ensure_ascii=False, indent=2)
              if args.json else evaluation.format_summary(summary))
        return 0

    if not args.bundle:
        raise BularagError("give a bundle file (or --import-labels CSV)")
    bundle, embedder = _engine_parts(args, cfg)
    questions_path = args.questions or cfg.questions_path
    if questions_path:
        questions = evaluation.parse_questions(questions_path)
    else:
        questions = evaluation.parse_questions_text(default_questions_text())
    if not questions:
        raise BularagError("question file holds no questions")

    def system(question: str) -> str:
        return ask(
            question,
            bundle,
            embedder,
            cfg.retrieval,
            cfg.provider,
            rules=cfg.prompt.rules,
            template=cfg.prompt.template_text(),
            not_found=cfg.prompt.not_found,
        )["answer"].text

    rows = evaluation.run_eval(questions, system, embedder, parallel=args.parallel)
    if args.out:
        evaluation.write_rows_csv(rows, args.out)
        print(f"{len(rows)} rows -> {args.out}")
    summary = evaluation.summarize(rows, include_times=not args.parallel)
    print(json.dumps(evaluation.summary_to_dict(summary), ensure_ascii=False, indent=2)
          if args.json else evaluation.format_summary(summary))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    cfg = _config_from_args(args)
    bundle, embedder = _engine_parts(args, cfg)
    app = create_app(bundle, embedder, cfg.retrieval, cfg.provider, cfg.prompt)
    if args.static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=args.static_dir, html=True), name="static")
    host = args.host or cfg.service.host
    port = args.port if args.port is not None else cfg.service.port
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bularag",
        description="Retrieval-augmented question answering over drug package inserts.",
    )
    parser.add_argument("--config", help="path to a JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="extract and chunk a corpus into a passage manifest")
    p.add_argument("corpus_dir", nargs="?", help="directory of .pdf/.txt files")
    p.add_argument("-o", "--out", required=True, help="output manifest (JSON lines)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="embed a manifest and save the search bundle")
    p.add_argument("manifest", help="passage manifest from 'ingest'")
    p.add_argument("-o", "--out", required=True, help="output bundle file")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", help="answer one question or start a REPL")
    p.add_argument("bundle", help="bundle file from 'index'")
    p.add_argument("question", nargs="?", help="question text (omit with --repl)")
    p.add_argument("--repl", action="store_true", help="read questions until EOF")
    p.add_argument("--show-context", action="store_true", help="print retrieved passages")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="run the question set and write the results CSV")
    p.add_argument("bundle", nargs="?", help="bundle file from 'index'")
    p.add_argument("--questions", help="question file (default: shipped set)")
    p.add_argument("-o", "--out", help="output results CSV")
    p.add_argument("--import-labels", help="summarize an annotated results CSV instead")
    p.add_argument("--json", action="store_true", help="print the summary as JSON")
    p.add_argument(
        "--parallel",
        action="store_true",
        help="run trials concurrently (disables time aggregates in the summary)",
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP query service")
    p.add_argument("bundle", help="bundle file from 'index'")
    p.add_argument("--host", help="bind host (default from config)")
    p.add_argument("--port", type=int, help="bind port (default from config)")
    p.add_argument("--static-dir", help="also serve this directory at / (web UI build)")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BularagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry() -> None:
    sys.exit(main())
