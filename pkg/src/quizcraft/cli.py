"""Operator command line: serve the platform, ingest reading material,
run any analysis offline against an exported record file.

Every failure exits nonzero after printing a machine-readable
{"error_code", "message"} object on stderr; analysis output goes to
stdout as an aligned table or as JSON.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import analytics
from .config import load_config, register_topic, split_listen_address
from .domain import Topic
from .embedding import HashEmbedder
from .errors import ConfigError, QuizcraftError
from .metrics import METRIC_NAMES
from .store import import_material, read_export
from .taxonomy import CATEGORIES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quizcraft")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the REST service")
    serve.add_argument("--config", required=True, help="config file (YAML or JSON)")

    ingest = sub.add_parser("import-material", help="ingest a topic's reading material")
    ingest.add_argument("--config", required=True)
    ingest.add_argument("--topic-id", required=True)
    ingest.add_argument("--title", required=True)
    ingest.add_argument("--source-uri", default="")
    ingest.add_argument("--file", required=True, help="raw text file")

    analyze = sub.add_parser("analyze", help="run one analysis over exported records")
    analyze.add_argument(
        "which",
        choices=[
            "acceptance",
            "errors",
            "iaa",
            "instance-corr",
            "system-corr",
            "upper-bound",
            "report",
        ],
    )
    analyze.add_argument("--records", required=True, help="exported JSONL record file")
    analyze.add_argument("--metric", default="bleu", choices=list(METRIC_NAMES))
    analyze.add_argument("--format", default="table", choices=["table", "json"])
    analyze.add_argument("--seed", type=int, default=0, help="embedding fixture seed")
    return parser


def _fail(exc: QuizcraftError) -> int:
    print(json.dumps({"error_code": exc.code, "message": exc.message}), file=sys.stderr)
    return 1


def _print_rows(rows: list[list[str]]) -> None:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [
            row[i].rjust(widths[i]) for i in range(1, len(row))
        ]
        print("  ".join(cells).rstrip())


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import build_platform

    config = load_config(args.config)
    if not config.backends:
        raise ConfigError("serve requires at least one configured backend")
    host, port = split_listen_address(config.listen_address)
    _orchestrator, store, app = build_platform(config)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        store.close()
    return 0


def _cmd_import_material(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    topic = Topic(id=args.topic_id, title=args.title, source_uri=args.source_uri)
    material = import_material(topic, args.file, config.word_limit)
    path = register_topic(config.material_dir, topic, material.text)
    print(
        json.dumps(
            {"topic_id": topic.id, "word_count": material.word_count, "stored": str(path)}
        )
    )
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    records = [entry.record for entry in read_export(args.records)]
    embedder = HashEmbedder(dimension=32, seed=args.seed)
    as_json = args.format == "json"

    if args.which == "acceptance":
        summary = analytics.acceptance_rates(records)
        if as_json:
            print(
                json.dumps(
                    {
                        "per_model": {
                            m: {"rate": a.rate, "n": a.n}
                            for m, a in summary.per_model.items()
                        },
                        "overall_rate": summary.overall_rate,
                        "record_count": summary.record_count,
                    }
                )
            )
        else:
            rows = [["model", "rate", "n"]]
            for model_id, acc in summary.per_model.items():
                rows.append([model_id, f"{acc.rate:.3f}", str(acc.n)])
            overall = "n/a" if summary.overall_rate is None else f"{summary.overall_rate:.3f}"
            rows.append(["overall", overall, str(summary.record_count)])
            _print_rows(rows)
    elif args.which == "errors":
        distribution = analytics.error_distribution(records)
        if as_json:
            print(
                json.dumps(
                    {
                        m: {
                            "categories": b.categories,
                            "subtypes": b.subtypes,
                            "n": b.n,
                        }
                        for m, b in distribution.items()
                    }
                )
            )
        else:
            rows = [["model", "Accepted", *CATEGORIES, "n"]]
            for model_id, breakdown in distribution.items():
                rows.append(
                    [model_id]
                    + [f"{breakdown.categories[c]:.3f}" for c in ("Accepted", *CATEGORIES)]
                    + [str(breakdown.n)]
                )
            _print_rows(rows)
    elif args.which == "iaa":
        report = analytics.iaa(records)
        if as_json:
            print(json.dumps(analytics.agreement_report_to_dict(report)))
        else:
            rows = [
                ["coefficient", f"{report.coefficient:.3f}"],
                ["co_annotated_count", str(report.co_annotated_count)],
            ]
            for model_id, value in report.per_model_coefficients.items():
                rows.append([model_id, f"{value:.3f}"])
            _print_rows(rows)
    elif args.which == "instance-corr":
        result = analytics.instance_correlation(records, args.metric, embedder=embedder)
        if as_json:
            print(
                json.dumps(
                    {
                        "metric": args.metric,
                        "coefficient": result.coefficient,
                        "scored_count": result.scored_count,
                        "excluded_count": result.excluded_count,
                    }
                )
            )
        else:
            print(f"{result.coefficient:.3f}")
    elif args.which == "system-corr":
        value = analytics.system_correlation(records, args.metric, embedder=embedder)
        if as_json:
            print(json.dumps({"metric": args.metric, "coefficient": value}))
        else:
            print(f"{value:.3f}")
    elif args.which == "upper-bound":
        value = analytics.upper_bound(records, args.metric, embedder=embedder)
        if as_json:
            print(json.dumps({"metric": args.metric, "value": value}))
        else:
            print(f"{value:.3f}")
    else:  # report
        report = analytics.build_metric_report(records, embedder=embedder)
        if as_json:
            print(json.dumps(analytics.metric_report_to_dict(report)))
        else:
            print(analytics.render_metric_report(report))
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "import-material":
            return _cmd_import_material(args)
        return _cmd_analyze(args)
    except QuizcraftError as exc:
        return _fail(exc)
    except OSError as exc:
        print(
            json.dumps({"error_code": "io_error", "message": str(exc)}), file=sys.stderr
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
