"""Command-line entry point.

Exit codes: 0 success, 1 fitness below --fail-under, 2 input error,
3 internal error.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .conformance import RunConfig, check_log
from .eventlog import EventLog, EventLogError, convert_xml, load_config, parse_xes, serialize_xes
from .mlm import format_diagnostic, load_bundle, read_model_dir

EXIT_OK, EXIT_GATE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def _write(path: str | None, data: str | bytes) -> None:
    if path is None or path == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        else:
            sys.stdout.write(data)
        return
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8"})) as fh:
        fh.write(data)


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def load_model(model_dir: str, quiet: bool = False):
    try:
        files = read_model_dir(model_dir)
    except OSError as exc:
        raise InputError(str(exc)) from None
    if not files:
        raise InputError(f"no *.mlm files in {model_dir}")
    mlms, diagnostics = load_bundle(files)
    if not quiet:
        for d in diagnostics:
            print(format_diagnostic(d), file=sys.stderr)
    if any(d["severity"] == "error" for d in diagnostics):
        raise InputError(f"model in {model_dir} has fatal diagnostics")
    return mlms


def cmd_convert(args) -> int:
    try:
        config = load_config(Path(args.config))
    except OSError as exc:
        raise InputError(f"cannot read {args.config}: {exc.strerror}") from None
    log = convert_xml(_read_bytes(args.input), config)
    _write(args.out, serialize_xes(log))
    n_events = sum(len(t.events) for t in log.traces)
    print(f"converted {len(log.traces)} traces, {n_events} events", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        files = read_model_dir(args.model)
    except OSError as exc:
        raise InputError(str(exc)) from None
    mlms, diagnostics = load_bundle(files)
    for d in diagnostics:
        print(format_diagnostic(d))
    fatal = sum(1 for d in diagnostics if d["severity"] == "error")
    print(f"{len(files)} files, {len(mlms)} rules parsed, {fatal} fatal, "
          f"{len(diagnostics) - fatal} warnings")
    return EXIT_INPUT if fatal or not files else EXIT_OK


def cmd_check(args) -> int:
    mlms = load_model(args.model)
    log = parse_xes(_read_bytes(args.log))
    config = RunConfig(align=args.align, max_restarts=args.max_restarts,
                       random_seed=args.seed, persist_attribute_writes=args.persist_writes)
    evaluate = None
    client = None
    if args.server:
        import httpx

        from .service import RemoteEvaluator

        client = httpx.Client(base_url=args.server, timeout=60.0)
        evaluate = RemoteEvaluator(client, batch=not args.per_event)
    try:
        report = check_log(log, mlms, config, evaluate=evaluate, workers=args.jobs)
    finally:
        if client is not None:
            client.close()
    _write(args.out, report.to_json() if args.format == "json" else report.to_text())
    if args.aligned_log:
        originals = {t.case_id: t for t in log.traces}
        traces = [r.final_trace or originals[r.case_id] for r in report.traces]
        aligned = EventLog(traces, dict(log.metadata))
        _write(args.aligned_log, serialize_xes(aligned, include_writes=args.persist_writes))
    if args.fail_under is not None and report.aggregates["mean_fitness"] < args.fail_under:
        print(f"mean fitness {report.aggregates['mean_fitness']:.4f} is below {args.fail_under}",
              file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def _listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {value!r}")
    return host or "127.0.0.1", int(port)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    mlms = load_model(args.model)
    host, port = args.listen
    app = create_app(mlms, max_body=args.max_body)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlmconform",
                                     description="Rule-based conformance checking of event logs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert an XML export to XES")
    p.add_argument("--config", required=True, help="converter YAML config")
    p.add_argument("--in", dest="input", required=True, help="source XML document")
    p.add_argument("--out", help="output XES file (default stdout)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", help="parse and cross-check a model directory")
    p.add_argument("--model", required=True, help="directory of *.mlm files")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="check an XES log against a model")
    p.add_argument("--model", required=True, help="directory of *.mlm files")
    p.add_argument("--log", required=True, help="XES event log")
    p.add_argument("--align", action="store_true", help="repair violations and re-check")
    p.add_argument("--seed", type=int, default=0, help="seed for RANDOM insertion strategy")
    p.add_argument("--max-restarts", type=int, default=50)
    p.add_argument("--persist-writes", action="store_true",
                   help="keep attribute-write events in the aligned log")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--out", help="report file (default stdout)")
    p.add_argument("--aligned-log", help="write the repaired traces as XES")
    p.add_argument("--fail-under", type=float, help="exit 1 if mean final fitness is lower")
    p.add_argument("--jobs", type=int, default=1, help="traces checked in parallel")
    p.add_argument("--server", help="evoke rules through a running server at this URL")
    p.add_argument("--per-event", action="store_true", help="with --server, one call per event")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("serve", help="run the HTTP rule server")
    p.add_argument("--model", required=True, help="directory of *.mlm files")
    p.add_argument("--listen", type=_listen, default=("127.0.0.1", 8080), help="HOST:PORT")
    p.add_argument("--max-body", type=int, default=16 * 1024 * 1024, help="max request bytes")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "max_restarts", 1) < 1:
        parser.error("--max-restarts must be at least 1")
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EventLogError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
