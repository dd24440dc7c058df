"""Command-line client.

Subcommands map one-to-one to service endpoints; without --server the app is
mounted in-process so no daemon is needed. Every flag can be overridden by an
environment variable named CLOUDTUNER_<FLAG> (dashes become underscores, e.g.
CLOUDTUNER_ALPHA=0.4). Input files are read locally and shipped in the request
body; outputs are written locally from the response, so remote servers never
need access to the client filesystem.
"""

from __future__ import annotations

import argparse
import asyncio
import base64
import json
import os
import sys
from pathlib import Path

import httpx

from .errors import ERRORS_BY_CODE, CloudTunerError, IoError, ParseError

_ENV_PREFIX = "CLOUDTUNER_"

_EXIT_CODE_DOC = """\
exit codes:
  0   success
  2   usage error (bad flags or missing required inputs)
  3   parse_error            malformed input file or parameter text
  4   incomplete_grid        database missing (workload, config) cells
  5   dimension_mismatch     inconsistent metric/feature dimensions
  6   unknown_config / unknown_workload / missing_record / start_outside_space
  7   invalid_values / invalid_ratio / empty_training_set / empty_samples /
      empty_list / trace_too_short
  8   k_too_large / too_few_workloads
  9   model_format_error     unreadable or wrong-version model file
  10  io_error               file could not be read or written
  1   any other error

environment overrides: every flag may be set via CLOUDTUNER_<FLAG>,
e.g. CLOUDTUNER_SERVER=http://host:8000, CLOUDTUNER_THREADS=4.
"""


def _env_name(flag: str) -> str:
    return _ENV_PREFIX + flag.lstrip("-").upper().replace("-", "_")


def _add(parser: argparse.ArgumentParser, flag: str, **kwargs):
    """add_argument with environment-variable default override."""
    env_value = os.environ.get(_env_name(flag))
    if env_value is not None:
        if kwargs.get("action") == "store_true":
            kwargs["default"] = env_value.lower() in ("1", "true", "yes")
        else:
            caster = kwargs.get("type", str)
            kwargs["default"] = caster(env_value)
        kwargs.pop("required", None)
    parser.add_argument(flag, **kwargs)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(path, json=payload)
    else:
        from .service import create_app

        async def _go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://cloudtuner.local", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(_go())
    if resp.status_code != 200:
        body = {}
        try:
            body = resp.json()
        except ValueError:
            pass
        if isinstance(body, dict) and "error_code" in body:
            cls = ERRORS_BY_CODE.get(body["error_code"], CloudTunerError)
            err = CloudTunerError(body.get("message", "service error"))
            err.code = cls.code
            err.exit_status = cls.exit_status
            raise err
        raise CloudTunerError(f"service returned HTTP {resp.status_code}: {resp.text[:500]}")
    return resp.json()


def _maybe_space_csv(args) -> str | None:
    return _read_text(args.space) if args.space else None


def cmd_gen(args) -> int:
    resp = _post(
        args.server,
        "/generate",
        {"params_text": _read_text(args.params), "space_csv": _maybe_space_csv(args)},
    )
    _write_text(args.out, resp["db_csv"])
    if args.out_space:
        _write_text(args.out_space, resp["space_csv"])
    print(f"wrote {resp['n_workloads']} workloads x {resp['n_configs']} configs to {args.out}")
    return 0


def cmd_train(args) -> int:
    resp = _post(
        args.server,
        "/train",
        {
            "db_csv": _read_text(args.db),
            "space_csv": _maybe_space_csv(args),
            "exclude_workload": args.exclude,
            "objective": args.objective,
            "n_trees": args.n_trees,
            "min_leaf": args.min_leaf,
            "max_features": args.max_features,
            "seed": args.seed,
            "max_pairs_per_workload": args.max_pairs,
        },
    )
    try:
        Path(args.model_out).write_bytes(base64.b64decode(resp["model_b64"]))
    except OSError as exc:
        raise IoError(f"cannot write {args.model_out}: {exc}") from exc
    flag = " (constant)" if resp["constant"] else ""
    print(f"trained on {resp['n_samples']} pairs (dim {resp['feature_dim']}){flag} -> {args.model_out}")
    return 0


def cmd_search(args, parser: argparse.ArgumentParser) -> int:
    if args.method == "scout" and not args.model and not args.train_exclude_self:
        parser.error("--method scout requires --model or --train-exclude-self")
    model_b64 = None
    if args.model:
        try:
            model_b64 = base64.b64encode(Path(args.model).read_bytes()).decode("ascii")
        except OSError as exc:
            raise IoError(f"cannot read {args.model}: {exc}") from exc
    payload = {
        "db_csv": _read_text(args.db),
        "space_csv": _maybe_space_csv(args),
        "workload_id": args.workload,
        "method": args.method,
        "objective": args.objective,
        "model_b64": model_b64,
        "train_exclude_self": args.train_exclude_self,
        "alpha": args.alpha,
        "beta": args.beta,
        "k": args.k,
        "n_init": args.n_init,
        "ei_stop": args.ei_stop,
        "start": args.start,
        "seed": args.seed,
        "max_pairs_per_workload": args.max_pairs,
    }
    resp = _post(args.server, "/search", payload)
    trace = resp["trace"]
    if args.trace_out:
        _write_text(args.trace_out, json.dumps(resp, indent=2) + "\n")
    print(
        f"{trace['method']} best={trace['best']['config']} value={trace['best']['value']:.6g} "
        f"normalized={resp['normalized_perf']:.4f} steps={len(trace['steps'])} "
        f"stop={trace['stop_reason']}"
    )
    return 0


def cmd_eval(args) -> int:
    try:
        eval_config = json.loads(_read_text(args.config))
    except json.JSONDecodeError as exc:
        raise ParseError(f"eval config is not valid JSON: {exc}") from exc
    resp = _post(
        args.server,
        "/evaluate",
        {
            "db_csv": _read_text(args.db),
            "space_csv": _maybe_space_csv(args),
            "eval_config": eval_config,
            "threads": args.threads,
            "format": args.format,
        },
    )
    _write_text(args.out, resp["rendered"])
    n_methods = len(resp["report"]["methods"])
    print(f"evaluated {n_methods} methods -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudtuner",
        description="Find the best cloud configuration (time, cost, or time*cost) for a workload.",
        epilog=_EXIT_CODE_DOC,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_db=True):
        _add(p, "--server", type=str, default=None, help="service URL; default runs in-process")
        if with_db:
            _add(p, "--db", type=str, required=True, help="performance database CSV")
            _add(p, "--space", type=str, default=None, help="space CSV (default: bundled 72-cell grid)")

    p = sub.add_parser("gen", help="generate a synthetic performance database")
    _add(p, "--params", type=str, required=True, help="generator parameters file (key=value)")
    _add(p, "--space", type=str, default=None, help="space CSV (default: bundled 72-cell grid)")
    _add(p, "--out", type=str, required=True, help="output database CSV path")
    _add(p, "--out-space", type=str, default=None, help="also write the space CSV used")
    _add(p, "--server", type=str, default=None, help="service URL; default runs in-process")

    p = sub.add_parser("train", help="train and persist a pairwise model")
    common(p)
    _add(p, "--exclude", type=str, default=None, help="workload to hold out of training")
    _add(p, "--objective", type=str, default="time", choices=["time", "cost", "time_cost_product"], help="objective (default time)")
    _add(p, "--n-trees", type=int, default=100, help="ensemble size (default 100)")
    _add(p, "--min-leaf", type=int, default=5, help="minimum leaf size (default 5)")
    _add(p, "--max-features", type=int, default=None, help="split candidates per node (default ceil(sqrt(dim)))")
    _add(p, "--seed", type=int, default=0, help="training seed (default 0)")
    _add(p, "--max-pairs", type=int, default=None, help="cap on training pairs per workload")
    _add(p, "--model-out", type=str, required=True, help="output model path")

    p = sub.add_parser("search", help="run one search for a workload")
    common(p)
    _add(p, "--workload", type=str, required=True, help="workload id")
    _add(p, "--method", type=str, default="scout", choices=["scout", "random", "coordinate_descent", "bayesopt"], help="search method (default scout)")
    _add(p, "--objective", type=str, default="time", choices=["time", "cost", "time_cost_product"], help="objective (default time)")
    _add(p, "--model", type=str, default=None, help="persisted pairwise model (scout)")
    _add(p, "--train-exclude-self", action="store_true", default=False, help="train on the fly, excluding the target workload (scout)")
    _add(p, "--alpha", type=float, default=0.5, help="probability threshold (default 0.5)")
    _add(p, "--beta", type=int, default=None, help="misprediction tolerance (default: 3 if <=24 configs else 4)")
    _add(p, "--k", type=int, default=6, help="random search budget (default 6)")
    _add(p, "--n-init", type=int, default=3, help="bayesopt initial samples (default 3)")
    _add(p, "--ei-stop", type=float, default=0.10, help="bayesopt EI stop threshold (default 0.10)")
    _add(p, "--start", type=str, default=None, help="start config id like m4.xlarge.8 (default: space midpoint)")
    _add(p, "--seed", type=int, default=0, help="run seed (default 0)")
    _add(p, "--max-pairs", type=int, default=None, help="cap on training pairs per workload")
    _add(p, "--trace-out", type=str, default=None, help="write the full trace JSON here")

    p = sub.add_parser("eval", help="run the leave-one-workload-out comparison")
    common(p)
    _add(p, "--config", type=str, required=True, help="evaluation config JSON")
    _add(p, "--out", type=str, required=True, help="output report path")
    _add(p, "--format", type=str, default="json", choices=["json", "csv"], help="report format (default json)")
    _add(p, "--threads", type=int, default=1, help="internal parallelism cap (default 1)")

    p = sub.add_parser("serve", help="run the HTTP service")
    _add(p, "--host", type=str, default="127.0.0.1", help="bind address (default 127.0.0.1)")
    _add(p, "--port", type=int, default=8000, help="port (default 8000)")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "search":
            return cmd_search(args, parser)
        if args.command == "eval":
            return cmd_eval(args)
        if args.command == "serve":
            return cmd_serve(args)
        parser.error(f"unknown command {args.command!r}")
    except CloudTunerError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return exc.exit_status
    return 2


if __name__ == "__main__":
    sys.exit(main())
