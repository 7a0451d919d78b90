"""Command-line driver: ``relval select|evaluate|gridsearch|internal``.

Exit codes: 0 success, 1 computational failure, 2 configuration error.
Artifacts are written only after all computation has finished.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, canonical_json, load_config, sha256
from .gridsearch import leaderboard_csv, search
from .metrics import internal_sweep
from .plot import stability_svg
from .rng import RNG_FAMILY, TAG_SWEEP, derive_seed
from .selection import (WORKERS_ENV, StabilityResult, best_nclust_cv, evaluate,
                        evaluate_auto)

log = logging.getLogger("relval")


class ReportError(ConfigError):
    """A prior report is missing, corrupt or belongs to another configuration."""


def _workers(flag: int | None, cfg: RunConfig) -> int:
    if flag is not None:
        return flag
    if os.environ.get(WORKERS_ENV):
        return int(os.environ[WORKERS_ENV])
    return cfg.workers or 1


def _header(cfg: RunConfig) -> dict:
    config = {k: v for k, v in cfg.raw.items() if k not in ("workers", "output_dir")}
    return {"config_hash": cfg.hash, "seed": cfg.seed, "rng": RNG_FAMILY, "config": config}


def _sealed(payload: dict) -> str:
    """JSON text carrying an ``integrity`` digest over the rest of the payload."""
    payload = dict(payload)
    payload["integrity"] = sha256(canonical_json(payload))
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _unseal(path: Path) -> dict:
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError:
        raise ReportError(f"prior report not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ReportError(f"prior report is not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or "integrity" not in payload:
        raise ReportError(f"{path}: missing integrity digest")
    claimed = payload.pop("integrity")
    if sha256(canonical_json(payload)) != claimed:
        raise ReportError(f"{path}: integrity check failed (report was modified)")
    return payload


def _csv_text(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# config_hash={cfg.hash} seed={cfg.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write(out: Path, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


def _provenance(cfg: RunConfig, workers: int, seconds: float, command: str) -> str:
    return json.dumps({"command": command, "config_hash": cfg.hash, "seed": cfg.seed,
                       "workers": workers, "wall_clock_seconds": round(seconds, 3),
                       "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
                       "relval": __version__, "python": platform.python_version(),
                       "numpy": np.__version__}, indent=1, sort_keys=True) + "\n"


def _prepare(cfg: RunConfig):
    try:
        return cfg.prepare()
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None


# -- commands ----------------------------------------------------------------


def curve_rows(result: StabilityResult) -> list[dict]:
    return [{"k": k, "mean_norm": s.mean_norm, "ci_lo": s.ci95[0], "ci_hi": s.ci95[1],
             "mean_train": s.mean_train} for k, s in sorted(result.per_k.items())]


def cmd_select(cfg: RunConfig, out: Path, workers: int) -> int:
    prep = _prepare(cfg)
    clusterer = cfg.clusterer(prep.train)
    classifier = cfg.classifier()
    grid = cfg.grid(auto_k=clusterer.auto_k)
    t0 = time.perf_counter()
    result = best_nclust_cv(prep.train, clusterer, classifier, grid, prep.stratifier, workers)
    seconds = time.perf_counter() - t0
    log.info("k* = %d (%.1fs)", result.k_star, seconds)

    payload = _header(cfg)
    payload.update(clusterer=clusterer.to_dict(), classifier=classifier.to_dict(),
                   split=None if prep.split_json is None else json.loads(prep.split_json),
                   result=result.to_dict())
    rows = curve_rows(result)
    cells = [c for _, s in sorted(result.per_k.items()) for c in s.cells]
    files = {
        "stability.json": _sealed(payload),
        "curve.csv": _csv_text(cfg, ["k", "mean_norm", "ci_lo", "ci_hi", "mean_train",
                                     "random_threshold"],
                               [[r["k"], repr(r["mean_norm"]), repr(r["ci_lo"]),
                                 repr(r["ci_hi"]), repr(r["mean_train"]), "1.0"] for r in rows]),
        "cells.jsonl": "".join(c.to_json() + "\n" for c in cells),
        "curve.svg": stability_svg(rows, f"{cfg.dataset_id}: {classifier.kind}/{clusterer.kind}",
                                   __version__),
        "provenance.json": _provenance(cfg, workers, seconds, "select"),
    }
    _write(out, files)
    return 0


def cmd_evaluate(cfg: RunConfig, out: Path, workers: int, report: Path | None = None) -> int:
    report = report or out / "stability.json"
    prior = _unseal(report)
    if prior.get("config_hash") != cfg.hash:
        raise ReportError(f"{report} was produced by a different configuration")
    result = StabilityResult.from_dict(prior["result"])
    prep = _prepare(cfg)
    clusterer = cfg.clusterer(prep.train)
    classifier = cfg.classifier()
    t0 = time.perf_counter()
    if result.mode == "auto-k":
        ev = evaluate_auto(prep.train, prep.test, result, clusterer, classifier,
                           cfg.grid(auto_k=True), prep.stratifier)
    else:
        ev = evaluate(prep.train, prep.test, result.k_star, clusterer, classifier, cfg.seed)
    seconds = time.perf_counter() - t0
    payload = _header(cfg)
    payload.update(k_star=result.k_star, mode=result.mode, evaluation=ev.to_dict())
    _write(out, {"evaluation.json": _sealed(payload),
                 "provenance-evaluate.json": _provenance(cfg, workers, seconds, "evaluate")})
    return 0


def cmd_gridsearch(cfg: RunConfig, out: Path, workers: int) -> int:
    prep = _prepare(cfg)
    space = cfg.search_space(prep.train)
    t0 = time.perf_counter()
    outcome = search(prep.train, space, prep.stratifier, prep.test, workers)
    seconds = time.perf_counter() - t0
    payload = _header(cfg)
    payload["leaderboard"] = outcome.to_dict()
    classes = None
    if prep.train.true_labels is not None:
        classes = int(np.unique(prep.train.true_labels).size)
    table = leaderboard_csv(outcome, cfg.dataset_id, classes, cfg.preprocessing)
    _write(out, {"leaderboard.json": _sealed(payload),
                 "leaderboard.csv": f"# config_hash={cfg.hash} seed={cfg.seed}\n" + table,
                 "provenance-gridsearch.json": _provenance(cfg, workers, seconds,
                                                           "gridsearch")})
    if outcome.best is None:
        log.error("every configuration failed")
        return 1
    return 0


def cmd_internal(cfg: RunConfig, out: Path, workers: int) -> int:
    prep = _prepare(cfg)
    clusterer = cfg.clusterer(prep.train)
    if clusterer.auto_k:
        raise ConfigError("internal sweeps need a fixed-k clusterer")
    ks = cfg.grid().k_values
    rows = []
    t0 = time.perf_counter()
    for i, (name, data) in enumerate((("train", prep.train), ("test", prep.test))):
        sweep = internal_sweep(data, clusterer, ks, seed=derive_seed(cfg.seed, TAG_SWEEP, i))
        for k in ks:
            v = sweep.per_k[k]
            rows.append([name, k, repr(v["silhouette"]), repr(v["davies_bouldin"]),
                         int(k == sweep.best_silhouette_k), int(k == sweep.best_db_k)])
    seconds = time.perf_counter() - t0
    _write(out, {"internal.csv": _csv_text(cfg, ["split", "k", "silhouette", "davies_bouldin",
                                                 "is_best_silh", "is_best_db"], rows),
                 "provenance-internal.json": _provenance(cfg, workers, seconds, "internal")})
    return 0


COMMANDS = {"select": cmd_select, "evaluate": cmd_evaluate, "gridsearch": cmd_gridsearch,
            "internal": cmd_internal}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relval", description=(
        "Choose the number of clusters by cross-validated stability."))
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
        p.add_argument("--workers", type=int, help=f"worker processes (env: {WORKERS_ENV})")
        p.add_argument("--seed", type=int, help="override the cross-validation base seed")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "evaluate":
            p.add_argument("--report", type=Path,
                           help="prior stability.json (default: <out>/stability.json)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = load_config(args.config, seed=args.seed)
        out = args.out or (Path(cfg.raw["output_dir"]) if "output_dir" in cfg.raw else None)
        if out is None:
            raise ConfigError("no output directory: pass --out or set output_dir")
        workers = _workers(args.workers, cfg)
        extra = {"report": args.report} if args.command == "evaluate" else {}
        return COMMANDS[args.command](cfg, out, workers, **extra)
    except ConfigError as exc:
        print(f"relval: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"relval: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
