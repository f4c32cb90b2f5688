"""Command line entry point: ``pgmt <suite> [--config file] [--out dir] [--seed n] [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .report import emit_report
from .suites import DEFAULTS, SUITES, merge, run_suite

log = logging.getLogger("pgmt")

OUT_ENV = "PGMT_OUT"


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _exponents(text: str) -> list[int]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a range like 3:7, got {text!r}") from exc
    if not 0 <= a < b:
        raise argparse.ArgumentTypeError("ladder range must satisfy 0 <= a < b")
    return [a, b]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pgmt", description="Parabolic measure and curve-shortening lab")
    p.add_argument("suite", choices=SUITES + ("all",), help="experiment suite to run")
    p.add_argument("--config", type=Path, help="JSON configuration document")
    p.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./pgmt-out)")
    p.add_argument("--seed", type=int, help="seed for random curves and sampling")
    p.add_argument("--workers", type=int, help="processes for independent flow runs")
    p.add_argument("--curve", help="run a single registry curve instead of the default set")
    p.add_argument("--r0", type=float, help="radius for circle-like curves")
    p.add_argument("--n-vertices", type=int, dest="n_vertices", help="polygon vertices")
    p.add_argument("--ladder", type=_exponents,
                   help="delta ladder exponents a:b for coarea and theorem suites")
    p.add_argument("--eps", type=_floats, help="translator eps ladder as fractions of r0")
    p.add_argument("--no-theorem-c", action="store_true", help="skip the parabolic measure of the track")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _overrides(args: argparse.Namespace) -> dict:
    o: dict = {}
    if args.seed is not None:
        o["seed"] = args.seed
    if args.workers is not None:
        o["workers"] = args.workers
    flow = {k: getattr(args, k) for k in ("curve", "r0", "n_vertices") if getattr(args, k) is not None}
    if flow:
        o["flow"] = flow
    if args.ladder is not None:
        o["coarea"] = {"ladder": args.ladder}
        o["theorems"] = {"ladder": args.ladder}
    if args.no_theorem_c:
        o.setdefault("theorems", {})["theorem_C"] = False
    if args.eps is not None:
        o["translator"] = {"eps_fractions": args.eps}
    return o


def _validate(cfg: dict) -> None:
    def walk(d, path):
        for k, v in d.items():
            if isinstance(v, dict):
                walk(v, f"{path}{k}.")
            elif ("tol" in k or "tolerances." in path) and isinstance(v, (int, float)) and v <= 0:
                raise ValueError(f"tolerance {path}{k} must be positive")
    walk(cfg, "")
    if cfg["workers"] < 1:
        raise ValueError("workers must be at least 1")


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then command-line flags."""
    cfg = DEFAULTS
    if args.config is not None:
        doc = json.loads(args.config.read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ValueError("configuration must be a JSON object")
        cfg = merge(cfg, doc)
    cfg = merge(cfg, _overrides(args))
    _validate(cfg)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"pgmt: bad configuration: {exc}", file=sys.stderr)
        return 2
    out = args.out or Path(os.environ.get(OUT_ENV, "pgmt-out"))
    results = run_suite(args.suite, cfg)
    path = emit_report(results, out, cfg, cfg["seed"])
    for r in results:
        print(f"{r.name:14s} {'PASS' if r.passed else 'FAIL'}")
    print(f"report: {path}")
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
