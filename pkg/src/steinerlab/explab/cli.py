"""Command line entry point: ``steinerlab <experiment> [options]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .. import __version__
from ..errors import InputError
from .config import KINDS, OUT_DIR_ENV, config_from_dict, load_config_dict, with_overrides
from .experiments import FAIL, PASS, SKIP, Report, run

log = logging.getLogger("steinerlab")


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def table_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    fields = []
    for r in rows:
        for k in r:
            if k not in fields:
                fields.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def write_report(rep: Report, cfg, out_dir: Path) -> list[str]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in sorted(rep.tables.items()):
        path = out_dir / f"{name}.csv"
        path.write_text(table_to_csv(rows))
        written.append(path.name)
    for name, text in sorted(rep.traces.items()):
        path = out_dir / f"trace_{name}.jsonl"
        path.write_text(text)
        written.append(path.name)
    manifest = {"experiment": rep.kind, "version": __version__, "config": cfg.to_dict(),
                "counts": rep.counts(), "outputs": sorted(written)}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return written + ["manifest.json"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="steinerlab", description="Affine surface area and Steiner symmetrization experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="experiment", required=True)
    for kind in KINDS:
        s = sub.add_parser(kind)
        s.add_argument("--config", help="JSON file or key = value file")
        s.add_argument("--seed", type=int)
        s.add_argument("--out-dir", help=f"output directory (default: ${OUT_DIR_ENV} or ./steinerlab_out)")
        s.add_argument("--resolution", type=int, help="quadrature grid_resolution")
        s.add_argument("--epsilon", type=float, help="boundary_margin")
        s.add_argument("--jobs", type=int, help="worker processes")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        data = load_config_dict(args.config) if args.config else {}
        if data.get("kind", args.experiment) != args.experiment:
            raise InputError(f"config is for {data['kind']!r}, not {args.experiment!r}")
        cfg = config_from_dict(data, args.experiment)
        cfg = with_overrides(cfg, seed=args.seed, out_dir=args.out_dir, resolution=args.resolution,
                             epsilon=args.epsilon, jobs=args.jobs)
    except (InputError, OSError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    log.info("running %s", cfg.kind)
    rep = run(cfg)
    out = cfg.output_dir()
    write_report(rep, cfg, out)
    c = rep.counts()
    print(f"{cfg.kind}: {c[PASS]} passed, {c[FAIL]} failed, {c[SKIP]} skipped -> {out}")
    for r in rep.rows():
        if r.get("verdict") == FAIL:
            print("FAIL " + ", ".join(f"{k}={v}" for k, v in r.items() if k != "verdict"))
    return 1 if rep.failed else 0


if __name__ == "__main__":
    sys.exit(main())
