"""Command line entry point: ``ris run|sweep|spectrum|verify <config>``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import scenario
from .errors import RISError

EXIT_OK, EXIT_ERROR, EXIT_VERIFY = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ris", description="Repeated interaction system simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", type=Path)
        sp.add_argument("--out", help=f"output directory (default: ${scenario.OUT_DIR_ENV} or ./ris_out)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        return sp

    r = common(sub.add_parser("run", help="single run at the first T (or --T)"))
    r.add_argument("--T", type=int)
    r.add_argument("--lambda", dest="lam", type=float)
    w = common(sub.add_parser("sweep", help="all (T, lambda) combinations"))
    w.add_argument("--workers", type=int, default=1)
    sp = common(sub.add_parser("spectrum", help="spectral report of the channel at one s"))
    sp.add_argument("--s", type=float, default=0.0)
    common(sub.add_parser("verify", help="structural and thermodynamic checks"))
    return p


def _dump(obj, path: Path | None = None):
    text = json.dumps(obj, indent=2, default=float)
    if path is not None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(text)
        tmp.replace(path)
    print(text)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = scenario.ScenarioConfig.from_file(args.config)
        if args.seed is not None:
            cfg = cfg.with_(seed=args.seed)
        out = scenario.output_dir(cfg, args.out)
        if args.command == "run":
            T = args.T or cfg.T_list[0]
            res = scenario.run_scenario(cfg, T, args.lam, out=out)
            _dump({**res.ledger.totals(), **res.row()})
            return EXIT_OK if not res.ledger.incomplete else EXIT_ERROR
        if args.command == "sweep":
            result = scenario.sweep(cfg, out, workers=args.workers)
            _dump(result.rows)
            return EXIT_OK
        if args.command == "spectrum":
            _dump(scenario.spectrum_report(cfg, args.s), out / f"spectrum_s{args.s:g}.json")
            return EXIT_OK
        report = scenario.verify_suite(cfg)
        _dump(report.as_dict(), out / "verify.json")
        return EXIT_OK if report.passed else EXIT_VERIFY
    except (RISError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
