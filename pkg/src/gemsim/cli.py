"""Command-line entry point: ``gemsim {run,compare,sweep,oracle}``."""
import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import pipeline
from .analysis import NonPhysicalDensity
from .config import ConfigError, ExperimentConfig
from .fockspace import CutoffTooSmall

EXIT_OK, EXIT_NUMERIC, EXIT_INVALID = 0, 1, 2
CONFIG_ENV = "GEMSIM_CONFIG"

class InputError(Exception):
    pass


def _plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


class _ExactFloat(float):
    def __repr__(self):
        return format_float(self)


def format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % (x + 0.0)  # + 0.0 turns -0.0 into 0.0


def _exact_floats(obj):
    if isinstance(obj, dict):
        return {k: _exact_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_exact_floats(v) for v in obj]
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else _ExactFloat(obj)
    return obj


class _Encoder(json.JSONEncoder):
    def iterencode(self, o, _one_shot=False):
        # force the pure-Python encoder so float.__repr__ overrides are honoured
        return json.encoder._make_iterencode(
            {}, self.default, json.encoder.py_encode_basestring_ascii, self.indent,
            repr, self.key_separator, self.item_separator, self.sort_keys,
            self.skipkeys, _one_shot)(o, 0)


def to_json(obj) -> str:
    """Deterministic JSON: insertion key order, floats as %.17g, non-finite as null."""
    return json.dumps(_exact_floats(_plain(obj)), cls=_Encoder, indent=2) + "\n"


def to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        out = []
        for c in columns:
            v = _plain(row.get(c))
            if v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append(int(v))
            elif isinstance(v, float):
                out.append(format_float(v) if math.isfinite(v) else "")
            else:
                out.append(v)
        writer.writerow(out)
    return buf.getvalue()


def _load_json(path: str, what: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {what} {path}: {exc}") from None


def load_raw_config(path: str = None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    raw = _load_json(path, "config")
    if not isinstance(raw, dict):
        raise InputError(f"config {path} must hold a JSON object")
    return raw


def _emit(text: str, out: str = None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _flatten_run(report: dict) -> dict:
    row = {"model": report["model"]}
    row.update({f"phi_{k}_rad": v for k, v in report["phases_rad"].items()})
    row["entangling_phase_rad"] = report["entangling_phase_rad"]
    row.update(report["entanglement"])
    row.update(report["interference"])
    return row


def cmd_run(args, raw):
    config = ExperimentConfig.from_dict(raw)
    report = pipeline.run(config)
    if args.format == "csv":
        row = _flatten_run(report)
        return to_csv([row], list(row)), EXIT_OK
    return to_json(report), EXIT_OK


def cmd_compare(args, raw):
    config = ExperimentConfig.from_dict(raw)
    result = pipeline.compare(config, args.observed_witness)
    if args.format == "csv":
        return to_csv(result["rows"], pipeline.COMPARE_COLUMNS), EXIT_OK
    return to_json(result), EXIT_OK


def cmd_sweep(args, raw):
    if args.spec:
        spec = _load_json(args.spec, "sweep spec")
    elif "sweep" in raw:
        spec = raw["sweep"]
    else:
        raise InputError("sweep needs --spec or a 'sweep' entry in the config")
    base = {k: v for k, v in raw.items() if k != "sweep"}
    ExperimentConfig.from_dict(base)
    try:
        rows = pipeline.sweep(base, spec, args.workers)
    except pipeline.SweepSpecError as exc:
        raise InputError(f"invalid sweep spec: {exc}") from None
    columns = list(rows[0])
    if args.format == "csv":
        return to_csv(rows, columns), EXIT_OK
    return to_json({"columns": columns, "rows": rows}), EXIT_OK


def cmd_oracle(args, raw):
    config = ExperimentConfig.from_dict(raw)
    result = pipeline.oracle(config, args.n_max)
    code = EXIT_OK if result["passed"] else EXIT_NUMERIC
    if args.format == "csv":
        return to_csv(result["audits"], ["name", "delta", "tolerance", "passed"]), code
    return to_json(result), code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gemsim",
        description="Gravitationally mediated entanglement between two interferometric masses.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV}, then built-ins)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--seed", type=int, default=None,
                        help="accepted for interface stability; every computation is deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("run", parents=[common], help="evolve one configuration and report the masses' state")
    p.set_defaults(handler=cmd_run)
    p = sub.add_parser("compare", parents=[common], help="predictions of every theory class, plus a verdict")
    p.add_argument("--observed-witness", type=float, default=None)
    p.set_defaults(handler=cmd_compare)
    p = sub.add_parser("sweep", parents=[common], help="scan one parameter")
    p.add_argument("--spec", help="JSON sweep spec: {parameter, values | range, columns}")
    p.set_defaults(handler=cmd_sweep)
    p = sub.add_parser("oracle", parents=[common], help="cross-check the backends against brute force")
    p.add_argument("--n-max", type=int, default=None, help="Fock cutoff for the truncated backends")
    p.set_defaults(handler=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    if getattr(args, "n_max", None) is not None and args.n_max < 1:
        print("error: --n-max must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        raw = load_raw_config(args.config)
        text, code = args.handler(args, raw)
    except (InputError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (CutoffTooSmall, NonPhysicalDensity, ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(text, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
