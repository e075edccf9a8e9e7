#!/usr/bin/env python3
"""
markov-urng CLI - finite-length security bounds for Markov random number generation
Usage: markov-urng COMMAND [--model PATH | --example P,Q] [options]
"""

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict
from typing import Any, Dict, List, Optional, Sequence

from .bounds import (
    CSV_HEADER,
    BoundQuery,
    SourceAnalysis,
    asymptotic,
    markov_bound,
    single_shot_bound,
    surng_mmir_bound,
    sweep,
    urng_rer_bound,
)
from .cli_args import RATE_THEOREMS, build_parser, handle_config_commands
from .config_store import URNGConfig, parse_grid, parse_theta_grid
from .errors import URNGError, ValidationError
from .extractor import ToeplitzSpec, extract_stream, pack_bits, read_bits, write_bits
from .markov_core import TransitionModel, binary_model, check_assumption, load_model
from .oracle import enumerate_paths, run_verification
from .renyi_measures import spectrum_table
from .report_display import ReportDisplay

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
# report fields carrying nats, rescaled by --bits
NATS_FIELDS = ("value", "R", "rate", "entropy_rate", "variance_rate", "cond_entropy_rate", "cond_variance_rate", "min_entropy_rate")


def _parse_example(text: str) -> TransitionModel:
    try:
        p, q = (float(v) for v in text.split(","))
    except ValueError:
        raise ValidationError(f"--example expects P,Q, got '{text}'")
    return binary_model(p, q)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ValidationError(f"{args.command} needs {', '.join(missing)}")


def _json_default(value: Any):
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "item"):
        return value.item()
    raise TypeError(f"cannot serialise {type(value).__name__}")


class URNGTool:
    def __init__(self, config: URNGConfig, report_display: ReportDisplay = None):
        self.config = config
        self.report_display = report_display

    # -- option resolution -------------------------------------------------

    def load_source(self, args: argparse.Namespace) -> TransitionModel:
        if args.example:
            return _parse_example(args.example)
        path = args.model or self.config.data.get("default_model")
        if not path:
            raise ValidationError("no model: pass --model or --example, or set a default with --set-default-model")
        model = load_model(path)
        logger.debug("loaded model %s: |X|=%d |Y|=%d", path, model.x_size, model.y_size)
        return model

    def output_format(self, args: argparse.Namespace) -> str:
        return args.format or self.config.data.get("default_format", "csv")

    def in_bits(self, args: argparse.Namespace) -> bool:
        return bool(self.config.data.get("bits")) if args.bits is None else args.bits

    def log_size(self, args: argparse.Namespace) -> Optional[float]:
        return None if args.log2_m is None else args.log2_m * LOG2

    # -- emission ------------------------------------------------------------

    def emit(
        self,
        args: argparse.Namespace,
        kind: str,
        payload: Dict[str, Any],
        header: Sequence[str],
        rows: List[Sequence[Any]],
        out_path: Optional[str] = None,
    ) -> None:
        fmt = self.output_format(args)
        if fmt == "text":
            if out_path:
                with open(out_path, "w", encoding="utf-8") as f:
                    ReportDisplay(color=False, file=f).display(kind, payload)
            else:
                (self.report_display or ReportDisplay()).display(kind, payload)
            return
        if fmt == "json":
            text = json.dumps(payload, indent=2, default=_json_default) + "\n"
        else:
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
            text = buffer.getvalue()
        if out_path:
            with open(out_path, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        else:
            sys.stdout.write(text)

    def scale(self, args: argparse.Namespace, data: Dict[str, Any], keys: Sequence[str] = NATS_FIELDS) -> Dict[str, Any]:
        if not self.in_bits(args):
            return data
        return {
            k: (v / LOG2 if k in keys and isinstance(v, (int, float)) and not isinstance(v, bool) else v)
            for k, v in data.items()
        }

    # -- commands ------------------------------------------------------------

    def spectrum(self, args: argparse.Namespace) -> None:
        model = self.load_source(args)
        grid = args.theta_grid or self.config.data.get("default_theta_grid")
        table = spectrum_table(model, parse_theta_grid(grid))
        variants = table["variants"]
        rows = [self.scale(args, row, variants) for row in table["rows"]]
        summary = self.scale(args, table["summary"])
        payload = {"variants": variants, "rows": rows, "summary": summary}
        # summary figures repeat on every csv row
        self.emit(
            args,
            "spectrum",
            payload,
            ["theta"] + variants + list(summary),
            [[row["theta"]] + [row[v] for v in variants] + list(summary.values()) for row in rows],
            args.out,
        )

    def assumptions(self, args: argparse.Namespace) -> None:
        model = self.load_source(args)
        reports = [check_assumption(model, which).to_dict() for which in ("A1", "A2")]
        header = ["assumption", "holds", "max_deviation", "tolerance"]
        self.emit(args, "assumptions", {"reports": reports}, header, [[r[h] for h in header] for r in reports], args.out)

    def bound(self, args: argparse.Namespace) -> None:
        model = self.load_source(args)
        _require(args, "n")
        if args.rate is None and args.log2_m is None:
            raise ValidationError("bound needs --rate or --log2M")
        if args.single_shot:
            self._single_shot(args, model)
            return
        analysis = SourceAnalysis(model)
        theorem = args.theorem or "ach"
        if theorem in RATE_THEOREMS:
            rate = args.rate if args.rate is not None else self.log_size(args) / args.n
            direction = "upper" if theorem.endswith("upper") else "lower"
            evaluate = urng_rer_bound if theorem.startswith("rer") else surng_mmir_bound
            report = evaluate(model, args.n, rate, direction, theta=args.theta, analysis=analysis)
        else:
            query = BoundQuery(
                n=args.n,
                rate=args.rate,
                log_m=self.log_size(args),
                epsilon=args.epsilon,
                theorem=theorem,
            )
            report = markov_bound(model, query, analysis)
        row = dict(zip(CSV_HEADER, report.csv_row()))
        row = self.scale(args, row)
        payload = self.scale(args, report.to_dict())
        self.emit(args, "bound", payload, CSV_HEADER, [[row[h] for h in CSV_HEADER]], args.out)

    def _single_shot(self, args: argparse.Namespace, model: TransitionModel) -> None:
        if model.has_side_info:
            raise ValidationError("--single-shot works on single-terminal models")
        dist = enumerate_paths(model, args.n).x_marginal()
        log_m = self.log_size(args) if args.log2_m is not None else args.n * args.rate
        result = single_shot_bound(dist, math.exp(log_m), args.single_shot)
        payload = asdict(result)
        header = ["kind", "value", "measure", "direction", "clamped"]
        self.emit(args, "bound", _single_shot_view(payload), header, [[payload[h] for h in header]], args.out)

    def sweep(self, args: argparse.Namespace) -> None:
        model = self.load_source(args)
        _require(args, "n")
        theorems = [args.theorem] if args.theorem else None
        reports = sweep(model, args.n, parse_grid(args.eps_range), theorems)
        rows = [self.scale(args, dict(zip(CSV_HEADER, r.csv_row()))) for r in reports]
        for row, report in zip(rows, reports):
            row["neg_log10_epsilon"] = -math.log10(report.query.epsilon)
        self.emit(args, "sweep", {"rows": rows}, CSV_HEADER, [[row[h] for h in CSV_HEADER] for row in rows], args.out)

    def asymptotic(self, args: argparse.Namespace) -> None:
        model = self.load_source(args)
        _require(args, "regime")
        result = asymptotic(
            model,
            args.regime,
            rate=args.rate,
            n=args.n,
            epsilon=args.epsilon,
            delta=args.delta,
            conditional=args.conditional,
        )
        payload = self.scale(args, asdict(result))
        header = ["regime", "value", "theta_star", "exact"]
        self.emit(args, "asymptotic", payload, header, [[payload[h] for h in header]], args.out)

    def extract(self, args: argparse.Namespace) -> None:
        _require(args, "n", "m", "seed_hex")
        spec = ToeplitzSpec.from_hex(args.n, args.m, args.seed_hex)
        if args.input:
            source = read_bits(args.input)
        else:
            source = self.load_source(args)
        result = extract_stream(
            source,
            args.n,
            args.m,
            spec,
            blocks=args.blocks,
            audit=args.audit,
            sample_seed=args.sample_seed,
        )
        if args.out:
            write_bits(args.out, result.bits)
        summary = result.summary()
        if not args.out:
            summary["output_hex"] = pack_bits(result.bits).hex()
        header = ["blocks", "n", "m", "output_bits", "seed_hex"]
        self.emit(args, "extraction", summary, header, [[summary[h] for h in header]])

    def verify(self, args: argparse.Namespace) -> None:
        model = self.load_source(args)
        report = run_verification(model)
        header = ["kind", "n", "theta", "slack_low", "slack_high", "holds"]
        self.emit(args, "verification", report, header, [[c[h] for h in header] for c in report["cells"]], args.out)
        if not report["holds"]:
            sys.exit(1)

    def run(self, args: argparse.Namespace) -> None:
        handlers = {
            "spectrum": self.spectrum,
            "assumptions": self.assumptions,
            "bound": self.bound,
            "sweep": self.sweep,
            "asymptotic": self.asymptotic,
            "extract": self.extract,
            "verify": self.verify,
        }
        handlers[args.command](args)


def _single_shot_view(payload: Dict[str, Any]) -> Dict[str, Any]:
    """Single-shot results rendered through the bound renderer."""
    return {
        "theorem": payload["kind"],
        "quantity": f"{payload['measure']} ({payload['direction']})",
        "value": payload["value"],
        "clamped": payload["clamped"],
        "feasible": True,
        **{k: v for k, v in payload["optimizer"].items()},
    }


def main(argv: Optional[Sequence[str]] = None):
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    # Build config (with optional custom path)
    cfg = URNGConfig(path_arg=args.config_path)

    try:
        # Handle config commands
        if handle_config_commands(cfg, args):
            return
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("Error: a command is required", file=sys.stderr)
            sys.exit(2)
        URNGTool(cfg).run(args)
    except URNGError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except KeyboardInterrupt:
        print("\nCancelled", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
