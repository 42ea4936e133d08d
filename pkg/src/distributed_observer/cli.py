"""
CLI entrypoint. Use from project root:
  python -m distributed_observer synthesize --config scenarios/two_agent_diag.yaml [--out output]
  python -m distributed_observer simulate --config scenarios/two_agent_diag.yaml [--gains output/two_agent_diag_synthesis.json]
  python -m distributed_observer verify [--config PATH] [--count 20] [--seed 0]
"""

import argparse
import json
import logging
import sys
from typing import List, Optional, Sequence

from distributed_observer.adapters import default_adapters
from distributed_observer.adapters.report import to_jsonable
from distributed_observer.application.pipeline import ObserverPipeline
from distributed_observer.application.verification import all_passed, failures
from distributed_observer.config import DEFAULT_SEED, LOG_LEVEL
from distributed_observer.domain.models import CertificateRow
from distributed_observer.errors import CertificateError, ObserverError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distributed_observer",
        description="Synthesize, simulate and verify distributed observers on switching networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool) -> None:
        p.add_argument("--config", required=config_required, help="Scenario YAML file (schema_version 1)")
        p.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
        p.add_argument("--out", default=None, help="Output directory (default DOBS_OUTPUT_DIR)")
        p.add_argument("--verbose", action="store_true",
                       help="Debug logging; simulate also writes state columns and per-round errors")

    common(sub.add_parser("synthesize", help="Design gains, choose q and write certificates"), True)
    p_sim = sub.add_parser("simulate", help="Run the multi-agent simulation and write a CSV trace")
    common(p_sim, True)
    p_sim.add_argument("--gains", default=None, help="Synthesis artifact to reuse instead of designing gains")
    p_ver = sub.add_parser("verify", help="Run the certificate suite (randomized when --config is omitted)")
    common(p_ver, False)
    p_ver.add_argument("--gains", default=None, help="Synthesis artifact to verify instead of designing gains")
    p_ver.add_argument("--count", type=int, default=20, help="Number of random scenarios")
    p_ver.add_argument("--tau-max", type=int, default=None,
                       help="Events simulated for the oracle check (scenario tau_max, or 50 for the random suite)")
    return parser


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, logging.INFO)
    logging.basicConfig(level=level, format="%(message)s", force=True)


def _print_table(rows: Sequence[CertificateRow]) -> None:
    print(f"{'result':<6}  {'check':<28}  {'graph':>5}  {'agent':>5}  {'value':>12}  label")
    for r in rows:
        value = r.get("value")
        print(
            f"{'PASS' if r['passed'] else 'FAIL':<6}  {r['check']:<28}  "
            f"{'' if r.get('graph') is None else r['graph'] + 1:>5}  "
            f"{'' if r.get('agent') is None else r['agent']:>5}  "
            f"{'' if value is None else f'{value:.4e}':>12}  {r['label']}"
            + (f"  ({r['detail']})" if r.get("detail") else "")
        )
    print(f"\n{len(rows) - len(failures(rows))}/{len(rows)} checks passed")


def _run(args: argparse.Namespace, pipeline: ObserverPipeline) -> int:
    overrides = {"seed": args.seed, "output_dir": args.out, "verbose": args.verbose}

    if args.command == "synthesize":
        config = pipeline.load(args.config, **overrides)
        result = pipeline.synthesize(config, strict=False)
        paths = pipeline.write_synthesis(result)
        print(json.dumps(paths, indent=2))
        if not result.passed:
            first = failures(result.rows)[0]
            raise CertificateError(f"certificate failed: {first['check']}", label=first["label"],
                                   value=first.get("value"))
        return 0

    if args.command == "simulate":
        config = pipeline.load(args.config, **overrides)
        sim = pipeline.simulate(config, gains_path=args.gains)
        print(json.dumps({k: sim.summary[k] for k in ("measured_rate", "lambda", "q", "rate_target_met", "trace")},
                         indent=2))
        return 0

    if args.config:
        config = pipeline.load(args.config, **overrides)
        rows = pipeline.verify(config, gains_path=args.gains, tau_max=args.tau_max)
    else:
        seed = args.seed if args.seed is not None else DEFAULT_SEED
        tau_max = 50 if args.tau_max is None else args.tau_max
        rows = pipeline.verify_random(count=args.count, seed=seed, tau_max=tau_max)
    _print_table(rows)
    if not all_passed(rows):
        first = failures(rows)[0]
        raise CertificateError(f"{len(failures(rows))} check(s) failed, first: {first['check']}",
                               label=first["label"], value=first.get("value"))
    return 0


def main(argv: Optional[List[str]] = None, pipeline: Optional[ObserverPipeline] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    pipeline = pipeline or ObserverPipeline(**default_adapters())
    try:
        return _run(args, pipeline)
    except ObserverError as e:
        logger.error("❌ %s", e)
        print(json.dumps(to_jsonable(e.to_record())), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
