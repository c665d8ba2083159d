"""
Command-line entry point.

    python cli.py simulate --config configs/zumbach.cfg --mode thinning --out runs/zumbach
    python cli.py analyze  runs/zumbach/series.csv --fit-min 100 --fit-max 10000 --windows 9
    python cli.py predict  --config configs/hawkes_zumbach.cfg --regime chi_small
    python cli.py verify   runs/zumbach/events.csv --config configs/zumbach.cfg --tol 1e-9
    python cli.py sweep    --config configs/poisson.cfg --seeds 1-20 --out runs/sweep

Exit status: 0 pass, 1 a verdict failed, 2 invalid input, 3 truncated run.
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from services.config import load_config
from services.errors import ToolkitError
from services.storage import read_series
from services.toolkit import MODES, ZHawkesToolkit

EXIT_OK, EXIT_FAIL, EXIT_ERROR, EXIT_TRUNCATED = 0, 1, 2, 3

logger = logging.getLogger('zhawkes')


def _print(result) -> None:
    print(json.dumps(result, indent=2, sort_keys=True, default=str))


def parse_seeds(text: str) -> List[int]:
    """'1-5,9' -> [1, 2, 3, 4, 5, 9]"""
    seeds = []
    for part in text.split(','):
        part = part.strip()
        if '-' in part:
            lo, hi = part.split('-', 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError(f"No seeds in {text!r}")
    return seeds


def cmd_simulate(args, toolkit: ZHawkesToolkit) -> int:
    config = load_config(args.config, seed_override=args.seed)
    summary = toolkit.simulate(config, mode=args.mode, out_dir=args.out)
    _print(summary)
    return EXIT_TRUNCATED if summary.get('truncated') else EXIT_OK


def cmd_analyze(args, toolkit: ZHawkesToolkit) -> int:
    series_file = read_series(args.series)
    result = toolkit.analyze(
        series_file,
        fit_min=args.fit_min,
        fit_max=args.fit_max,
        n_windows=args.windows,
        burn_in=args.burn_in,
        subsample_gap=args.subsample_gap,
        threshold=args.threshold,
        out_dir=args.out,
    )
    if not args.full:
        result.pop('survival', None)
    _print(result)
    return EXIT_OK if result['passed'] else EXIT_FAIL


def cmd_predict(args, toolkit: ZHawkesToolkit) -> int:
    config = load_config(args.config)
    _print(toolkit.predict(config.params, args.regime))
    return EXIT_OK


def cmd_verify(args, toolkit: ZHawkesToolkit) -> int:
    config = load_config(args.config)
    result = toolkit.verify(args.events, config, tol=args.tol, n_checkpoints=args.checkpoints,
                            replay=args.replay)
    report = result.pop('report', None)
    _print(result)
    if report:
        print(report)
    return EXIT_OK if result['passed'] else EXIT_FAIL


def cmd_sweep(args, toolkit: ZHawkesToolkit) -> int:
    config = load_config(args.config)
    summaries = toolkit.sweep(config, args.seeds, args.out, mode=args.mode, workers=args.workers)
    _print(summaries)
    return EXIT_TRUNCATED if any(s.get('truncated') for s in summaries) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='zhawkes', description="Hawkes / ZHawkes simulation and analysis toolkit")
    parser.add_argument('--log-level', default=os.environ.get('LOG_LEVEL', 'INFO'))
    sub = parser.add_subparsers(dest='command', required=True)

    simulate = sub.add_parser('simulate', help="Run the thinning simulator or the SDE integrator")
    simulate.add_argument('--config', required=True)
    simulate.add_argument('--mode', choices=MODES, default='thinning')
    simulate.add_argument('--out', required=True)
    simulate.add_argument('--seed', type=int, default=None, help="Override the config seed")
    simulate.set_defaults(handler=cmd_simulate)

    analyze = sub.add_parser('analyze', help="Tail fits and stationarity diagnostics of a series file")
    analyze.add_argument('series')
    analyze.add_argument('--fit-min', type=float, default=1e2)
    analyze.add_argument('--fit-max', type=float, default=1e4)
    analyze.add_argument('--windows', type=int, default=9)
    analyze.add_argument('--burn-in', type=float, default=None)
    analyze.add_argument('--subsample-gap', type=float, default=None)
    analyze.add_argument('--threshold', type=float, default=0.1)
    analyze.add_argument('--out', default=None, help="Directory for survival.csv and running_mean.csv")
    analyze.add_argument('--full', action='store_true', help="Include the survival curve in the summary")
    analyze.set_defaults(handler=cmd_analyze)

    predict = sub.add_parser('predict', help="Closed-form tail exponent and stability class")
    predict.add_argument('--config', required=True)
    predict.add_argument('--regime', choices=('exact_nH0', 'chi_small', 'chi_large'), default=None)
    predict.set_defaults(handler=cmd_predict)

    verify = sub.add_parser('verify', help="Check an events file against the brute-force oracle")
    verify.add_argument('events')
    verify.add_argument('--config', required=True)
    verify.add_argument('--tol', type=float, default=1e-9)
    verify.add_argument('--checkpoints', type=int, default=1000)
    verify.add_argument('--no-replay', dest='replay', action='store_false',
                        help="Skip regenerating the run from its seed (hand-made files)")
    verify.set_defaults(handler=cmd_verify)

    sweep = sub.add_parser('sweep', help="Independent runs over several seeds")
    sweep.add_argument('--config', required=True)
    sweep.add_argument('--seeds', type=parse_seeds, required=True)
    sweep.add_argument('--mode', choices=MODES, default='thinning')
    sweep.add_argument('--out', required=True)
    sweep.add_argument('--workers', type=int, default=None)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format='%(asctime)s %(levelname)s %(name)s: %(message)s',
                        stream=sys.stderr)
    try:
        return args.handler(args, ZHawkesToolkit())
    except ToolkitError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main())
