"""
diagnose command: influence function field, sandwich covariance, outlier
region, outlier flags and Q-Q coordinates
"""

import logging
from typing import Dict

import numpy as np

from components.sample_command import mixture_from_args
from utils.config import get_settings
from utils.datasets import load_dataset
from utils.diagnostics import asymptotic_cov, influence_grid
from utils.errors import ParseError
from utils.estimators import EstimatorConfig, fit
from utils.reports import build_report, estimates_block, save_report
from utils.vmf_model import (
    angle_goodness_of_fit,
    in_outlier_region,
    outlier_delta,
    outlier_delta_curve,
    qq_coordinates,
)

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    settings = get_settings()
    parser = subparsers.add_parser("diagnose", help="Influence, covariance, outliers and Q-Q data")
    parser.add_argument("input", nargs="?", default=None, help="dataset to fit (alternative to --xi)")
    parser.add_argument("--format", choices=("angles", "vectors"), default=None)
    parser.add_argument("--xi", type=float, nargs="+", default=None, help="natural parameter")
    parser.add_argument("--kind", choices=("mle", "type1", "type0"), default="mle")
    parser.add_argument("--tuning", type=float, default=0.0)
    parser.add_argument("--epsilon", type=float, default=0.0, help="contamination weight of G")
    parser.add_argument("--contaminant", nargs="+", default=["uniform"],
                        help="'uniform' or the contaminant natural parameter of G")
    parser.add_argument("--grid-size", type=int, default=360)
    parser.add_argument("--alpha", type=float, default=0.05, help="outlier tail probability")
    parser.add_argument("--delta-kappas", type=float, nargs="+", default=None,
                        help="also tabulate the outlier radius delta at these concentrations")
    parser.add_argument("--tol", type=float, default=settings['default_tol'])
    parser.add_argument("--max-iter", type=int, default=settings['default_max_iter'])
    parser.add_argument("--out", default=None, help="report path (default: stdout)")
    parser.add_argument("--if-csv", default=None, help="write the influence grid as CSV")
    parser.add_argument("--qq-csv", default=None, help="write Q-Q coordinates as CSV")
    parser.set_defaults(handler=run_diagnose)
    return parser


def diagnose_payload(args) -> Dict:
    points = None
    if args.xi is not None:
        xi = np.asarray(args.xi, dtype=float)
    elif args.input:
        dataset = load_dataset(args.input, args.format)
        points = dataset.points
        config = EstimatorConfig(max_iter=args.max_iter, tol=args.tol)
        xi = fit(args.kind, points, args.tuning, config).raise_for_status().xi_hat
    else:
        raise ParseError("diagnose needs an input file or --xi")

    g = mixture_from_args(xi, args.epsilon, args.contaminant)
    grid = influence_grid(args.kind, args.tuning, xi, g, args.grid_size)
    peak = grid['if_norm'].idxmax()
    low = grid['if_norm'].idxmin()
    coords = [c for c in grid.columns if c.startswith('x')]
    region = outlier_delta(xi, args.alpha)

    payload = {
        'kind': args.kind,
        'tuning': args.tuning,
        'mixture': g.describe(),
        'estimate': estimates_block(xi),
        'influence': {
            'grid': grid,
            'argmax': grid.loc[peak, coords].tolist(),
            'max_norm': float(grid.loc[peak, 'if_norm']),
            'argmin': grid.loc[low, coords].tolist(),
            'min_norm': float(grid.loc[low, 'if_norm']),
        },
        'covariance': asymptotic_cov(args.kind, args.tuning, xi, g).to_dict(),
        'outlier_region': {'alpha': region.alpha, 'delta': region.delta, 'residual': region.residual},
    }
    if args.delta_kappas:
        payload['delta_curve'] = outlier_delta_curve(xi.size, args.delta_kappas, args.alpha)

    if points is not None:
        flags = in_outlier_region(region, xi, points)
        qq = qq_coordinates(xi, points)
        payload['outlier_flags'] = np.atleast_1d(flags).tolist()
        payload['qq'] = qq
        payload['goodness_of_fit'] = angle_goodness_of_fit(xi, points)
        if args.qq_csv:
            qq.to_csv(args.qq_csv, index=False)

    if args.if_csv:
        grid.to_csv(args.if_csv, index=False)
    return payload


def run_diagnose(args) -> int:
    save_report(build_report("diagnose", diagnose_payload(args)), args.out)
    return 0
