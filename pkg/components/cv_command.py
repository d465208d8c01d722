"""
cv command: choose the tuning parameter by cross-validation
"""

import logging

from utils.config import get_settings
from utils.datasets import load_dataset
from utils.estimators import EstimatorConfig, fit
from utils.reports import build_report, estimates_block, save_report
from utils.tuning import CvSpec, cross_validate, default_grid

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    settings = get_settings()
    parser = subparsers.add_parser("cv", help="Select beta/gamma by K-fold cross-validation")
    parser.add_argument("input", help="angles-csv (p=2, radians) or vectors-csv file")
    parser.add_argument("--format", choices=("angles", "vectors"), default=None)
    parser.add_argument("--estimator", choices=("type1", "type0"), default="type1")
    parser.add_argument("--grid", type=float, nargs="+", default=None, help="candidates (default h/100, h=1..100)")
    parser.add_argument("--folds", type=int, default=3)
    parser.add_argument("--loss-param", type=float, default=0.6)
    parser.add_argument("--seed", type=int, default=settings['default_seed'])
    parser.add_argument("--tol", type=float, default=settings['default_tol'])
    parser.add_argument("--max-iter", type=int, default=settings['default_max_iter'])
    parser.add_argument("--out", default=None, help="report path (default: stdout)")
    parser.add_argument("--curve-csv", default=None, help="write the CV curve as CSV")
    parser.set_defaults(handler=run_cv)
    return parser


def run_cv(args) -> int:
    """Run the cv command; the report also holds the refit at the selected value"""
    dataset = load_dataset(args.input, args.format)
    config = EstimatorConfig(max_iter=args.max_iter, tol=args.tol)
    spec = CvSpec(grid=tuple(args.grid) if args.grid else default_grid(), folds=args.folds,
                  loss_param=args.loss_param, seed=args.seed, config=config)
    result = cross_validate(dataset.points, args.estimator, spec)

    final = fit(args.estimator, dataset.points, result.best, config)
    payload = result.to_dict()
    payload['seed'] = args.seed
    payload['folds'] = args.folds
    payload['fit'] = estimates_block(final.xi_hat)
    payload['fit']['converged'] = final.converged

    if args.curve_csv:
        result.curve.to_csv(args.curve_csv, index=False)
    save_report(build_report("cv", payload), args.out)
    return 0 if final.converged else 3
