"""
fit command: estimate xi from a dataset
"""

import logging
from typing import Dict

import numpy as np

from utils.config import get_settings
from utils.datasets import load_dataset
from utils.errors import DomainError
from utils.estimators import EstimatorConfig, LenthConfig, fit, fit_lenth
from utils.reports import build_report, estimates_block, save_report

logger = logging.getLogger(__name__)

ESTIMATOR_CHOICES = ("mle", "type1", "type0", "lenth")


def add_parser(subparsers):
    settings = get_settings()
    parser = subparsers.add_parser("fit", help="Estimate xi = kappa * mu from a dataset (radians)")
    parser.add_argument("input", help="angles-csv (p=2, radians) or vectors-csv file")
    parser.add_argument("--format", choices=("angles", "vectors"), default=None)
    parser.add_argument("--estimator", choices=ESTIMATOR_CHOICES, default="mle")
    parser.add_argument("--tuning", type=float, default=0.0, help="beta (type1) or gamma (type0)")
    parser.add_argument("--tol", type=float, default=settings['default_tol'])
    parser.add_argument("--max-iter", type=int, default=settings['default_max_iter'])
    parser.add_argument("--init", type=float, nargs="+", default=None, help="starting xi (default: MLE)")
    parser.add_argument("--psi", choices=("huber", "andrews"), default="huber", help="Lenth psi function")
    parser.add_argument("--c", type=float, default=1.5, help="Lenth tuning constant")
    parser.add_argument("--out", default=None, help="report path (default: stdout)")
    parser.set_defaults(handler=run_fit)
    return parser


def fit_payload(args) -> Dict:
    """Fit the requested estimator and return the report payload and convergence"""
    dataset = load_dataset(args.input, args.format)

    if args.estimator == "lenth":
        if dataset.p != 2:
            raise DomainError("Lenth's estimator is only defined for circular data")
        result = fit_lenth(dataset.angles, LenthConfig(args.psi, args.c, args.max_iter, args.tol))
        payload = {'estimator': 'lenth', 'psi': args.psi, 'c': args.c, 'n': dataset.n}
        payload.update(estimates_block(result.xi_hat))
        payload.update({'iterations': result.iterations, 'converged': result.converged})
        return payload

    config = EstimatorConfig(max_iter=args.max_iter, tol=args.tol,
                             init=tuple(args.init) if args.init else None)
    result = fit(args.estimator, dataset.points, args.tuning, config)
    payload = {'estimator': args.estimator, 'tuning': args.tuning, 'n': dataset.n, 'p': dataset.p}
    payload.update(estimates_block(result.xi_hat))
    payload.update({
        'iterations': result.iterations,
        'converged': result.converged,
        'status': result.status,
        'flags': result.flags,
        'step_trace': result.step_trace,
        'objective_trace': result.objective_trace,
    })
    return payload


def run_fit(args) -> int:
    """
    Run the fit command

    Returns:
        0 on convergence, 3 when the iteration did not converge
    """
    payload = fit_payload(args)
    save_report(build_report("fit", payload), args.out)
    if not payload['converged']:
        logger.error("%s fit did not converge", payload['estimator'])
        return 3
    return 0
