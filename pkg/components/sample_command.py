"""
sample command: draw a vectors-csv dataset from vMF or a contamination mixture
"""

import logging

from utils.config import get_settings
from utils.datasets import write_vectors_csv
from utils.errors import ParseError
from utils.vmf_model import MixtureModel, sample

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser("sample", help="Draw points from vMF(xi) or a mixture")
    parser.add_argument("--xi", type=float, nargs="+", required=True, help="natural parameter")
    parser.add_argument("--epsilon", type=float, default=0.0, help="contamination weight")
    parser.add_argument("--contaminant", nargs="+", default=["uniform"],
                        help="'uniform' or the contaminant natural parameter")
    parser.add_argument("-n", type=int, required=True)
    parser.add_argument("--seed", type=int, default=get_settings()['default_seed'])
    parser.add_argument("--out", default=None, help="vectors-csv path (default: stdout)")
    parser.set_defaults(handler=run_sample)
    return parser


def mixture_from_args(xi, epsilon, contaminant) -> MixtureModel:
    if not contaminant or contaminant == ["uniform"]:
        return MixtureModel(xi, epsilon)
    try:
        eta = [float(v) for v in contaminant]
    except ValueError:
        raise ParseError(f"--contaminant must be 'uniform' or numbers, got {' '.join(contaminant)}")
    return MixtureModel(xi, epsilon, eta)


def run_sample(args) -> int:
    model = mixture_from_args(args.xi, args.epsilon, args.contaminant)
    points = sample(model, args.n, args.seed)
    text = write_vectors_csv(points, args.out)
    if not args.out:
        print(text, end="")
    logger.info("sampled %d points from %s", args.n, model.describe())
    return 0
