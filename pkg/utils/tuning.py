"""
Cross-validation selection of the type 1 / type 0 tuning parameter
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from utils.divergences import pointwise_cv_loss
from utils.errors import DomainError, NonConvergenceError, PreconditionError, VmfError
from utils.estimators import EstimatorConfig, fit
from utils.vmf_model import make_rng

logger = logging.getLogger(__name__)

LOSS_KIND = {"type1": "beta", "type0": "gamma"}
CURVE_COLUMNS = ['candidate', 'score', 'failed_folds']


def default_grid() -> Tuple[float, ...]:
    """h/100 for h = 1..100"""
    return tuple(h / 100.0 for h in range(1, 101))


@dataclass(frozen=True)
class CvSpec:
    grid: Tuple[float, ...] = field(default_factory=default_grid)
    folds: int = 3
    loss_param: float = 0.6
    seed: int = 0
    config: EstimatorConfig = field(default_factory=EstimatorConfig)

    def __post_init__(self):
        grid = tuple(sorted(float(v) for v in self.grid))
        if not grid:
            raise DomainError("tuning grid is empty")
        if any(not 0 < v <= 1 for v in grid):
            raise DomainError("tuning grid values must lie in (0, 1]")
        if self.folds < 2:
            raise DomainError("folds must be at least 2")
        if not self.loss_param > 0:
            raise DomainError("loss_param must be positive")
        object.__setattr__(self, "grid", grid)


@dataclass
class CvResult:
    best: float
    curve: pd.DataFrame
    fold_assignment: np.ndarray
    estimator: str
    loss_param: float

    def to_dict(self) -> dict:
        return {
            'best': self.best,
            'estimator': self.estimator,
            'loss_param': self.loss_param,
            'curve': self.curve.to_dict(orient='list'),
            'fold_assignment': self.fold_assignment.tolist(),
        }


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """
    Random equal-size split; fold sizes differ by at most one

    Returns:
        Array tau with tau[j] in 0..folds-1
    """
    order = make_rng(seed).permutation(n)
    tau = np.empty(n, dtype=int)
    tau[order] = np.arange(n) % folds
    return tau


def _check_folds(n: int, tau: np.ndarray, folds: int):
    if n < folds:
        raise PreconditionError(f"{n} observations cannot fill {folds} folds")
    if tau.shape != (n,) or tau.min() < 0 or tau.max() >= folds:
        raise PreconditionError("fold assignment does not match the data")
    largest = np.bincount(tau, minlength=folds).max()
    if n - largest < 2:
        raise PreconditionError("every fold must leave at least two training points")


def cross_validate(data, estimator_kind: str, spec: Optional[CvSpec] = None,
                   assignment: Optional[np.ndarray] = None) -> CvResult:
    """
    K-fold cross-validation of the tuning parameter

    For each candidate the estimator is refitted without each fold and every
    held-out point is scored with the point-mass divergence loss; the score is
    the mean over all N points. A failed fold fit marks the candidate invalid.

    Args:
        data: (n, p) unit vectors
        estimator_kind: type1 or type0
        spec: Grid, folds, loss parameter and seed
        assignment: Stored fold assignment to reuse instead of drawing one

    Returns:
        CvResult with the argmin (ties to the smaller candidate)
    """
    if estimator_kind not in LOSS_KIND:
        raise DomainError(f"estimator must be type1 or type0, got {estimator_kind}")
    spec = spec or CvSpec()
    x = np.asarray(data, dtype=float)
    n = x.shape[0]
    if n < spec.folds:
        raise PreconditionError(f"{n} observations cannot fill {spec.folds} folds")
    tau = fold_assignment(n, spec.folds, spec.seed) if assignment is None else np.asarray(assignment)
    _check_folds(n, tau, spec.folds)
    loss_kind = LOSS_KIND[estimator_kind]

    rows: List[dict] = []
    for candidate in spec.grid:
        losses = np.empty(n)
        failed = 0
        for fold in range(spec.folds):
            held_out = tau == fold
            try:
                result = fit(estimator_kind, x[~held_out], candidate, spec.config)
                if not result.converged:
                    raise NonConvergenceError(result.status)
                losses[held_out] = pointwise_cv_loss(loss_kind, spec.loss_param, result.xi_hat, x[held_out])
            except VmfError as e:
                logger.info("candidate %.4g fold %d failed: %s", candidate, fold, e)
                failed += 1
        score = float(np.mean(losses)) if failed == 0 else float("nan")
        rows.append({'candidate': candidate, 'score': score, 'failed_folds': failed})

    curve = pd.DataFrame(rows, columns=CURVE_COLUMNS)
    if curve['score'].isna().all():
        raise NonConvergenceError("no tuning candidate could be fitted on every fold")
    best = float(curve['candidate'].iloc[int(np.nanargmin(curve['score'].to_numpy()))])
    logger.info("%s cross-validation selected %.4g", estimator_kind, best)
    return CvResult(best, curve, tau, estimator_kind, spec.loss_param)
