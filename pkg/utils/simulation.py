"""
Monte-Carlo relative-MSE studies of the vMF estimators
Spec files, replicate fan-out over a worker pool, and table sweeps
"""

import logging
import os
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from utils.errors import ConfigError, DomainError, VmfError
from utils.estimators import ESTIMATORS, EstimatorConfig, fit, fit_mle
from utils.vmf_model import MixtureModel, make_rng, sample

logger = logging.getLogger(__name__)

CONTAMINATIONS = ("none", "uniform", "vmf")
REPORT_COLUMNS = [
    'cell', 'p', 'n', 'contamination', 'epsilon', 'estimator', 'tuning',
    'mse', 'relative_mse', 'mse_retained', 'relative_mse_retained',
    'failures', 'replicates',
]
SPEC_KEYS = (
    'P', 'TRUE_XI', 'N', 'REPLICATES', 'CONTAMINATION', 'EPSILON', 'ZETA', 'ESTIMATORS',
    'SEED', 'TOL', 'MAX_ITER', 'TUNING_GRID', 'EPSILON_GRID', 'N_GRID',
)
_FIELD_KEYS = (
    ("true_xi", "TRUE_XI"), ("replicates", "REPLICATES"), ("n must", "N"), ("epsilon", "EPSILON"),
    ("contamination", "CONTAMINATION"), ("vmf contamination", "ZETA"), ("invalid estimator", "ESTIMATORS"),
)


@dataclass(frozen=True)
class SimulationSpec:
    """
    One Monte-Carlo cell: the data law, the sample size and the estimators

    estimators lists (kind, tuning) pairs; the MLE is always fitted as the
    denominator of the relative MSE.
    """

    true_xi: Tuple[float, ...]
    n: int = 100
    replicates: int = 2000
    contamination: str = "none"
    epsilon: float = 0.0
    zeta: Optional[Tuple[float, ...]] = None
    estimators: Tuple[Tuple[str, float], ...] = ()
    seed: int = 0
    tol: float = 1.0e-10
    max_iter: int = 500

    def __post_init__(self):
        object.__setattr__(self, "true_xi", tuple(float(v) for v in self.true_xi))
        if self.zeta is not None:
            object.__setattr__(self, "zeta", tuple(float(v) for v in self.zeta))
        object.__setattr__(self, "estimators",
                           tuple((str(kind), float(t)) for kind, t in self.estimators))
        if len(self.true_xi) < 2:
            raise DomainError("true_xi needs at least two coordinates")
        if self.replicates < 1:
            raise DomainError("replicates must be at least 1")
        if self.n < 1:
            raise DomainError("n must be at least 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError("epsilon must lie in [0, 1]")
        if self.contamination not in CONTAMINATIONS:
            raise DomainError(f"contamination must be one of {CONTAMINATIONS}")
        if self.contamination == "vmf":
            if self.zeta is None or len(self.zeta) != len(self.true_xi):
                raise DomainError("vmf contamination needs zeta with the dimension of true_xi")
        for kind, tuning in self.estimators:
            if kind not in ESTIMATORS or tuning < 0:
                raise DomainError(f"invalid estimator entry {kind}:{tuning}")

    @property
    def p(self) -> int:
        return len(self.true_xi)

    def mixture(self) -> MixtureModel:
        xi = np.array(self.true_xi)
        if self.contamination == "none":
            return MixtureModel(xi)
        if self.contamination == "uniform":
            return MixtureModel(xi, self.epsilon)
        return MixtureModel(xi, self.epsilon, np.array(self.zeta))

    def config(self) -> EstimatorConfig:
        return EstimatorConfig(max_iter=self.max_iter, tol=self.tol)


@dataclass
class SimulationReport:
    spec: SimulationSpec
    table: pd.DataFrame
    cell: int = 0

    def row(self, estimator: str, tuning: float = 0.0) -> pd.Series:
        match = self.table[(self.table['estimator'] == estimator) & (self.table['tuning'] == tuning)]
        if match.empty:
            raise KeyError(f"{estimator}:{tuning} not in report")
        return match.iloc[0]


def _parse_vector(value: str, key: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split(',') if v.strip())
    except ValueError:
        raise ConfigError(f"expected a comma separated list of numbers, got {value!r}", key=key)


def _parse_scalar(raw: Dict, key: str, cast, default=None):
    value = raw.get(key)
    if value is None or value.strip() == "":
        if default is None:
            raise ConfigError("missing required value", key=key)
        return default
    try:
        return cast(value)
    except ValueError:
        raise ConfigError(f"cannot parse {value!r} as {cast.__name__}", key=key)


def _parse_estimators(value: Optional[str]) -> Tuple[Tuple[str, float], ...]:
    if not value:
        return ()
    entries = []
    for item in value.split(','):
        kind, _, tuning = item.strip().partition(':')
        if kind not in ("type1", "type0") or not tuning:
            raise ConfigError(f"expected kind:value with kind type1 or type0, got {item!r}", key='ESTIMATORS')
        try:
            entries.append((kind, float(tuning)))
        except ValueError:
            raise ConfigError(f"cannot parse tuning in {item!r}", key='ESTIMATORS')
    return tuple(entries)


def parse_simulation_spec(raw: Dict[str, Optional[str]]) -> Tuple[SimulationSpec, Dict]:
    """
    Build a SimulationSpec and sweep grids from KEY=VALUE pairs

    Returns:
        (spec, sweep) where sweep holds tuning_grid, epsilon_grid and n_grid (or None)

    Raises:
        ConfigError: naming the offending key
    """
    unknown = sorted(set(raw) - set(SPEC_KEYS))
    if unknown:
        raise ConfigError("unknown key", key=unknown[0])

    if not raw.get('TRUE_XI'):
        raise ConfigError("missing required value", key='TRUE_XI')
    true_xi = _parse_vector(raw['TRUE_XI'], 'TRUE_XI')
    if 'P' in raw and _parse_scalar(raw, 'P', int) != len(true_xi):
        raise ConfigError(f"P does not match the length of TRUE_XI ({len(true_xi)})", key='P')

    contamination = (raw.get('CONTAMINATION') or 'none').strip()
    if contamination not in CONTAMINATIONS:
        raise ConfigError(f"must be one of {', '.join(CONTAMINATIONS)}", key='CONTAMINATION')
    zeta = _parse_vector(raw['ZETA'], 'ZETA') if raw.get('ZETA') else None

    sweep = {
        'tuning_grid': _parse_vector(raw['TUNING_GRID'], 'TUNING_GRID') if raw.get('TUNING_GRID') else None,
        'epsilon_grid': _parse_vector(raw['EPSILON_GRID'], 'EPSILON_GRID') if raw.get('EPSILON_GRID') else None,
        'n_grid': None,
    }
    if raw.get('N_GRID'):
        sweep['n_grid'] = tuple(int(v) for v in _parse_vector(raw['N_GRID'], 'N_GRID'))

    fields = {
        'true_xi': true_xi,
        'n': _parse_scalar(raw, 'N', int, 100),
        'replicates': _parse_scalar(raw, 'REPLICATES', int, 2000),
        'contamination': contamination,
        'epsilon': _parse_scalar(raw, 'EPSILON', float, 0.0),
        'zeta': zeta,
        'estimators': _parse_estimators(raw.get('ESTIMATORS')),
        'seed': _parse_scalar(raw, 'SEED', int, 0),
        'tol': _parse_scalar(raw, 'TOL', float, 1.0e-10),
        'max_iter': _parse_scalar(raw, 'MAX_ITER', int, 500),
    }
    try:
        spec = SimulationSpec(**fields)
    except DomainError as e:
        message = str(e)
        key = next((k for word, k in _FIELD_KEYS if message.startswith(word)), None)
        raise ConfigError(message, key=key)
    return spec, sweep


def load_simulation_spec(path: str) -> Tuple[SimulationSpec, Dict]:
    """Read a KEY=VALUE spec file (same syntax as .env files)"""
    if not os.path.isfile(path):
        raise ConfigError(f"spec file not found: {path}")
    raw = dotenv_values(path)
    return parse_simulation_spec(dict(raw))


def _run_replicate(task) -> Dict:
    """Fit every estimator on one dataset; a failed fit yields nan"""
    spec, cell, replicate = task
    truth = np.array(spec.true_xi)
    data = sample(spec.mixture(), spec.n, make_rng(spec.seed, cell, replicate))
    config = spec.config()

    outcome = {}
    try:
        mle = fit_mle(data)
        outcome[('mle', 0.0)] = (float(np.sum((mle.xi_hat - truth) ** 2)), True)
    except VmfError as e:
        logger.debug("replicate %d: mle failed: %s", replicate, e)
        outcome[('mle', 0.0)] = (float("nan"), False)

    for kind, tuning in spec.estimators:
        try:
            result = fit(kind, data, tuning, config)
            outcome[(kind, tuning)] = (float(np.sum((result.xi_hat - truth) ** 2)), result.converged)
        except VmfError as e:
            logger.debug("replicate %d: %s(%g) failed: %s", replicate, kind, tuning, e)
            outcome[(kind, tuning)] = (float("nan"), False)
    return outcome


def _aggregate(spec: SimulationSpec, cell: int, outcomes: List[Dict]) -> pd.DataFrame:
    keys = [('mle', 0.0)] + [k for k in spec.estimators if k != ('mle', 0.0)]
    errors = {k: np.array([o[k][0] for o in outcomes]) for k in keys}
    converged = {k: np.array([o[k][1] for o in outcomes]) for k in keys}
    mle_errors = errors[('mle', 0.0)]
    mle_ok = converged[('mle', 0.0)]
    mle_retained = float(np.mean(mle_errors[mle_ok])) if mle_ok.any() else float("nan")

    rows = []
    for kind, tuning in keys:
        ok = converged[(kind, tuning)] & mle_ok
        finite = np.isfinite(errors[(kind, tuning)]) & mle_ok
        mse = float(np.mean(errors[(kind, tuning)][ok])) if ok.any() else float("nan")
        mle_same = float(np.mean(mle_errors[ok])) if ok.any() else float("nan")
        retained = float(np.mean(errors[(kind, tuning)][finite])) if finite.any() else float("nan")
        failures = int(spec.replicates - converged[(kind, tuning)].sum())
        if failures:
            logger.warning("cell %d: %s(%g) failed on %d of %d replicates",
                           cell, kind, tuning, failures, spec.replicates)
        rows.append({
            'cell': cell,
            'p': spec.p,
            'n': spec.n,
            'contamination': spec.contamination,
            'epsilon': spec.epsilon if spec.contamination != "none" else 0.0,
            'estimator': kind,
            'tuning': tuning,
            'mse': mse,
            'relative_mse': mse / mle_same,
            'mse_retained': retained,
            'relative_mse_retained': retained / mle_retained,
            'failures': failures,
            'replicates': spec.replicates,
        })
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def run_simulation(spec: SimulationSpec, workers: int = 1, cell: int = 0) -> SimulationReport:
    """
    Monte-Carlo estimate of each estimator's MSE relative to the MLE

    Replicate r of cell c draws its data from the stream (seed, c, r), so the
    report is identical for any number of workers. Non-converged fits are
    excluded from mse/relative_mse (the MLE is restricted to the same
    replicates) and kept in the *_retained columns.

    Args:
        spec: Cell definition
        workers: Size of the process pool
        cell: Cell index used in the replicate streams

    Returns:
        SimulationReport with one row per estimator (MLE first)
    """
    tasks = [(spec, cell, r) for r in range(spec.replicates)]
    logger.info("cell %d: %d replicates of n=%d on %d worker(s)", cell, spec.replicates, spec.n, workers)
    if workers > 1:
        with Pool(processes=workers) as pool:
            outcomes = pool.map(_run_replicate, tasks, chunksize=max(1, len(tasks) // (4 * workers)))
    else:
        outcomes = [_run_replicate(task) for task in tasks]
    return SimulationReport(spec, _aggregate(spec, cell, outcomes), cell)


def table_sweep(base: SimulationSpec, tuning_grid: Optional[Sequence[float]] = None,
                epsilon_grid: Optional[Sequence[float]] = None,
                n_grid: Optional[Sequence[int]] = None, workers: int = 1) -> pd.DataFrame:
    """
    Sweep the tuning grid against a column variable (epsilon or n)

    Cell i uses the streams (seed, i, replicate). Without a column grid the
    sweep is a single cell equal to run_simulation(base with the grid).

    Returns:
        Long table with REPORT_COLUMNS, one row per (cell, estimator)
    """
    if epsilon_grid is not None and n_grid is not None:
        raise DomainError("sweep either epsilon or n, not both")
    kinds = sorted({kind for kind, _ in base.estimators}, reverse=True) or ["type1", "type0"]
    if tuning_grid is not None:
        if len(tuning_grid) == 0:
            raise DomainError("tuning grid is empty")
        estimators = tuple((kind, float(t)) for kind in kinds for t in tuning_grid)
        base = replace(base, estimators=estimators)

    if epsilon_grid is not None:
        if len(epsilon_grid) == 0:
            raise DomainError("epsilon grid is empty")
        cells = [replace(base, epsilon=float(eps)) for eps in epsilon_grid]
    elif n_grid is not None:
        if len(n_grid) == 0:
            raise DomainError("n grid is empty")
        cells = [replace(base, n=int(n)) for n in n_grid]
    else:
        cells = [base]

    tables = [run_simulation(spec, workers=workers, cell=i).table for i, spec in enumerate(cells)]
    return pd.concat(tables, ignore_index=True)


def layout_table(table: pd.DataFrame, column: str = "epsilon", value: str = "relative_mse") -> pd.DataFrame:
    """Wide layout: rows (estimator, tuning), one column per epsilon or n"""
    return table.pivot_table(index=['estimator', 'tuning'], columns=column, values=value, sort=False)
