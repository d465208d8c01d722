"""
JSON reports for CLI commands
Structured results are saved to and restored from JSON without loss
"""

import json
import logging
import sys
from datetime import datetime
from typing import Dict, Optional

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

REPORT_VERSION = 1


def to_jsonable(value):
    """Convert numpy/pandas values into JSON types (tables become column dicts)"""
    if isinstance(value, pd.DataFrame):
        return {'columns': list(value.columns), 'data': to_jsonable(value.to_dict(orient='list'))}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def table_from_json(block: Dict) -> pd.DataFrame:
    """Inverse of to_jsonable for a DataFrame block"""
    return pd.DataFrame(block['data'], columns=block['columns'])


def estimates_block(xi) -> Dict:
    """
    Estimate summary: xi, kappa_hat = |xi| and, for circular data,
    mu_hat = atan2(xi_2, xi_1) in radians
    """
    xi = np.asarray(xi, dtype=float)
    block = {
        'xi_hat': xi.tolist(),
        'kappa_hat': float(np.linalg.norm(xi)),
    }
    if xi.size == 2:
        block['mu_hat'] = float(np.arctan2(xi[1], xi[0]))
    return block


def build_report(command: str, payload: Dict) -> Dict:
    """
    Wrap a command result in the report envelope

    Args:
        command: CLI command name
        payload: Command-specific content

    Returns:
        Report dictionary ready for JSON
    """
    return {
        'command': command,
        'version': REPORT_VERSION,
        'created': datetime.now().isoformat(timespec='seconds'),
        'units': 'radians',
        'result': to_jsonable(payload),
    }


def report_to_json(report: Dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False)


def save_report(report: Dict, path: Optional[str] = None) -> str:
    """
    Write a report to a file, or to stdout when path is None

    Returns:
        The JSON text
    """
    text = report_to_json(report)
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text + "\n")
        logger.info("report written to %s", path)
    else:
        sys.stdout.write(text + "\n")
    return text


def load_report(path: str) -> Dict:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)
