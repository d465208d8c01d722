"""
Dataset ingestion and validation
Reads angles-csv (p=2, radians) and vectors-csv (p columns) files
"""

import logging
import os
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from utils.config import get_settings
from utils.errors import ConfigError, ParseError

logger = logging.getLogger(__name__)

FORMATS = ("angles", "vectors")
NORM_TOL = 1.0e-6


@dataclass
class Dataset:
    points: np.ndarray
    source_format: str
    path: Optional[str] = None
    renormalised: int = 0

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]

    @property
    def angles(self) -> np.ndarray:
        if self.p != 2:
            raise ParseError("angles are only defined for circular data")
        return vectors_to_angles(self.points)


def angles_to_vectors(angles) -> np.ndarray:
    theta = np.asarray(angles, dtype=float).ravel()
    return np.column_stack([np.cos(theta), np.sin(theta)])


def vectors_to_angles(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return np.arctan2(points[:, 1], points[:, 0])


def validate_points(points: np.ndarray) -> List[str]:
    """
    Validate rows before they are used as observations

    Args:
        points: Array (n, p)

    Returns:
        List of validation error messages (empty if valid)
    """
    errors = []

    if points.ndim != 2:
        errors.append("Data must be a table of rows")
        return errors

    if points.shape[0] == 0:
        errors.append("At least one observation is required")

    if points.shape[1] < 2:
        errors.append("Vectors need at least two coordinates")

    for idx, row in enumerate(points):
        if not np.all(np.isfinite(row)):
            errors.append(f"Row {idx + 1}: non-numeric or non-finite value")
        elif np.linalg.norm(row) == 0:
            errors.append(f"Row {idx + 1}: zero vector has no direction")

    return errors


def _read_numeric_table(path: str) -> pd.DataFrame:
    try:
        if path.lower().endswith('.xlsx'):
            frame = pd.read_excel(path, header=None, engine='openpyxl')
        else:
            frame = pd.read_csv(path, header=None, comment='#', skip_blank_lines=True)
    except FileNotFoundError:
        raise ParseError(f"input file not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"cannot parse {path}: {e}")

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    if len(numeric) and numeric.iloc[0].isna().all():
        numeric = numeric.iloc[1:].reset_index(drop=True)
    return numeric


def renormalise(points: np.ndarray, tol: float = NORM_TOL):
    """
    Scale rows to unit norm, warning about rows off by more than tol

    Returns:
        (unit rows, number of rows that deviated)
    """
    norms = np.linalg.norm(points, axis=1)
    off = np.abs(norms - 1.0) > tol
    if off.any():
        logger.warning("renormalised %d row(s) deviating from unit norm by more than %g", off.sum(), tol)
    return points / norms[:, None], int(off.sum())


def load_dataset(path: str, source_format: Optional[str] = None) -> Dataset:
    """
    Load observations from a CSV or .xlsx file (first sheet)

    A single column is read as angles in radians; otherwise each row is a
    vector. A header row is skipped when present.

    Args:
        path: CSV or .xlsx file
        source_format: angles or vectors; inferred from the column count when None

    Returns:
        Dataset of unit vectors
    """
    frame = _read_numeric_table(path)
    if source_format is None:
        source_format = "angles" if frame.shape[1] == 1 else "vectors"
    if source_format not in FORMATS:
        raise ParseError(f"format must be one of {FORMATS}, got {source_format}")

    values = frame.to_numpy(dtype=float)
    if source_format == "angles":
        if values.shape[1] != 1:
            raise ParseError("angles-csv must have exactly one column")
        if not np.all(np.isfinite(values)):
            bad = int(np.argmax(~np.isfinite(values[:, 0]))) + 1
            raise ParseError(f"Row {bad}: non-numeric angle")
        points = angles_to_vectors(values[:, 0])
    else:
        points = values

    errors = validate_points(points)
    if errors:
        raise ParseError("; ".join(errors[:5]))

    points, renormalised = renormalise(points)
    logger.info("loaded %d observations in R^%d from %s", points.shape[0], points.shape[1], path)
    return Dataset(points, source_format, path, renormalised)


def write_vectors_csv(points, path: Optional[str] = None) -> str:
    """
    Write points as vectors-csv with columns x1..xp

    Returns:
        CSV text (also written to path when given)
    """
    points = np.asarray(points, dtype=float)
    frame = pd.DataFrame(points, columns=[f"x{i + 1}" for i in range(points.shape[1])])
    text = frame.to_csv(index=False, float_format='%.17g')
    if path:
        with open(path, 'w', encoding='utf-8') as f:
            f.write(text)
    return text


def load_sea_stars(path: Optional[str] = None) -> Dataset:
    """
    Load the sea-star resultant directions (22 angles)

    The file is user supplied; its path defaults to VMF_SEA_STAR_PATH. Angles
    larger than 2 pi in magnitude are taken to be degrees and converted.
    """
    path = path or get_settings()['sea_star_path']
    if not path:
        raise ConfigError("sea-star data location is not configured", key='VMF_SEA_STAR_PATH')
    if not os.path.isfile(path):
        raise ConfigError(f"file not found: {path}", key='VMF_SEA_STAR_PATH')

    frame = _read_numeric_table(path)
    angles = frame.iloc[:, 0].to_numpy(dtype=float)
    if not np.all(np.isfinite(angles)):
        raise ParseError(f"non-numeric angle in {path}")
    if np.any(np.abs(angles) > 2 * np.pi):
        logger.warning("sea-star angles look like degrees; converting to radians")
        angles = np.deg2rad(angles)
    return Dataset(angles_to_vectors(angles), "angles", path)


def parse_vector_argument(text: str, name: str = "vector") -> np.ndarray:
    """Parse '2.37,0' (or space separated) into a float vector"""
    parts = [v for v in text.replace(',', ' ').split() if v]
    try:
        values = np.array([float(v) for v in parts])
    except ValueError:
        raise ParseError(f"{name}: expected numbers, got {text!r}")
    if values.size < 2:
        raise ParseError(f"{name}: expected at least two coordinates, got {text!r}")
    return values
