"""
Tabular output: CSV with 12 significant digits or JSON records.
"""

import io
import json
import logging
import math
from typing import Iterable, Optional, Union

import numpy as np
import pandas as pd

from ..errors import FileAccessError

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json')


def to_frame(table: Union[pd.DataFrame, Iterable[dict]]) -> pd.DataFrame:
    if isinstance(table, pd.DataFrame):
        return table
    return pd.DataFrame(list(table))


def _jsonable(value, digits: int):
    if isinstance(value, np.generic):
        value = value.item()
    if value is None or value is pd.NA:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return float(f'{value:.{digits}g}')
    return value


def render_table(table: Union[pd.DataFrame, Iterable[dict]], fmt: str = 'csv', digits: int = 12) -> str:
    """Serialise a table deterministically"""
    if fmt not in FORMATS:
        raise ValueError(f"Unknown output format {fmt!r}; expected one of {FORMATS}")
    frame = to_frame(table)
    if fmt == 'csv':
        return frame.to_csv(index=False, float_format=f'%.{digits}g', lineterminator='\n')
    records = [{key: _jsonable(value, digits) for key, value in record.items()}
               for record in frame.to_dict(orient='records')]
    return json.dumps(records, indent=2, allow_nan=False) + '\n'


def write_table(table: Union[pd.DataFrame, Iterable[dict]], path: Optional[str] = None, fmt: str = 'csv',
                digits: int = 12) -> str:
    """
    Render a table and write it to path when one is given.

    Returns:
        The rendered text
    """
    text = render_table(table, fmt, digits)
    if path:
        try:
            with open(path, 'w', encoding='utf-8', newline='') as f:
                f.write(text)
        except OSError as exc:
            raise FileAccessError(f"Cannot write output file {path}: {exc}") from exc
        logger.info(f"Wrote {fmt} table to {path}")
    return text


def read_table(source, fmt: str = 'csv') -> pd.DataFrame:
    """Parse a table written by write_table"""
    try:
        if fmt == 'json':
            if hasattr(source, 'read'):
                return pd.DataFrame(json.load(source))
            with open(source, 'r', encoding='utf-8') as f:
                return pd.DataFrame(json.load(f))
        if isinstance(source, str) and '\n' in source:
            source = io.StringIO(source)
        return pd.read_csv(source)
    except OSError as exc:
        raise FileAccessError(f"Cannot read table {source}: {exc}") from exc
