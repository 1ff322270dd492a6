"""
Cross-cultural indices of the roles and treatment of the elderly, built
from coded ethnographic traits, and their pairwise correlations.
"""

import csv
import io
import json
import logging
import math
import os
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import chardet
import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from ..errors import ConfigError, FileAccessError, ModelDomainError, TraitTableError, UndefinedCorrelationError
from ..model import CorrelationResult, IndexSpec, MissingPolicy, TraitTable

logger = logging.getLogger(__name__)

VALID_CODES = {'0': 0, '1': 1, '2': 2, '3': 3}
DEFAULT_SPECS_FILE = os.path.join(os.path.dirname(os.path.dirname(__file__)), 'data', 'index_specs.json')


# ====================== LOADING ======================

def _decode(data: bytes) -> str:
    """UTF-8 first, then whatever chardet detects"""
    try:
        return data.decode('utf-8-sig')
    except UnicodeDecodeError:
        pass
    guess = chardet.detect(data)
    encoding = guess.get('encoding') or 'latin-1'
    logger.warning(f"Trait table is not UTF-8; decoding as {encoding} "
                   f"(confidence {guess.get('confidence', 0):.2f})")
    try:
        return data.decode(encoding)
    except (UnicodeDecodeError, LookupError) as exc:
        raise TraitTableError(f"Cannot decode trait table as {encoding}") from exc


def _read_source(source) -> str:
    if hasattr(source, 'read'):
        data = source.read()
        return _decode(data) if isinstance(data, bytes) else data
    if isinstance(source, bytes):
        return _decode(source)
    try:
        with open(source, 'rb') as f:
            return _decode(f.read())
    except OSError as exc:
        raise FileAccessError(f"Cannot read trait table {source}: {exc}") from exc


def _check_field_counts(text: str):
    """Every non-blank row must have as many fields as the header"""
    reader = csv.reader(io.StringIO(text))
    width = None
    for fields in reader:
        if not fields:
            continue
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            kind = 'fewer' if len(fields) < width else 'more'
            raise TraitTableError(f"Row has {kind} fields than the header ({len(fields)} vs {width})",
                                  row=reader.line_num)


def load_trait_table(source: Union[str, os.PathLike, bytes, io.IOBase]) -> TraitTable:
    """
    Parse a comma-separated trait table.

    Args:
        source: Path, raw bytes or an open text/binary stream. The header row
            names the traits; the first column holds society ids.

    Returns:
        TraitTable with nullable integer codes
    """
    text = _read_source(source)
    _check_field_counts(text)
    try:
        raw = pd.read_csv(io.StringIO(text), header=None, dtype=str, keep_default_na=False,
                          skip_blank_lines=True)
    except pd.errors.EmptyDataError as exc:
        raise TraitTableError("Trait table is empty") from exc
    except pd.errors.ParserError as exc:
        raise TraitTableError(f"Non-rectangular rows: {exc}") from exc

    if raw.shape[0] < 2 or raw.shape[1] < 2:
        raise TraitTableError("Trait table needs a header, at least one society and one trait")

    header = [str(name).strip() for name in raw.iloc[0, 1:]]
    for position, name in enumerate(header):
        if not name:
            raise TraitTableError("Empty trait name", row=1, column=f"#{position + 2}")
    duplicated_traits = pd.Index(header)[pd.Index(header).duplicated()]
    if len(duplicated_traits):
        raise TraitTableError("Duplicate trait name", row=1, column=duplicated_traits[0])

    societies = raw.iloc[1:, 0].str.strip()
    duplicated = societies[societies.duplicated()]
    if len(duplicated):
        raise TraitTableError(f"Duplicate society id {duplicated.iloc[0]!r}", row=int(duplicated.index[0]) + 1)
    if (societies == '').any():
        raise TraitTableError("Empty society id", row=int(societies[societies == ''].index[0]) + 1)

    cells = raw.iloc[1:, 1:].apply(lambda column: column.str.strip())
    invalid = ~(cells.isin(list(VALID_CODES)) | (cells == ''))
    if invalid.to_numpy().any():
        i, j = np.argwhere(invalid.to_numpy())[0]
        raise TraitTableError(f"Invalid code {cells.iat[i, j]!r}; expected 0-3 or empty",
                              row=int(i) + 2, column=header[j])

    frame = cells.apply(lambda column: column.map(VALID_CODES)).astype('Int64')
    frame.index = pd.Index(societies.to_numpy(), name='society')
    frame.columns = header
    logger.info(f"Loaded trait table: {frame.shape[0]} societies, {frame.shape[1]} traits, "
                f"{int(frame.isna().sum().sum())} missing cells")
    return TraitTable(frame=frame)


def load_index_specs(specs_file: Optional[str] = None) -> Dict[str, IndexSpec]:
    """Index definitions keyed by name, in file order"""
    data = _load_specs_document(specs_file)
    specs = {}
    for entry in data.get('indices', []):
        try:
            spec = IndexSpec(
                name=entry['name'],
                positive_traits=tuple(entry.get('positive_traits', ())),
                negative_traits=tuple(entry.get('negative_traits', ())),
                missing_policy=MissingPolicy(entry.get('missing_policy', MissingPolicy.AS_ZERO.value)),
                component_indices=tuple(entry.get('component_indices', ())),
                description=entry.get('description', ''),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"Invalid index definition {entry!r}: {exc}") from exc
        if spec.name in specs:
            raise ConfigError(f"Index {spec.name!r} defined twice")
        specs[spec.name] = spec
    if not specs:
        raise ConfigError("Index spec file defines no indices")
    return specs


def _load_specs_document(specs_file: Optional[str]) -> dict:
    specs_file = specs_file or DEFAULT_SPECS_FILE
    try:
        with open(specs_file, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except OSError as exc:
        raise FileAccessError(f"Cannot read index spec file {specs_file}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Index spec file {specs_file} is not valid JSON: {exc}") from exc
    if isinstance(data, list):
        data = {'indices': data}
    return data


# ====================== INDICES ======================

def _sum_codes(frame: pd.DataFrame, columns: Sequence[str]) -> pd.Series:
    if not columns:
        return pd.Series(0, index=frame.index, dtype='int64')
    return frame[list(columns)].fillna(0).sum(axis=1).astype('int64')


def build_index(table: TraitTable, spec: IndexSpec,
                computed: Optional[Mapping[str, pd.Series]] = None) -> pd.Series:
    """Sum of positive codes minus sum of negative codes, missing as zero"""
    frame = table.frame
    for column in (*spec.positive_traits, *spec.negative_traits):
        if column not in frame.columns:
            raise TraitTableError(f"Index {spec.name!r} references an unknown trait", column=column)

    score = _sum_codes(frame, spec.positive_traits) - _sum_codes(frame, spec.negative_traits)
    for component in spec.component_indices:
        if computed is None or component not in computed:
            raise ModelDomainError(f"Index {spec.name!r} needs component index {component!r} first")
        score = score + computed[component]
    return score.rename(spec.name)


def build_indices(table: TraitTable, specs: Mapping[str, IndexSpec]) -> pd.DataFrame:
    """All indices, composite ones after their components"""
    computed: Dict[str, pd.Series] = {}
    pending = list(specs.values())
    while pending:
        ready = [spec for spec in pending if all(c in computed for c in spec.component_indices)]
        if not ready:
            names = ', '.join(spec.name for spec in pending)
            raise ConfigError(f"Unresolvable component indices among: {names}")
        for spec in ready:
            computed[spec.name] = build_index(table, spec, computed)
            pending.remove(spec)
    return pd.DataFrame({name: computed[name] for name in specs})


def summarize_indices(scores: pd.DataFrame) -> pd.DataFrame:
    """Mean, SD, Min, Max and N of every index"""
    summary = scores.agg(['mean', 'std', 'min', 'max', 'count']).T
    summary.columns = ['mean', 'sd', 'min', 'max', 'n']
    summary.index.name = 'index'
    return summary


# ====================== CORRELATIONS ======================

def correlate(x: Iterable[float], y: Iterable[float], pair: Tuple[str, str] = ('x', 'y')) -> CorrelationResult:
    """
    Pearson correlation with a two-tailed Student t test of r = 0.

    The statistic is written symmetrically so that swapping x and y gives
    the identical r.
    """
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if x.shape != y.shape:
        raise ModelDomainError(f"Series lengths differ: {x.size} and {y.size}")
    n = int(x.size)
    if n < 2:
        raise ModelDomainError("Correlation needs at least 2 societies")
    if np.isnan(x).any() or np.isnan(y).any():
        raise ModelDomainError("Scores contain missing values")

    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(np.sum(dx * dx)), float(np.sum(dy * dy))
    if sxx == 0 or syy == 0:
        constant = pair[0] if sxx == 0 else pair[1]
        raise UndefinedCorrelationError(f"Correlation undefined: {constant!r} has zero variance")
    r = float(np.clip(np.sum(dx * dy) / math.sqrt(sxx * syy), -1.0, 1.0))

    if n < 3:
        return CorrelationResult(pair=pair, r=r, n=n, significant_95=False)

    df = n - 2
    if abs(r) == 1.0:
        t_statistic, p_value = math.copysign(math.inf, r), 0.0
    else:
        t_statistic = r * math.sqrt(df / (1 - r * r))
        p_value = float(2 * stats.t.sf(abs(t_statistic), df))
    return CorrelationResult(pair=pair, r=r, n=n, significant_95=p_value < 0.05,
                             t_statistic=t_statistic, p_value=p_value, df=df)


def correlation_matrix(scores: pd.DataFrame, rows: Sequence[str], columns: Sequence[str],
                       n_jobs: int = 1) -> List[CorrelationResult]:
    """Correlations of each row index with each column index, self pairs skipped"""
    for name in (*rows, *columns):
        if name not in scores.columns:
            raise ModelDomainError(f"Unknown index {name!r}")
    pairs, seen = [], set()
    for row in rows:
        for column in columns:
            key = frozenset((row, column))
            if row == column or key in seen:
                continue
            seen.add(key)
            pairs.append((row, column))
    return Parallel(n_jobs=n_jobs)(
        delayed(correlate)(scores[a].to_numpy(), scores[b].to_numpy(), (a, b)) for a, b in pairs)


def correlation_rows(results: Iterable[CorrelationResult]) -> List[dict]:
    return [{
        'index_a': result.pair[0],
        'index_b': result.pair[1],
        'r': result.r,
        'n': result.n,
        't': result.t_statistic,
        'df': result.df,
        'p_value': result.p_value,
        'significant': result.significant_95,
        'marker': result.marker,
        'test': result.test,
    } for result in results]


class IndexCatalog:
    """Index definitions plus the default correlation layout"""

    def __init__(self, specs_file: Optional[str] = None):
        self.specs_file = specs_file or DEFAULT_SPECS_FILE
        logger.info(f"Loading index specs from: {self.specs_file}")
        self.specs = load_index_specs(self.specs_file)
        layout = _load_specs_document(self.specs_file).get('correlations', {})
        names = list(self.specs)
        self.rows = list(layout.get('rows', names))
        self.columns = list(layout.get('columns', names))
        logger.info(f"Loaded {len(self.specs)} index definitions")

    def build(self, table: TraitTable) -> pd.DataFrame:
        return build_indices(table, self.specs)

    def correlations(self, scores: pd.DataFrame, rows: Optional[Sequence[str]] = None,
                     columns: Optional[Sequence[str]] = None, n_jobs: int = 1) -> List[CorrelationResult]:
        return correlation_matrix(scores, rows or self.rows, columns or self.columns, n_jobs=n_jobs)
