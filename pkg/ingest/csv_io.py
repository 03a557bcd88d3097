import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from core.exceptions import ParseError, SchemaError
from core.jsonio import read_json, write_json
from core.types import Dataset, DatasetMeta, Strategy

logger = logging.getLogger(__name__)

FEATURE_PATTERN = re.compile(r"^f(\d+)$")
FLOAT_FORMAT = "%.12g"


@dataclass(frozen=True)
class ColumnSchema:
    """Maps dataset fields to CSV column names.

    `features=None` selects every `f<k>` column, ordered by k.
    """

    t: str = "t"
    y_r: str = "y_r"
    y_c: str = "y_c"
    id: str = "id"
    strategy: str = "strategy"
    features: tuple = None


NATIVE_SCHEMA = ColumnSchema()


def _feature_columns(header, schema):
    if schema.features is not None:
        return list(schema.features)
    indexed = [(int(m.group(1)), col) for col in header for m in [FEATURE_PATTERN.match(col)] if m]
    return [col for _, col in sorted(indexed)]


def _numeric(frame, column):
    raw = frame[column]
    values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        # header occupies line 1
        raise ParseError(f"column '{column}' has non-numeric value {raw.iloc[i]!r}", row=i + 2)
    return values


def load_csv(path, schema=None, name=None):
    """Read a dataset from a UTF-8 CSV file with a header row.

    Rows keep file order; features keep the schema's declared order.
    """
    schema = schema or NATIVE_SCHEMA
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8")
    except pd.errors.ParserError as exc:
        raise ParseError(f"{path.name}: {exc}")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path.name}: file has no header row")

    header = list(frame.columns)
    features = _feature_columns(header, schema)
    required = [schema.t, schema.y_r, schema.y_c] + features
    missing = [col for col in required if col not in header]
    if missing:
        raise SchemaError(f"{path.name}: missing columns {missing}")
    if not features:
        raise SchemaError(f"{path.name}: no feature columns found")

    # short rows come back as NaN
    frame = frame.fillna("")
    t = _numeric(frame, schema.t)
    bad_t = ~np.isin(t, (0.0, 1.0))
    if bad_t.any():
        i = int(np.flatnonzero(bad_t)[0])
        raise ParseError(f"treatment must be 0 or 1, got {frame[schema.t].iloc[i]!r}", row=i + 2)

    y_r = _numeric(frame, schema.y_r)
    y_c = _numeric(frame, schema.y_c)
    X = np.column_stack([_numeric(frame, col) for col in features])

    if schema.id and schema.id in header:
        ids = frame[schema.id].to_numpy(dtype=object)
    else:
        ids = np.array([f"u{i}" for i in range(len(frame))], dtype=object)

    if schema.strategy and schema.strategy in header:
        strategy = frame[schema.strategy].replace("", Strategy.EXPLORE).to_numpy(dtype=object)
        unknown = ~np.isin(strategy, Strategy.VALUES)
        if unknown.any():
            i = int(np.flatnonzero(unknown)[0])
            raise ParseError(f"unknown strategy {strategy[i]!r}", row=i + 2)
    else:
        strategy = None

    ds = Dataset(
        ids=ids,
        X=X,
        t=t.astype(int),
        y_r=y_r,
        y_c=y_c,
        strategy=strategy,
        meta=DatasetMeta(name=name or path.stem, provenance=str(path)),
    )
    logger.info(f"Loaded {ds.n} rows with {ds.d} features from {path}")
    return ds


def to_frame(ds, extra=None):
    """Native-format DataFrame: id, strategy, t, y_r, y_c, f0..f{d-1}, then `extra` columns."""
    frame = pd.DataFrame(
        {
            'id': ds.ids,
            'strategy': ds.strategy,
            't': ds.t.astype(int),
            'y_r': ds.y_r,
            'y_c': ds.y_c,
        }
    )
    features = pd.DataFrame(ds.X, columns=[f"f{k}" for k in range(ds.d)])
    frame = pd.concat([frame, features], axis=1)
    for column, values in (extra or {}).items():
        frame[column] = values
    return frame


def write_csv(ds, path, extra=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_frame(ds, extra).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def sidecar_path(csv_path):
    return Path(csv_path).with_suffix(".json")


def write_sidecar(csv_path, provenance):
    """Write the JSON provenance record (source, recipe, seed, split) next to a CSV."""
    return write_json(sidecar_path(csv_path), provenance)


def read_sidecar(csv_path):
    path = sidecar_path(csv_path)
    if not path.exists():
        return {}
    return read_json(path)
