"""Public-dataset constructions that turn raw tables into uplift experiments.

Both recipes are deterministic functions of the raw table. Median thresholds
use strict comparisons, so ties land on the 0 side.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from core.exceptions import SchemaError
from core.types import Dataset, DatasetMeta

logger = logging.getLogger(__name__)

MANIFEST_DIR = Path(__file__).resolve().parent / "manifests"

SPRUCE_FIR = 1
LODGEPOLE_PINE = 2


def load_manifest(name_or_path):
    path = Path(name_or_path)
    if not path.suffix:
        path = MANIFEST_DIR / f"{name_or_path}.yaml"
    with open(path, encoding="utf-8") as handle:
        return yaml.safe_load(handle)


def _require(raw, columns, recipe):
    missing = [col for col in columns if col not in raw.columns]
    if missing:
        raise SchemaError(f"{recipe} recipe: raw table is missing columns {missing}")


def _check_expected(ds, manifest):
    if manifest.get('expected_n') and ds.n != manifest['expected_n']:
        logger.warning(
            f"{manifest['name']} recipe produced n={ds.n}, expected {manifest['expected_n']} "
            f"on the canonical file"
        )
    if manifest.get('expected_d') and ds.d != manifest['expected_d']:
        logger.warning(f"{manifest['name']} recipe produced d={ds.d}, expected {manifest['expected_d']}")


def read_raw_table(path, manifest=None):
    """Read a raw recipe file. Headerless files take the manifest's raw_columns."""
    path = Path(path)
    columns = (manifest or {}).get('raw_columns')
    if columns:
        first = pd.read_csv(path, nrows=1, header=None)
        has_header = str(first.iloc[0, 0]) == columns[0]
        return pd.read_csv(path, header=0 if has_header else None, names=columns)
    return pd.read_csv(path)


def build_census(raw, manifest=None):
    """US Census (1990): parents born in the U.S. and younger than 50.

    t = works more hours than the filtered median, y_r = dIncome1,
    y_c = -1.0 * number of children.
    """
    manifest = manifest or load_manifest("census")
    features = list(manifest['features'])
    _require(raw, ['iFertil', 'iCitizen', 'dAge', 'dHours', 'dIncome1'] + features, "census")

    keep = (raw['iFertil'] >= 1.5) & (raw['iCitizen'] == 0) & (raw['dAge'] < 5)
    frame = raw.loc[keep].reset_index(drop=True)
    hours = frame['dHours'].to_numpy(dtype=float)
    t = (hours > np.median(hours)).astype(int)
    children = frame['iFertil'].to_numpy(dtype=float) - manifest.get('child_count_offset', 1)

    id_column = manifest.get('id_column')
    if id_column and id_column in frame.columns:
        ids = frame[id_column].astype(str).to_numpy(dtype=object)
    else:
        ids = np.array([f"u{i}" for i in range(len(frame))], dtype=object)

    ds = Dataset(
        ids=ids,
        X=frame[features].to_numpy(dtype=float),
        t=t,
        y_r=frame['dIncome1'].to_numpy(dtype=float),
        y_c=-1.0 * children,
        meta=DatasetMeta(name="census", provenance="build_census"),
    )
    _check_expected(ds, manifest)
    logger.info(f"Census recipe kept {ds.n} of {len(raw)} rows, d={ds.d}")
    return ds


def build_covtype(raw, manifest=None):
    """Covertype: Spruce-Fir and Lodgepole Pine stands above the median elevation.

    t = closer to hydrology than the filtered median, y_r = closer to wildfire
    ignition points than the filtered median, y_c = 1 for Lodgepole Pine.
    """
    manifest = manifest or load_manifest("covtype")
    features = list(manifest['features'])
    required = ['Cover_Type', 'Elevation', 'Horizontal_Distance_To_Hydrology',
                'Horizontal_Distance_To_Fire_Points'] + features
    _require(raw, required, "covtype")

    forests = raw.loc[raw['Cover_Type'].isin([SPRUCE_FIR, LODGEPOLE_PINE])]
    elevation = forests['Elevation'].to_numpy(dtype=float)
    frame = forests.loc[elevation > np.median(elevation)].reset_index(drop=True)

    hydrology = frame['Horizontal_Distance_To_Hydrology'].to_numpy(dtype=float)
    fire = frame['Horizontal_Distance_To_Fire_Points'].to_numpy(dtype=float)
    ds = Dataset(
        ids=np.array([f"u{i}" for i in range(len(frame))], dtype=object),
        X=frame[features].to_numpy(dtype=float),
        t=(hydrology < np.median(hydrology)).astype(int),
        y_r=(fire < np.median(fire)).astype(float),
        y_c=(frame['Cover_Type'].to_numpy() == LODGEPOLE_PINE).astype(float),
        meta=DatasetMeta(name="covtype", provenance="build_covtype"),
    )
    _check_expected(ds, manifest)
    logger.info(f"Covertype recipe kept {ds.n} of {len(raw)} rows, d={ds.d}")
    return ds


RECIPES = {
    'census': build_census,
    'covtype': build_covtype,
}
