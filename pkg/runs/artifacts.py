"""Fixed artifact file names and the readers/writers the commands share."""

import logging
from pathlib import Path

import numpy as np

from core.exceptions import SchemaError
from core.jsonio import read_json, write_json
from core.seeding import make_rng
from ingest.csv_io import FLOAT_FORMAT, load_csv, read_sidecar, write_csv, write_sidecar
from ingest.splits import split_dataset

logger = logging.getLogger(__name__)

DATASET_CSV = "dataset.csv"
GROUND_TRUTH_CSV = "ground_truth.csv"
SPLITS = ("train", "val", "test")
MODEL_JSON = "model.json"
TRACE_CSV = "trace.csv"
CURVE_CSV = "curve.csv"
GENERALIZATION_CSV = "generalization.csv"
SUMMARY_JSON = "summary.json"
CONFIG_JSON = "config.resolved.json"
LOG_CSV = "log.csv"
COMPARE_CSV = "compare.csv"


def write_frame(frame, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_config(out, config):
    return write_json(Path(out) / CONFIG_JSON, config)


def write_summary(out, summary):
    return write_json(Path(out) / SUMMARY_JSON, summary)


def subsample(ds, size, seed):
    """Seeded subsample of `size` rows in original row order; the whole set when size is None."""
    if size is None or size >= ds.n:
        return ds
    rows = np.sort(make_rng(seed, "subsample").choice(ds.n, size=size, replace=False))
    return ds.subset(rows, name=ds.meta.name)


def write_dataset_bundle(ds, out, provenance, ratios, seed):
    """Write dataset.csv and its train/val/test splits, each with a JSON sidecar."""
    out = Path(out)
    document = {**provenance, 'name': ds.meta.name, 'seed': seed, 'n': ds.n, 'd': ds.d}
    write_csv(ds, out / DATASET_CSV)
    write_sidecar(out / DATASET_CSV, {**document, 'split': None})
    parts = split_dataset(ds, ratios, seed)
    for label, part in zip(SPLITS, parts):
        path = out / f"{label}.csv"
        write_csv(part, path)
        write_sidecar(path, {**document, 'n': part.n, 'split': {'part': label, **ratios.to_document()}})
    logger.info(f"Wrote {ds.n} rows to {out} (" + ", ".join(f"{p.n} {l}" for l, p in zip(SPLITS, parts)) + ")")
    return parts


def load_split(data_dir, part, required=True):
    path = Path(data_dir) / f"{part}.csv"
    if not path.exists():
        if required:
            raise FileNotFoundError(f"{path} not found; run 'gen' or 'prep' first")
        return None
    return load_csv(path, name=part)


def dataset_document(data_dir):
    """Provenance sidecar of the data directory's dataset.csv ({} if absent)."""
    return read_sidecar(Path(data_dir) / DATASET_CSV)


def read_model_document(model_dir):
    path = Path(model_dir) / MODEL_JSON
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run 'train' first")
    try:
        return read_json(path)
    except ValueError as exc:
        raise SchemaError(f"{path.name} is not valid JSON: {exc}")
