"""Bundled data: first-recurrence bladder-cancer data (R ``survival::bladder``, enum == 1)."""
from importlib import resources

from ..core import CsvSchema, Dataset, load_csv

BLADDER_SCHEMA = CsvSchema("time", "status", ("rx", "number", "size"))


def bladder_path() -> str:
    return str(resources.files(__name__) / "bladder.csv")


def load_bladder() -> Dataset:
    return load_csv(bladder_path(), BLADDER_SCHEMA)
