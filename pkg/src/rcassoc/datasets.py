"""Bundled example data."""

from importlib import resources

from .table import read_counts

__all__ = ["dataset_path", "dataset_names", "load_mobility"]

_DATASETS = {"mobility": "mobility.csv"}


def dataset_names():
    return tuple(_DATASETS)


def dataset_path(name):
    """Filesystem path of a bundled dataset."""
    try:
        fname = _DATASETS[name]
    except KeyError:
        raise ValueError(f"unknown dataset {name!r}; available: {sorted(_DATASETS)}") from None
    return resources.files("rcassoc").joinpath("data", fname)


def load_mobility(row_logit="G", col_logit="G"):
    """Father-son occupational status counts (5x5, n = 3500)."""
    return read_counts(dataset_path("mobility"), row_logit, col_logit)
