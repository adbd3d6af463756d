"""Built-in datasource plugins."""

from .libsvm import LibsvmDataSource, RawDataset, RawRow, load_libsvm, parse_libsvm, serialize_libsvm
from .partition import labels_to_signs, partition, shard_sizes
from .synthetic import SyntheticDataSource, planted_point, synth

__all__ = [
    "LibsvmDataSource",
    "RawDataset",
    "RawRow",
    "SyntheticDataSource",
    "labels_to_signs",
    "load_libsvm",
    "parse_libsvm",
    "partition",
    "planted_point",
    "serialize_libsvm",
    "shard_sizes",
    "synth",
]
