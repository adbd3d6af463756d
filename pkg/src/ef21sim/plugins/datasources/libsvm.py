"""LibSVM text parsing, serialization and the file-backed datasource."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO

from ef21sim.core.exceptions import (
    EmptyDatasetError,
    MalformedTokenError,
    NonIncreasingIndexError,
    NonPositiveIndexError,
)
from ef21sim.core.interfaces import DataSource
from ef21sim.core.problems import Objective, ObjectiveKind
from ef21sim.plugins.datasources.partition import partition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawRow:
    label: float
    features: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class RawDataset:
    """Rows in file order with 1-based feature indices."""

    rows: tuple[RawRow, ...]
    inferred_dim: int

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def label_histogram(self) -> dict[float, int]:
        counts: dict[float, int] = {}
        for row in self.rows:
            counts[row.label] = counts.get(row.label, 0) + 1
        return dict(sorted(counts.items()))


def _parse_real(token: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedTokenError(f"malformed token {token!r}", line=line_number) from None
    if not math.isfinite(value):
        raise MalformedTokenError(f"non-finite value {token!r}", line=line_number)
    return value


def _parse_line(text: str, line_number: int) -> RawRow:
    tokens = text.split()
    label = _parse_real(tokens[0], line_number)
    features: list[tuple[int, float]] = []
    previous = 0
    for token in tokens[1:]:
        index_text, sep, value_text = token.partition(":")
        if not sep or not index_text or not value_text:
            raise MalformedTokenError(f"malformed token {token!r}", line=line_number)
        try:
            index = int(index_text)
        except ValueError:
            raise MalformedTokenError(f"malformed index {index_text!r}", line=line_number) from None
        if index <= 0:
            raise NonPositiveIndexError("nonpositive index", line=line_number)
        if index <= previous:
            raise NonIncreasingIndexError("non-increasing index", line=line_number)
        features.append((index, _parse_real(value_text, line_number)))
        previous = index
    return RawRow(label=label, features=tuple(features))


def _decoded_lines(data: bytes | bytearray) -> list[str]:
    lines: list[str] = []
    for line_number, raw_line in enumerate(bytes(data).splitlines(), start=1):
        try:
            lines.append(raw_line.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise MalformedTokenError(f"invalid UTF-8 at byte {exc.start}", line=line_number) from None
    return lines


def parse_libsvm(data: bytes | str | BinaryIO) -> RawDataset:
    """Parse LibSVM text; ``#`` starts a comment and blank lines are skipped."""
    if hasattr(data, "read"):
        data = data.read()  # type: ignore[union-attr]
    lines = _decoded_lines(data) if isinstance(data, bytes | bytearray) else str(data).splitlines()

    rows: list[RawRow] = []
    dimension = 0
    for line_number, raw_line in enumerate(lines, start=1):
        content = raw_line.split("#", 1)[0].strip()
        if not content:
            continue
        row = _parse_line(content, line_number)
        if row.features:
            dimension = max(dimension, row.features[-1][0])
        rows.append(row)

    if not rows:
        raise EmptyDatasetError("empty dataset")
    return RawDataset(rows=tuple(rows), inferred_dim=dimension)


def _format_number(value: float) -> str:
    if value.is_integer():
        return str(int(value))
    return repr(value)


def serialize_libsvm(raw: RawDataset) -> bytes:
    lines: list[str] = []
    for row in raw.rows:
        parts = [_format_number(row.label)]
        parts.extend(f"{index}:{_format_number(value)}" for index, value in row.features)
        lines.append(" ".join(parts))
    return ("\n".join(lines) + "\n").encode("utf-8")


def load_libsvm(path: str | Path) -> RawDataset:
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"LibSVM datasource file not found: {file_path}")
    with file_path.open("rb") as handle:
        return parse_libsvm(handle)


class LibsvmDataSource(DataSource):
    def __init__(
        self,
        *,
        path: str | Path,
        clients: int,
        objective: str = ObjectiveKind.LOGISTIC_NONCONVEX,
        lam: float = 0.0,
        scale_features: bool = False,
        dimension: int | None = None,
    ) -> None:
        self.path = Path(path)
        self.clients = clients
        self.objective = ObjectiveKind(objective)
        self.lam = lam
        self.scale_features = scale_features
        self.dimension = dimension

    def load(self) -> Objective:
        raw = load_libsvm(self.path)
        shards = partition(
            raw,
            self.clients,
            dimension=self.dimension,
            scale_features=self.scale_features,
            remap_labels=self.objective == ObjectiveKind.LOGISTIC_NONCONVEX,
        )
        logger.info(
            "Loaded %s: N=%d d=%d split across %d clients",
            self.path,
            raw.n_rows,
            shards[0].dimension,
            self.clients,
        )
        return Objective(kind=self.objective, shards=tuple(shards), lam=self.lam)


__all__ = [
    "LibsvmDataSource",
    "RawDataset",
    "RawRow",
    "load_libsvm",
    "parse_libsvm",
    "serialize_libsvm",
]
