"""Survey-table ingestion and preparation.

Tables hold categorical survey answers as state indices (missing = -1).
This module covers CSV round-tripping, the 0-30 composite coverage score,
histogram reporting, seeded train/test splitting, and SMOTE rebalancing of
a binary label.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from math import floor
from typing import IO, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateClass,
    EmptyTable,
    MissingColumn,
    NonBinaryLabel,
    RaggedRow,
    TooFewMinority,
    UnknownStateLabel,
    UnsortedEdges,
)
from .model import VariableSpec
from .rng import derive_rng

MISSING = -1
MISSING_TOKENS = ("", "NA")
MISSING_STATE_LABEL = "(missing)"


@dataclass(frozen=True, eq=False)
class DatasetTable:
    """Immutable n x m table of state indices with per-row ids."""

    columns: tuple[VariableSpec, ...]
    codes: np.ndarray
    row_ids: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "columns", tuple(self.columns))
        codes = np.array(self.codes, dtype=np.int32)
        if codes.ndim != 2:
            raise ValueError("codes must be a 2-D matrix")
        if codes.shape != (len(self.row_ids), len(self.columns)):
            raise ValueError(
                f"codes shape {codes.shape} != ({len(self.row_ids)}, {len(self.columns)})"
            )
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        for j, col in enumerate(self.columns):
            vals = codes[:, j]
            bad = (vals != MISSING) & ((vals < 0) | (vals >= col.cardinality))
            if np.any(bad):
                raise ValueError(f"column {col.name!r} holds an out-of-range state index")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "row_ids", tuple(int(r) for r in self.row_ids))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, DatasetTable)
            and self.columns == other.columns
            and self.row_ids == other.row_ids
            and np.array_equal(self.codes, other.codes)
        )

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def n_cols(self) -> int:
        return self.codes.shape[1]

    def column_index(self, name: str) -> int:
        for j, col in enumerate(self.columns):
            if col.name == name:
                return j
        raise MissingColumn(
            f"no column named {name!r}; columns are {[c.name for c in self.columns]}"
        )

    def column(self, j: int) -> np.ndarray:
        return self.codes[:, j]

    def select_rows(self, positions: Sequence[int]) -> "DatasetTable":
        pos = list(positions)
        return DatasetTable(
            self.columns,
            self.codes[pos, :],
            tuple(self.row_ids[p] for p in pos),
        )


def load_table(source: str | os.PathLike | IO[str], schema: Sequence[VariableSpec] | None = None) -> DatasetTable:
    """Parse a header-row CSV of state labels into a DatasetTable.

    Cells equal to "" or "NA" are missing. Without a schema, each column's
    states are the distinct observed labels sorted lexicographically; with a
    schema, labels outside the declared states are rejected.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise EmptyTable("no header row")
    header, cells = rows[0], rows[1:]
    if not cells:
        raise EmptyTable("no data rows")
    if not header or any(not h for h in header):
        raise EmptyTable("header row is empty or has blank names")
    width = len(header)
    for i, row in enumerate(cells):
        if len(row) != width:
            raise RaggedRow(f"row {i + 2} has {len(row)} cells, expected {width}")

    if schema is not None:
        specs = tuple(
            VariableSpec(spec.name, spec.states, j) for j, spec in enumerate(schema)
        )
        if [s.name for s in specs] != header:
            raise MissingColumn(
                f"header {header} does not match schema columns {[s.name for s in specs]}"
            )
    else:
        specs_list = []
        for j, name in enumerate(header):
            labels = sorted({row[j] for row in cells} - set(MISSING_TOKENS))
            if len(labels) < 2:
                raise ValueError(
                    f"column {name!r} has fewer than 2 distinct labels; supply a schema"
                )
            specs_list.append(VariableSpec(name, tuple(labels), j))
        specs = tuple(specs_list)

    lookup = [{label: k for k, label in enumerate(s.states)} for s in specs]
    codes = np.full((len(cells), width), MISSING, dtype=np.int32)
    for i, row in enumerate(cells):
        for j, cell in enumerate(row):
            if cell in MISSING_TOKENS:
                continue
            k = lookup[j].get(cell)
            if k is None:
                raise UnknownStateLabel(
                    f"row {i + 2}, column {header[j]!r}: label {cell!r} not in "
                    f"{list(specs[j].states)}"
                )
            codes[i, j] = k
    return DatasetTable(specs, codes, tuple(range(len(cells))))


def table_to_csv_text(
    table: DatasetTable, extra_columns: Mapping[str, Sequence[int]] | None = None
) -> str:
    """Canonical CSV form: header, state labels, "" for missing, \\n line ends."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    extras = list((extra_columns or {}).items())
    for name, values in extras:
        if len(values) != table.n_rows:
            raise ValueError(f"extra column {name!r} has {len(values)} values")
    writer.writerow([c.name for c in table.columns] + [name for name, _ in extras])
    for i in range(table.n_rows):
        row = [
            "" if table.codes[i, j] == MISSING else table.columns[j].states[table.codes[i, j]]
            for j in range(table.n_cols)
        ]
        row.extend(str(int(values[i])) for _, values in extras)
        writer.writerow(row)
    return out.getvalue()


def save_table(
    table: DatasetTable,
    path: str | os.PathLike,
    extra_columns: Mapping[str, Sequence[int]] | None = None,
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table_to_csv_text(table, extra_columns))


def add_missing_state(table: DatasetTable) -> DatasetTable:
    """Recode missing cells as an explicit trailing "(missing)" state.

    Survey non-response is informative for the generative model, so structure
    learning sees it as a regular category instead of dropping rows.
    """
    specs = []
    codes = np.array(table.codes)
    for j, col in enumerate(table.columns):
        mask = codes[:, j] == MISSING
        if mask.any():
            specs.append(
                VariableSpec(col.name, col.states + (MISSING_STATE_LABEL,), j)
            )
            codes[mask, j] = col.cardinality
        else:
            specs.append(col)
    return DatasetTable(tuple(specs), codes, table.row_ids)


def column_mode(values: np.ndarray, cardinality: int) -> int:
    """Most frequent non-missing state; ties -> lowest state index."""
    observed = values[values != MISSING]
    if observed.size == 0:
        return 0
    return int(np.argmax(np.bincount(observed, minlength=cardinality)))


def impute_modes(table: DatasetTable) -> DatasetTable:
    """Replace every missing cell with its column mode."""
    codes = np.array(table.codes)
    for j, col in enumerate(table.columns):
        mask = codes[:, j] == MISSING
        if mask.any():
            codes[mask, j] = column_mode(table.codes[:, j], col.cardinality)
    return DatasetTable(table.columns, codes, table.row_ids)


# -- composite coverage score ----------------------------------------------------

CVRICS_MAX = 30


@dataclass(frozen=True)
class CvricsSpec:
    """Per-state integer contributions whose maxima sum to exactly 30."""

    components: tuple[tuple[str, tuple[tuple[str, int], ...]], ...]
    score_range: tuple[int, int] = (0, CVRICS_MAX)

    def __post_init__(self) -> None:
        components = tuple(
            (name, tuple((label, int(v)) for label, v in scores))
            for name, scores in self.components
        )
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "score_range", tuple(self.score_range))
        if not components:
            raise ValueError("cvrics spec needs at least one component")
        total_max = 0
        for name, scores in components:
            if not scores:
                raise ValueError(f"component {name!r} has no state scores")
            if any(v < 0 for _, v in scores):
                raise ValueError(f"component {name!r} has a negative contribution")
            total_max += max(v for _, v in scores)
        if self.score_range != (0, CVRICS_MAX):
            raise ValueError(f"score range must be (0, {CVRICS_MAX})")
        if total_max != self.score_range[1]:
            raise ValueError(
                f"maximum achievable score {total_max} != declared {self.score_range[1]}"
            )

    @classmethod
    def from_json(cls, doc: Mapping) -> "CvricsSpec":
        components = tuple(
            (comp["column"], tuple(sorted(comp["scores"].items())))
            for comp in doc["components"]
        )
        rng = tuple(doc.get("range", (0, CVRICS_MAX)))
        return cls(components, rng)  # type: ignore[arg-type]

    def to_json(self) -> dict:
        return {
            "components": [
                {"column": name, "scores": {label: v for label, v in scores}}
                for name, scores in self.components
            ],
            "range": list(self.score_range),
        }


def compute_cvrics(table: DatasetTable, spec: CvricsSpec) -> np.ndarray:
    """Per-row sum of component contributions; missing cells contribute 0."""
    totals = np.zeros(table.n_rows, dtype=np.int64)
    for name, scores in spec.components:
        j = table.column_index(name)
        col = table.columns[j]
        contrib = np.zeros(col.cardinality, dtype=np.int64)
        score_map = dict(scores)
        for k, label in enumerate(col.states):
            contrib[k] = score_map.get(label, 0)
        codes = table.codes[:, j]
        present = codes != MISSING
        totals[present] += contrib[codes[present]]
    return totals


def histogram(values: Sequence[int] | np.ndarray, bin_edges: Sequence[float]) -> np.ndarray:
    """Counts per half-open bin [edge_i, edge_{i+1}); out-of-range values dropped."""
    edges = np.asarray(bin_edges, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise UnsortedEdges(f"bin edges must be strictly ascending: {list(bin_edges)}")
    vals = np.asarray(values, dtype=float)
    counts = np.zeros(edges.size - 1, dtype=np.int64)
    if vals.size == 0:
        return counts
    idx = np.searchsorted(edges, vals, side="right") - 1
    ok = (idx >= 0) & (idx < counts.size) & (vals < edges[-1])
    np.add.at(counts, idx[ok], 1)
    return counts


# -- splitting & rebalancing ------------------------------------------------------


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.8
    stratify_on: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError(f"train_fraction {self.train_fraction} not in (0, 1)")


def train_test_split(table: DatasetTable, config: SplitConfig) -> tuple[DatasetTable, DatasetTable]:
    """Disjoint, exhaustive split; train gets floor(fraction * n) rows per stratum."""
    n = table.n_rows
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    rng = derive_rng(config.seed)
    if config.stratify_on is None:
        strata = [np.arange(n)]
    else:
        col = table.codes[:, table.column_index(config.stratify_on)]
        strata = [np.flatnonzero(col == v) for v in np.unique(col)]
    train_pos: list[int] = []
    test_pos: list[int] = []
    for members in strata:
        if members.size < 2:
            raise DegenerateClass(
                f"stratum with {members.size} row(s) cannot be split"
            )
        perm = members[rng.permutation(members.size)]
        cut = floor(members.size * config.train_fraction)
        train_pos.extend(perm[:cut].tolist())
        test_pos.extend(perm[cut:].tolist())
    return table.select_rows(sorted(train_pos)), table.select_rows(sorted(test_pos))


@dataclass(frozen=True)
class SmoteConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0
    seed: int = 0
    nominal_columns: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "nominal_columns", tuple(self.nominal_columns))
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        if not (0.0 < self.target_ratio <= 1.0):
            raise ValueError(f"target_ratio {self.target_ratio} not in (0, 1]")


def mixed_distance(
    columns: Sequence[VariableSpec],
    a: np.ndarray,
    b: np.ndarray,
    nominal: frozenset[int] = frozenset(),
    skip: frozenset[int] = frozenset(),
) -> float:
    """Normalized rank distance on ordinal columns plus 0/1 mismatch on nominal."""
    d = 0.0
    for j, col in enumerate(columns):
        if j in skip:
            continue
        if j in nominal:
            d += float(a[j] != b[j])
        else:
            d += abs(float(a[j]) - float(b[j])) / (col.cardinality - 1)
    return d


def smote(table: DatasetTable, label: str, config: SmoteConfig) -> DatasetTable:
    """Append interpolated minority rows until minority/majority = target_ratio.

    Each synthetic row takes a random minority base row and one of its
    k nearest minority neighbors; ordinal columns interpolate with one
    lambda ~ U[0,1] per row (rounded to the nearest state), unordered
    categorical columns copy from either parent by fair coin. Original rows
    pass through unchanged, in order, ahead of the synthetic block.
    """
    li = table.column_index(label)
    if table.columns[li].cardinality != 2:
        raise NonBinaryLabel(
            f"label {label!r} has {table.columns[li].cardinality} states, need 2"
        )
    keep = np.flatnonzero(table.codes[:, li] != MISSING)
    base = table if keep.size == table.n_rows else table.select_rows(keep.tolist())
    labels = base.codes[:, li]
    counts = np.bincount(labels, minlength=2)
    minority = int(np.argmin(counts))
    n_min, n_maj = int(counts[minority]), int(counts[1 - minority])
    if n_min <= config.k_neighbors:
        raise TooFewMinority(
            f"minority class has {n_min} rows; need more than k={config.k_neighbors}"
        )
    n_synth = int(round(config.target_ratio * n_maj)) - n_min
    if n_synth <= 0:
        return base

    nominal = frozenset(
        table.column_index(name) for name in config.nominal_columns
    )
    minority_pos = np.flatnonzero(labels == minority)
    filled = impute_modes(base)
    m = filled.codes[minority_pos, :].astype(np.float64)

    # Pairwise mixed distances among minority rows (label column excluded).
    dist = np.zeros((len(minority_pos), len(minority_pos)))
    for j, col in enumerate(base.columns):
        if j == li:
            continue
        diff = m[:, None, j] - m[None, :, j]
        if j in nominal:
            dist += (diff != 0).astype(float)
        else:
            dist += np.abs(diff) / (col.cardinality - 1)
    np.fill_diagonal(dist, np.inf)
    # Stable argsort: equal distances fall back to ascending row position.
    neighbor_idx = np.argsort(dist, axis=1, kind="stable")[:, : config.k_neighbors]

    rng = derive_rng(config.seed)
    nominal_order = [j for j in range(base.n_cols) if j in nominal and j != li]
    synth = np.zeros((n_synth, base.n_cols), dtype=np.int32)
    for t in range(n_synth):
        r = int(rng.integers(len(minority_pos)))
        nb = int(neighbor_idx[r, int(rng.integers(config.k_neighbors))])
        lam = float(rng.random())
        coins = {j: float(rng.random()) for j in nominal_order}
        for j in range(base.n_cols):
            if j == li:
                synth[t, j] = minority
            elif j in nominal:
                synth[t, j] = int(m[r, j] if coins[j] < 0.5 else m[nb, j])
            else:
                synth[t, j] = int(np.rint(m[r, j] + lam * (m[nb, j] - m[r, j])))

    next_id = (max(base.row_ids) + 1) if base.row_ids else 0
    return DatasetTable(
        base.columns,
        np.vstack([base.codes, synth]),
        base.row_ids + tuple(range(next_id, next_id + n_synth)),
    )
