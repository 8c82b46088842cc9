"""Core data model: registers, style labels, datasets, features, normalization.

A register is one fused 1 Hz sample of everything the node senses: GPS time,
position and velocity plus the three acceleration and three turning-speed
channels.  All types here are immutable values; every other module builds on
them.
"""

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyDataset,
    FieldOutOfRange,
    UnlabeledData,
)

SECONDS_PER_DAY = 86400.0


class DrivingStyle(enum.IntEnum):
    """Driving style label with stable integer codes used in serialization."""

    CON = 0  # conservative
    NOR = 1  # normal
    AGG = 2  # aggressive

    @classmethod
    def from_label(cls, text: str) -> "DrivingStyle":
        try:
            return cls[text.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown driving style label: {text!r}") from None


class ClassScheme(enum.Enum):
    """How the three raw labels are mapped for a classification task."""

    THREE_CLASS = "three_class"
    DROP_CON = "drop_con"      # conservative registers excluded
    MERGED = "merged"          # conservative relabeled as normal

    @property
    def classes(self) -> tuple[DrivingStyle, ...]:
        if self is ClassScheme.THREE_CLASS:
            return (DrivingStyle.CON, DrivingStyle.NOR, DrivingStyle.AGG)
        return (DrivingStyle.NOR, DrivingStyle.AGG)


@dataclass(frozen=True)
class Register:
    """One fused 1 Hz sample.

    Units: time_of_day in seconds since midnight, position in signed degrees,
    velocity in km/h, fax/fay/faz in m/s^2, fgx/fgy/fgz in degrees/s.  The
    x axis points along the vehicle's forward direction, y is tangential to
    it, and z is aligned with gravity (so faz reads about +9.81 at rest).
    """

    time_of_day: float
    latitude: float
    longitude: float
    velocity: float
    fax: float
    fay: float
    faz: float
    fgx: float
    fgy: float
    fgz: float
    label: DrivingStyle | None = None

    def with_label(self, label: DrivingStyle | None) -> "Register":
        return replace(self, label=label)


_NUMERIC_FIELDS = (
    "time_of_day", "latitude", "longitude", "velocity",
    "fax", "fay", "faz", "fgx", "fgy", "fgz",
)

_FIELD_BOUNDS = {
    "time_of_day": (0.0, SECONDS_PER_DAY, "right_open"),
    "latitude": (-90.0, 90.0, "closed"),
    "longitude": (-180.0, 180.0, "closed"),
    "velocity": (0.0, math.inf, "closed"),
}


def validate_register(r: Register) -> Register:
    """Return ``r`` unchanged if every invariant holds, else FieldOutOfRange."""
    for name in _NUMERIC_FIELDS:
        value = getattr(r, name)
        if not math.isfinite(value):
            raise FieldOutOfRange(name, value, "not finite")
        bounds = _FIELD_BOUNDS.get(name)
        if bounds is None:
            continue
        lo, hi, kind = bounds
        if value < lo or value > hi or (kind == "right_open" and value == hi):
            raise FieldOutOfRange(name, value)
    return r


# Feature name -> accessor.  "time" is encoded as fraction of the day so it
# lands on the same scale as the other normalized inputs.
_FEATURE_GETTERS = {
    "velocity": lambda r: r.velocity,
    "latitude": lambda r: r.latitude,
    "longitude": lambda r: r.longitude,
    "time": lambda r: r.time_of_day / SECONDS_PER_DAY,
    "fax": lambda r: r.fax,
    "fay": lambda r: r.fay,
    "faz": lambda r: r.faz,
    "fgx": lambda r: r.fgx,
    "fgy": lambda r: r.fgy,
    "fgz": lambda r: r.fgz,
}


@dataclass(frozen=True)
class FeatureSet:
    """Named, ordered selection of register fields used as classifier inputs."""

    name: str
    fields: tuple[str, ...]

    def __post_init__(self):
        if not self.fields:
            raise ValueError("feature set needs at least one field")
        for f in self.fields:
            if f not in _FEATURE_GETTERS:
                raise ValueError(f"unknown feature field: {f!r}")

    def __len__(self) -> int:
        return len(self.fields)


FULL10 = FeatureSet("full10", (
    "velocity", "latitude", "longitude", "time",
    "fax", "fay", "faz", "fgx", "fgy", "fgz",
))
ACC7 = FeatureSet("acc7", (
    "velocity", "latitude", "longitude", "time", "fax", "fay", "faz",
))
GYRO7 = FeatureSet("gyro7", (
    "velocity", "latitude", "longitude", "time", "fgx", "fgy", "fgz",
))
GYRO4 = FeatureSet("gyro4", ("velocity", "fgx", "fgy", "fgz"))

FEATURE_SETS = {fs.name: fs for fs in (FULL10, ACC7, GYRO7, GYRO4)}


def extract_features(r: Register, fs: FeatureSet) -> list[float]:
    """Project a register onto the feature set's fields, in declared order."""
    return [_FEATURE_GETTERS[name](r) for name in fs.fields]


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of registers with a provenance note.

    Either every register carries a label or none does; mixed datasets are
    rejected because they are unusable for both training and streaming.
    """

    registers: tuple[Register, ...]
    source: str = ""

    def __post_init__(self):
        n_labeled = sum(1 for r in self.registers if r.label is not None)
        if 0 < n_labeled < len(self.registers):
            raise UnlabeledData(
                f"dataset mixes {n_labeled} labeled and "
                f"{len(self.registers) - n_labeled} unlabeled registers"
            )

    def __len__(self) -> int:
        return len(self.registers)

    def __iter__(self):
        return iter(self.registers)

    def __getitem__(self, idx) -> Register:
        return self.registers[idx]

    @property
    def labeled(self) -> bool:
        return len(self.registers) > 0 and self.registers[0].label is not None

    def labels(self) -> list[DrivingStyle]:
        self.require_labeled()
        return [r.label for r in self.registers]

    def require_labeled(self) -> "Dataset":
        if not self.labeled:
            raise UnlabeledData("operation requires a fully labeled dataset")
        return self

    def class_counts(self) -> dict[DrivingStyle, int]:
        counts: dict[DrivingStyle, int] = {}
        for r in self.registers:
            if r.label is not None:
                counts[r.label] = counts.get(r.label, 0) + 1
        return counts

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.registers[i] for i in indices), self.source)


def apply_scheme(data: Dataset, scheme: ClassScheme) -> Dataset:
    """Transform labels according to the class scheme.

    THREE_CLASS is the identity, DROP_CON removes conservative registers,
    MERGED relabels them as normal.
    """
    data.require_labeled()
    if scheme is ClassScheme.THREE_CLASS:
        return data
    if scheme is ClassScheme.DROP_CON:
        kept = tuple(r for r in data.registers if r.label is not DrivingStyle.CON)
        return Dataset(kept, data.source)
    relabeled = tuple(
        r.with_label(DrivingStyle.NOR) if r.label is DrivingStyle.CON else r
        for r in data.registers
    )
    return Dataset(relabeled, data.source)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-feature min/max fitted on a training set."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != len(self.maxs):
            raise DimensionMismatch("min and max vectors differ in length")
        for lo, hi in zip(self.mins, self.maxs):
            if hi < lo:
                raise ValueError("per-feature max must be >= min")

    def __len__(self) -> int:
        return len(self.mins)


def fit_normalization(data: Dataset, fs: FeatureSet) -> NormalizationStats:
    """Compute per-feature min/max over the extracted feature vectors."""
    if len(data) == 0:
        raise EmptyDataset("cannot fit normalization on an empty dataset")
    matrix = feature_matrix(data, fs)
    return NormalizationStats(
        mins=tuple(float(x) for x in matrix.min(axis=0)),
        maxs=tuple(float(x) for x in matrix.max(axis=0)),
    )


def apply_normalization(vector, stats: NormalizationStats) -> list[float]:
    """Map each component to (x - min)/(max - min), clamped into [0, 1].

    Degenerate features (max == min in the training data) map to 0.
    """
    if len(vector) != len(stats):
        raise DimensionMismatch(
            f"vector has {len(vector)} components, stats expect {len(stats)}"
        )
    out = []
    for x, lo, hi in zip(vector, stats.mins, stats.maxs):
        if hi == lo:
            out.append(0.0)
        else:
            out.append(min(1.0, max(0.0, (x - lo) / (hi - lo))))
    return out


def feature_matrix(data: Dataset, fs: FeatureSet) -> np.ndarray:
    """Extract all registers at once as an (n, d) float64 matrix."""
    return np.array([extract_features(r, fs) for r in data], dtype=np.float64)


def normalize_matrix(matrix: np.ndarray, stats: NormalizationStats) -> np.ndarray:
    """Vectorized apply_normalization over the rows of a feature matrix."""
    if matrix.shape[1] != len(stats):
        raise DimensionMismatch(
            f"matrix has {matrix.shape[1]} columns, stats expect {len(stats)}"
        )
    mins = np.asarray(stats.mins)
    span = np.asarray(stats.maxs) - mins
    safe = np.where(span == 0.0, 1.0, span)
    out = np.clip((matrix - mins) / safe, 0.0, 1.0)
    out[:, span == 0.0] = 0.0
    return out
