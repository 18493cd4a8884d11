"""Finitely supported measures on R^d and the JSON interchange format.

A measure is a list of distinct atoms with strictly positive weights that
sum to one.  The JSON format is::

    {"dim": d, "points": [[...], ...], "weights": [...]}

``weights`` may be omitted, in which case atoms are weighted uniformly.
Weights whose sum is within 1e-9 of one are renormalized; anything further
off is rejected.  Weights already normalized to within 1e-12 are kept
bit-for-bit so that serialize/load round-trips exactly.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DiscreteMeasure",
    "Translation",
    "MeasureFormatError",
    "load_measure",
    "loads_measure",
    "serialize_measure",
    "uniform_measure",
    "translate",
]

# Tolerances for weight validation (see module docstring).
_WEIGHT_SUM_TOL = 1e-9
_WEIGHT_KEEP_TOL = 1e-12


class MeasureFormatError(ValueError):
    """Raised when a measure violates the interchange format or its invariants."""


@dataclass(frozen=True)
class DiscreteMeasure:
    """A finitely supported probability measure: k distinct atoms in R^d.

    Attributes:
        points: (k, d) float64 array of atom locations, pairwise distinct.
        weights: (k,) float64 array of strictly positive masses summing to 1.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        weights = np.ascontiguousarray(np.asarray(self.weights, dtype=np.float64))
        if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] == 0:
            raise MeasureFormatError(
                f"points must be a non-empty (k, d) array, got shape {points.shape}"
            )
        if not np.isfinite(points).all():
            raise MeasureFormatError("points must be finite")
        k = points.shape[0]
        if weights.shape != (k,):
            raise MeasureFormatError(
                f"weights shape {weights.shape} does not match {k} atoms"
            )
        if not np.isfinite(weights).all() or (weights <= 0.0).any():
            raise MeasureFormatError("weights must be finite and strictly positive")
        s = float(weights.sum())
        if abs(s - 1.0) > _WEIGHT_SUM_TOL:
            raise MeasureFormatError(
                f"weights sum to {s!r}, more than {_WEIGHT_SUM_TOL} away from 1"
            )
        if abs(s - 1.0) > _WEIGHT_KEEP_TOL:
            weights = weights / s
        # Exact duplicate check (after float64 coercion).
        seen = {tuple(row) for row in points.tolist()}
        if len(seen) != k:
            raise MeasureFormatError("points must be pairwise distinct")
        points.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def num_atoms(self) -> int:
        return self.points.shape[0]

    def is_uniform(self, tol: float = 1e-12) -> bool:
        """True when every atom carries mass 1/k (within tol)."""
        k = self.num_atoms
        return bool(np.abs(self.weights - 1.0 / k).max() <= tol)


@dataclass(frozen=True)
class Translation:
    """A rigid shift x -> x + vector in R^d."""

    vector: np.ndarray = field()

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vector, dtype=np.float64))
        if v.ndim != 1 or v.shape[0] == 0 or not np.isfinite(v).all():
            raise MeasureFormatError("translation vector must be a finite 1-d array")
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    @property
    def dim(self) -> int:
        return self.vector.shape[0]


def _measure_from_obj(obj) -> DiscreteMeasure:
    if not isinstance(obj, dict):
        raise MeasureFormatError("measure JSON must be an object")
    try:
        dim = obj["dim"]
        points = obj["points"]
    except KeyError as exc:
        raise MeasureFormatError(f"measure JSON missing key {exc}") from exc
    if not isinstance(dim, int) or dim <= 0:
        raise MeasureFormatError(f"dim must be a positive integer, got {dim!r}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != dim:
        raise MeasureFormatError(
            f"points must be a list of length-{dim} rows, got shape {pts.shape}"
        )
    if "weights" in obj and obj["weights"] is not None:
        w = np.asarray(obj["weights"], dtype=np.float64)
    else:
        k = pts.shape[0]
        w = np.full(k, 1.0 / k)
    return DiscreteMeasure(points=pts, weights=w)


def load_measure(source) -> DiscreteMeasure:
    """Parse a measure from a byte stream, bytes, str, or a file path.

    Raises MeasureFormatError on malformed JSON or invariant violations.
    """
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        raise MeasureFormatError(f"cannot read a measure from {type(source)!r}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeasureFormatError(f"invalid JSON: {exc}") from exc
    return _measure_from_obj(obj)


def loads_measure(text: str) -> DiscreteMeasure:
    """Parse a measure from a JSON string."""
    return load_measure(text)


def serialize_measure(measure: DiscreteMeasure) -> bytes:
    """Serialize to the JSON interchange format.

    Floats are written with shortest round-trip formatting, so
    ``load_measure(serialize_measure(m))`` reproduces points and weights
    bit-for-bit.
    """
    obj = {
        "dim": measure.dim,
        "points": measure.points.tolist(),
        "weights": measure.weights.tolist(),
    }
    return json.dumps(obj).encode("utf-8")


def uniform_measure(points) -> DiscreteMeasure:
    """Uniform measure on the given distinct points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise MeasureFormatError(
            f"points must be a non-empty (k, d) array, got shape {pts.shape}"
        )
    k = pts.shape[0]
    return DiscreteMeasure(points=pts, weights=np.full(k, 1.0 / k))


def translate(measure: DiscreteMeasure, t: Translation) -> DiscreteMeasure:
    """Push a measure forward under x -> x + t. Weights are unchanged."""
    if t.dim != measure.dim:
        raise MeasureFormatError(
            f"translation dim {t.dim} does not match measure dim {measure.dim}"
        )
    return DiscreteMeasure(points=measure.points + t.vector, weights=measure.weights)
