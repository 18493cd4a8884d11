"""Named example instances used by the CLI and the test suite.

All presets live in R^2:

* cross:       mu on the diagonal corners of a square, nu on the
               anti-diagonal; every matching is optimal (maximal ties).
* mu_k (k>=1): the cross mu pulled inward by k/10 along the y axis, which
               breaks the tie in favor of the vertical matching with margin
               growing in k; nu as in cross.
* translation: a two-atom measure and its shift by (1, 0) (robust at any
               perturbation scale).
* split_1to2:  a unit mass split equally onto two atoms (no perfect
               matching exists).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import UsageError
from .measures import DiscreteMeasure, Translation, translate, uniform_measure

__all__ = ["Preset", "get_preset", "preset_names"]


@dataclass(frozen=True)
class Preset:
    name: str
    mu: DiscreteMeasure
    nu: DiscreteMeasure
    description: str
    k: Optional[int] = None


def _cross_nu() -> DiscreteMeasure:
    return uniform_measure([[-1.0, 1.0], [1.0, -1.0]])


def _cross() -> Preset:
    mu = uniform_measure([[-1.0, -1.0], [1.0, 1.0]])
    return Preset(
        name="cross",
        mu=mu,
        nu=_cross_nu(),
        description="diagonal vs anti-diagonal corners; all matchings tie",
    )


def _mu_k(k: int) -> Preset:
    if not (1 <= k <= 9):
        raise UsageError(f"preset mu_k supports k in 1..9, got {k}")
    s = k / 10.0
    mu = uniform_measure([[-1.0, -1.0 + s], [1.0, 1.0 - s]])
    return Preset(
        name=f"mu_{k}",
        mu=mu,
        nu=_cross_nu(),
        description=f"cross mu pulled inward by {s}; unique vertical matching",
        k=k,
    )


def _translation() -> Preset:
    mu = uniform_measure([[0.0, 0.0], [0.0, 0.1]])
    nu = translate(mu, Translation(np.array([1.0, 0.0])))
    return Preset(
        name="translation",
        mu=mu,
        nu=nu,
        description="two atoms and their shift by (1, 0); robust at any scale",
    )


def _split() -> Preset:
    mu = DiscreteMeasure(points=np.array([[0.0, 0.0]]), weights=np.array([1.0]))
    nu = uniform_measure([[1.0, 1.0], [1.0, -1.0]])
    return Preset(
        name="split_1to2",
        mu=mu,
        nu=nu,
        description="one atom split equally onto two; plan is not a matching",
    )


def preset_names() -> Tuple[str, ...]:
    return ("cross", "mu_k", "translation", "split_1to2")


def get_preset(name: str, k: Optional[int] = None) -> Preset:
    """Look up a preset by name.

    "mu_k" requires k; the aliases "mu_1" .. "mu_9" (and "mu1" style) carry
    k in the name.  "split" is accepted for "split_1to2".
    """
    key = name.strip().lower().replace("-", "_")
    if key == "cross":
        return _cross()
    if key == "translation":
        return _translation()
    if key in ("split", "split_1to2"):
        return _split()
    if key == "mu_k":
        if k is None:
            raise UsageError("preset mu_k requires --k")
        return _mu_k(int(k))
    if key.startswith("mu_") and key[3:].isdigit():
        return _mu_k(int(key[3:]))
    if key.startswith("mu") and key[2:].isdigit():
        return _mu_k(int(key[2:]))
    raise UsageError(
        f"unknown preset {name!r}; available: {', '.join(preset_names())}"
    )
