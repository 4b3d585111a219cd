"""Sub-dataset fragmentation and shortcut-learning diagnostics.

Mixtures are given either as a mixture document (``{"components": [...]}``,
the format read by ``fragscope mi``) or as a list of ``(u, v)`` pairs of
``{symbol: mass}`` dicts. Report-shaped results come back as plain dicts with
the same fields the CLI writes to ``report.json``.
"""

from __future__ import annotations

import json
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import _fragscope as _core
from ._fragscope import FragscopeError, set_thread_count, thread_count

DEFAULT_TEMPERATURES = tuple(_core.DEFAULT_TEMPERATURES)
DEFAULT_LAMBDA = _core.DEFAULT_LAMBDA
DEFAULT_DELTA = _core.DEFAULT_DELTA

Distribution = Mapping[str, float]
Mixture = Union[Mapping, Sequence[Sequence[Distribution]]]

__all__ = [
    "FragscopeError",
    "DEFAULT_TEMPERATURES",
    "DEFAULT_LAMBDA",
    "DEFAULT_DELTA",
    "set_thread_count",
    "thread_count",
    "entropy",
    "mixture_summary",
    "normalized_mi",
    "verify_propositions",
    "apply_bridge",
    "symmetrize_factor",
    "plan_bridge",
    "temperature_sweep",
    "simulate_sweep",
    "default_sim_config",
]


def _dist_doc(d: Distribution) -> dict:
    return {"symbols": list(d.keys()), "mass": [float(p) for p in d.values()]}


def _mixture_text(mix: Mixture) -> str:
    if isinstance(mix, Mapping):
        return json.dumps(mix)
    comps = [{"u": _dist_doc(u), "v": _dist_doc(v)} for u, v in mix]
    return json.dumps({"components": comps})


def _pairs(text: str) -> list:
    doc = json.loads(text)
    return [
        tuple(dict(zip(c[f]["symbols"], c[f]["mass"])) for f in ("u", "v"))
        for c in doc["components"]
    ]


def entropy(dist: Distribution) -> float:
    """Shannon entropy in bits."""
    return _core.entropy(list(dist.keys()), [float(p) for p in dist.values()])


def mixture_summary(mix: Mixture) -> dict:
    """Entropies, MI, NMI and the interleaving statistics of a uniform mixture."""
    return json.loads(_core.mixture_summary(_mixture_text(mix)))


def normalized_mi(mix: Mixture) -> float:
    return mixture_summary(mix)["nmi"]


def verify_propositions(trials: int = 100, seed: int = 0, max_support: int = 8) -> dict:
    """Random check of the disjoint-support equality and the overlap bound."""
    return json.loads(_core.verify_propositions(trials, seed, max_support))


def apply_bridge(mix: Mixture, factor: str, symbols: Iterable[str], epsilon: float) -> list:
    return _pairs(_core.apply_bridge(_mixture_text(mix), factor, list(symbols), epsilon))


def symmetrize_factor(mix: Mixture, factor: str) -> list:
    return _pairs(_core.symmetrize_factor(_mixture_text(mix), factor))


def plan_bridge(
    mix: Mixture,
    factor: str = "v",
    target: float = 0.5,
    grid: Sequence[float] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    symbols: Iterable[str] = ("bridge",),
) -> dict:
    """Smallest grid epsilon whose bridged mixture reaches the target NMI."""
    return json.loads(_core.plan_bridge(_mixture_text(mix), factor, list(symbols), target, list(grid)))


def temperature_sweep(
    embeddings,
    labels: Sequence[str] | None = None,
    temperatures: Sequence[float] = DEFAULT_TEMPERATURES,
    *,
    normalize: bool = True,
    estimator: str = "exact",
    budget: int = 0,
    seed: int = 0,
    aggregation: str = "mean",
) -> dict:
    """Diversity per group plus disparity and fragmentation ratio per temperature.

    Rows are L2-normalized unless ``normalize`` is false, in which case they
    must already have unit norm.
    """
    arr = np.ascontiguousarray(embeddings, dtype=np.float64)
    return json.loads(
        _core.temperature_sweep(
            arr, list(labels or []), list(temperatures), normalize, estimator, budget, seed, aggregation
        )
    )


def default_sim_config() -> dict:
    return json.loads(_core.default_sim_config())


def simulate_sweep(
    knob: str = "viewpoint_radius",
    values: Sequence[float] = (),
    config: Mapping | None = None,
    lam: float = DEFAULT_LAMBDA,
    delta: float = DEFAULT_DELTA,
) -> dict:
    """Shortcut simulator sweep over one knob; empty ``values`` uses the default grid."""
    return json.loads(_core.simulate_sweep(json.dumps(dict(config or {})), knob, list(values), lam, delta))
