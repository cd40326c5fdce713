"""Seeded test-function generators shared by the check suites.

All samplers take an explicit numpy Generator so every suite is reproducible
from its seed argument alone.
"""
from __future__ import annotations

import numpy as np

from .space import FiniteMeasuredSpace, Fn

__all__ = ["sample_fn", "sample_fns", "sample_pair", "canonical_fns"]

_SCALES = (0.1, 1.0, 10.0)


def canonical_fns(space: FiniteMeasuredSpace) -> list[Fn]:
    """Basis vectors, constants, and an alternating profile."""
    n = space.n
    out = [np.ones(n), -np.ones(n)]
    out.extend(np.eye(n)[i] for i in range(n))
    out.append(np.array([(-1.0) ** i for i in range(n)]))
    return out


def sample_fn(space: FiniteMeasuredSpace, rng: np.random.Generator,
              witnesses: tuple[Fn, ...] = ()) -> Fn:
    """Draw one function from a mixture of shapes.

    Gaussians at several scales, random indicators, single spikes, and (when
    supplied) capacity witnesses with and without small noise. Witness-based
    draws keep the suites honest near the extremal functions instead of only
    probing generic vectors.
    """
    n = space.n
    kinds = ["gauss", "indicator", "spike"]
    if witnesses:
        kinds += ["witness", "witness_noise"]
    kind = kinds[int(rng.integers(len(kinds)))]
    if kind == "gauss":
        scale = _SCALES[int(rng.integers(len(_SCALES)))]
        return scale * rng.standard_normal(n)
    if kind == "indicator":
        mask = rng.random(n) < rng.uniform(0.2, 0.8)
        if not mask.any():
            mask[int(rng.integers(n))] = True
        return mask.astype(float) * rng.uniform(0.5, 3.0)
    if kind == "spike":
        u = np.zeros(n)
        u[int(rng.integers(n))] = rng.uniform(0.5, 5.0) * (1.0 if rng.random() < 0.5 else -1.0)
        return u
    w = np.asarray(witnesses[int(rng.integers(len(witnesses)))], dtype=float).copy()
    if kind == "witness_noise":
        w = w + 0.05 * rng.standard_normal(n)
    return w


def sample_fns(space: FiniteMeasuredSpace, count: int, seed: int = 0,
               witnesses: tuple[Fn, ...] = (), include_canonical: bool = True) -> list[Fn]:
    """Deterministic batch: canonical profiles, every witness verbatim, then
    seeded random draws up to count. Witnesses are never subsampled away;
    converse checks rely on the extremal functions being present exactly."""
    rng = np.random.default_rng(seed)
    out = canonical_fns(space) if include_canonical else []
    out.extend(np.asarray(w, dtype=float).copy() for w in witnesses)
    while len(out) < count:
        out.append(sample_fn(space, rng, witnesses))
    return out


def sample_pair(space: FiniteMeasuredSpace, rng: np.random.Generator,
                witnesses: tuple[Fn, ...] = ()) -> tuple[Fn, Fn]:
    return sample_fn(space, rng, witnesses), sample_fn(space, rng, witnesses)
