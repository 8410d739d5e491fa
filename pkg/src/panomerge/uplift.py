"""Uplift per-pixel instance labels onto splat primitives and render them back.

Each splat i carries a distribution over instance labels (column 0 = void)
obtained as the weight-normalized sum of one-hot pixel labels over the
view-pixel pairs the splat contributes to. Rendering a view accumulates
weight-scaled splat distributions per pixel and takes the argmax.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masks import PanopticMap


@dataclass(frozen=True)
class SplatWeightTable:
    """Sparse (splat, view, pixel, weight) records of alpha-blend contributions.

    Pixel indices are flat row-major indices into an H x W view.
    """

    num_splats: int
    num_views: int
    height: int
    width: int
    splat_ids: np.ndarray
    views: np.ndarray
    pixels: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        sid = np.asarray(self.splat_ids, dtype=np.int64).ravel()
        view = np.asarray(self.views, dtype=np.int64).ravel()
        pix = np.asarray(self.pixels, dtype=np.int64).ravel()
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        n = sid.shape[0]
        if not (view.shape[0] == pix.shape[0] == w.shape[0] == n):
            raise ValueError("record columns must have equal length")
        if n:
            if sid.min() < 0 or sid.max() >= self.num_splats:
                raise ValueError("splat ID out of range")
            if view.min() < 0 or view.max() >= self.num_views:
                raise ValueError("view index out of range")
            if pix.min() < 0 or pix.max() >= self.height * self.width:
                raise ValueError("pixel index out of range")
            if w.min() < 0.0:
                raise ValueError("weights must be nonnegative")
            triples = np.stack([sid, view, pix], axis=1)
            if np.unique(triples, axis=0).shape[0] != n:
                raise ValueError("(splat, view, pixel) triples must be unique")
        object.__setattr__(self, "splat_ids", sid)
        object.__setattr__(self, "views", view)
        object.__setattr__(self, "pixels", pix)
        object.__setattr__(self, "weights", w)

    @property
    def num_records(self) -> int:
        return self.splat_ids.shape[0]


@dataclass(frozen=True)
class SplatLabelField:
    """Per-splat label distributions; rows of observed splats sum to one."""

    distributions: np.ndarray  # (G, L + 1), column 0 = void
    observed: np.ndarray  # (G,) bool

    def __post_init__(self):
        dist = np.asarray(self.distributions, dtype=np.float64)
        obs = np.asarray(self.observed, dtype=bool).ravel()
        if dist.ndim != 2 or dist.shape[0] != obs.shape[0]:
            raise ValueError("distributions and observed flags disagree on G")
        sums = dist.sum(axis=1)
        if obs.any() and np.abs(sums[obs] - 1.0).max() > 1e-6:
            raise ValueError("observed splat distributions must sum to 1")
        if (~obs).any() and np.abs(sums[~obs]).max() > 0.0:
            raise ValueError("unobserved splat rows must be all-zero")
        object.__setattr__(self, "distributions", dist)
        object.__setattr__(self, "observed", obs)

    @property
    def num_labels(self) -> int:
        return self.distributions.shape[1] - 1


def uplift_labels(labels: PanopticMap, weights: SplatWeightTable) -> SplatLabelField:
    """Accumulate one-hot instance labels into per-splat distributions.

    g_i = sum over the splat's view-pixel support of (w / Z_w) * onehot(label),
    with Z_w the splat's total weight. Splats with empty support or zero total
    weight are flagged unobserved and left all-zero.
    """
    if (labels.num_views, labels.height, labels.width) != (
        weights.num_views,
        weights.height,
        weights.width,
    ):
        raise ValueError("label map and weight table disagree on (N, H, W)")
    num_labels = int(labels.instance_ids.max(initial=0))
    if labels.instance_to_class:
        num_labels = max(num_labels, max(labels.instance_to_class))
    flat = labels.instance_ids.reshape(labels.num_views, -1)
    record_labels = flat[weights.views, weights.pixels]

    dist = np.zeros((weights.num_splats, num_labels + 1), dtype=np.float64)
    np.add.at(dist, (weights.splat_ids, record_labels), weights.weights)
    totals = dist.sum(axis=1)
    observed = totals > 0.0
    dist[observed] /= totals[observed, None]
    dist[~observed] = 0.0
    return SplatLabelField(dist, observed)


def render_labels(
    field: SplatLabelField, weights: SplatWeightTable, view: int
) -> np.ndarray:
    """Render the instance-label map of one view from splat distributions.

    Per pixel, accumulates weight * distribution over the contributing splats
    and returns the argmax label (ties toward the lower label). Pixels with no
    accumulated mass, or dominated by the void column, stay void.
    """
    if not 0 <= view < weights.num_views:
        raise ValueError(f"unknown view {view}")
    sel = weights.views == view
    acc = np.zeros((weights.height * weights.width, field.num_labels + 1))
    np.add.at(
        acc,
        weights.pixels[sel],
        weights.weights[sel, None] * field.distributions[weights.splat_ids[sel]],
    )
    out = np.argmax(acc, axis=1)
    out[acc.sum(axis=1) <= 0.0] = 0
    return out.reshape(weights.height, weights.width).astype(np.int32)
