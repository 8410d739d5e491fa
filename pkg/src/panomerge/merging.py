"""Turn soft multi-view mask proposals into a panoptic label map.

Two strategies are provided: globally optimal proposal selection via the
selection QUBO, and the conventional per-pixel voting scheme used by
MaskFormer-style inference. Both assign instance IDs by ascending surviving
query index, so IDs are consistent across views by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .masks import ClassTable, PanopticMap, SoftMaskSet
from .qubo import (
    DEFAULT_PENALTY,
    AnnealConfig,
    build_qubo,
    solve_anneal,
    solve_exact,
)


@dataclass(frozen=True)
class MergeConfig:
    """Settings for QUBO-based merging."""

    penalty: float = DEFAULT_PENALTY
    void_threshold: float = 0.5
    confidence_prefilter: float | None = None
    solver: str = "anneal"  # anneal | exact
    anneal: AnnealConfig = field(default_factory=AnnealConfig)

    def __post_init__(self):
        if not 0.0 <= self.void_threshold <= 1.0:
            raise ValueError("void_threshold must lie in [0, 1]")
        if self.confidence_prefilter is not None and not (
            0.0 <= self.confidence_prefilter <= 1.0
        ):
            raise ValueError("confidence_prefilter must lie in [0, 1]")
        if not self.penalty > 1.0:
            raise ValueError("penalty must exceed 1")
        if self.solver not in ("anneal", "exact"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass(frozen=True)
class BaselineConfig:
    """Settings for the standard voting-based merging."""

    confidence_threshold: float = 0.5
    vote_support_threshold: float = 0.8
    per_view_independent: bool = True

    def __post_init__(self):
        for v in (self.confidence_threshold, self.vote_support_threshold):
            if not 0.0 <= v <= 1.0:
                raise ValueError("thresholds must lie in [0, 1]")


def _empty_map(masks: SoftMaskSet) -> PanopticMap:
    shape = (masks.num_views, masks.height, masks.width)
    return PanopticMap.from_instances(
        np.zeros(shape, dtype=np.int32), {}, masks.class_table
    )


def _assemble(
    masks: SoftMaskSet, instance_ids: np.ndarray, queries: list[int]
) -> PanopticMap:
    """Map instance k (1-based over `queries`) to the argmax class of its query."""
    instance_to_class = {
        k + 1: int(np.argmax(masks.class_probs[q])) for k, q in enumerate(queries)
    }
    present = set(np.unique(instance_ids).tolist()) - {0}
    instance_to_class = {i: c for i, c in instance_to_class.items() if i in present}
    return PanopticMap.from_instances(
        instance_ids.astype(np.int32), instance_to_class, masks.class_table
    )


def merge_qubo(masks: SoftMaskSet, cfg: MergeConfig | None = None) -> PanopticMap:
    """QUBO merging: select a globally consistent subset of proposals, then
    label each pixel with the selected proposal of highest soft value.

    Pixels whose winning soft value falls below the void threshold stay void.
    Selected queries become instance IDs 1..k in ascending query order, shared
    across all views.
    """
    cfg = cfg or MergeConfig()
    keep = np.arange(masks.num_queries)
    if cfg.confidence_prefilter is not None:
        conf = masks.class_probs.max(axis=1)
        keep = keep[conf >= cfg.confidence_prefilter]
        if keep.size == 0:
            warnings.warn("confidence prefilter removed every query; output is void")
            return _empty_map(masks)

    sub = SoftMaskSet(masks.values[keep], masks.class_probs[keep], masks.class_table)
    instance = build_qubo(sub, cfg.penalty)
    if cfg.solver == "exact":
        assignment = solve_exact(instance)
    else:
        assignment = solve_anneal(instance, cfg.anneal)
    selected = keep[assignment.selected()]
    if selected.size == 0:
        warnings.warn("QUBO selected no proposals; output is void")
        return _empty_map(masks)

    vals = masks.values[selected]  # (k, N, H, W)
    winner = np.argmax(vals, axis=0)
    win_val = np.take_along_axis(vals, winner[None], axis=0)[0]
    instance_ids = np.where(win_val >= cfg.void_threshold, winner + 1, 0)
    return _assemble(masks, instance_ids, selected.tolist())


def merge_baseline(
    masks: SoftMaskSet, cfg: BaselineConfig | None = None
) -> PanopticMap:
    """Standard MaskFormer-style merging.

    Low-confidence queries are filtered out; each pixel votes for the query
    maximizing class confidence times soft mask value (void if the winner's
    mask value is below 0.5); queries lacking sufficient vote support against
    their own thresholded mask area are dropped and their pixels re-voided.
    """
    cfg = cfg or BaselineConfig()
    conf = masks.class_probs.max(axis=1)
    keep = np.flatnonzero(conf >= cfg.confidence_threshold)
    if keep.size == 0:
        return _empty_map(masks)

    vals = masks.values[keep]  # (k, N, H, W)
    scores = conf[keep][:, None, None, None] * vals
    winner = np.argmax(scores, axis=0)  # (N, H, W)
    win_mask_val = np.take_along_axis(vals, winner[None], axis=0)[0]
    labeled = win_mask_val >= 0.5

    num_views = masks.num_views
    view_groups = (
        [[v] for v in range(num_views)] if cfg.per_view_independent else [list(range(num_views))]
    )
    for views in view_groups:
        for k in range(keep.size):
            thresh = vals[k, views] >= 0.5
            won = (winner[views] == k) & labeled[views]
            area = int(thresh.sum())
            support = int(won.sum())
            if area == 0 or support < cfg.vote_support_threshold * area:
                labeled[views] &= ~(winner[views] == k)

    instance_ids = np.where(labeled, winner + 1, 0)
    return _assemble(masks, instance_ids, keep.tolist())
