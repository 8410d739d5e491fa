"""Core containers for soft multi-view mask proposals and panoptic label maps.

All tensors are dense numpy arrays. Mask proposals are stored as a single
(m, N, H, W) float array of per-pixel probabilities in [0, 1]; label maps are
(N, H, W) integer arrays with instance ID 0 reserved for void.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VOID_INSTANCE = 0
DEFAULT_VOID_CLASS = 65535


@dataclass(frozen=True)
class ClassTable:
    """Semantic vocabulary: class names, thing/stuff flags, and the void class ID."""

    names: tuple[str, ...]
    is_thing: tuple[bool, ...]
    void_class: int = DEFAULT_VOID_CLASS

    def __post_init__(self):
        if len(self.names) < 1:
            raise ValueError("class table must contain at least one class")
        if len(self.is_thing) != len(self.names):
            raise ValueError("is_thing length must match number of class names")
        if 0 <= self.void_class < len(self.names):
            raise ValueError("void class ID must not collide with a real class")
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "is_thing", tuple(bool(t) for t in self.is_thing))

    @property
    def num_classes(self) -> int:
        return len(self.names)

    def thing_ids(self) -> list[int]:
        return [i for i, t in enumerate(self.is_thing) if t]

    def stuff_ids(self) -> list[int]:
        return [i for i, t in enumerate(self.is_thing) if not t]


@dataclass(frozen=True)
class SoftMaskSet:
    """A set of m soft mask proposals over N views of H x W pixels.

    values:       (m, N, H, W) float64 array, entries in [0, 1].
    class_probs:  (m, C) float64 array of per-class scores (rows need not
                  sum to one; only the argmax is consumed downstream).
    """

    values: np.ndarray
    class_probs: np.ndarray
    class_table: ClassTable

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        probs = np.asarray(self.class_probs, dtype=np.float64)
        if values.ndim != 4:
            raise ValueError("mask values must have shape (m, N, H, W)")
        if min(values.shape) < 1:
            raise ValueError("m, N, H, W must all be >= 1")
        if values.min() < 0.0 or values.max() > 1.0:
            raise ValueError("mask values must lie in [0, 1]")
        if probs.ndim != 2 or probs.shape[0] != values.shape[0]:
            raise ValueError("class_probs must have exactly m rows")
        if probs.shape[1] != self.class_table.num_classes:
            raise ValueError("class_probs columns must match class table size")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "class_probs", probs)

    @property
    def num_queries(self) -> int:
        return self.values.shape[0]

    @property
    def num_views(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[2]

    @property
    def width(self) -> int:
        return self.values.shape[3]


@dataclass(frozen=True)
class PanopticMap:
    """Per-view instance and class ID maps with a shared instance->class table.

    Instance IDs are consistent across views: the same nonzero ID denotes
    the same object everywhere. Instance 0 is void.
    """

    instance_ids: np.ndarray
    class_ids: np.ndarray
    instance_to_class: dict[int, int]
    class_table: ClassTable = field(compare=False)

    def __post_init__(self):
        inst = np.asarray(self.instance_ids)
        cls = np.asarray(self.class_ids)
        if inst.ndim != 3 or cls.shape != inst.shape:
            raise ValueError("instance and class maps must share shape (N, H, W)")
        for iid in np.unique(inst):
            iid = int(iid)
            if iid == VOID_INSTANCE:
                continue
            if iid not in self.instance_to_class:
                raise ValueError(f"instance {iid} has no class assignment")
        # class map must agree with the instance->class mapping at every pixel
        expected = np.full(inst.shape, self.class_table.void_class, dtype=cls.dtype)
        for iid, cid in self.instance_to_class.items():
            expected[inst == iid] = cid
        if not np.array_equal(cls, expected):
            raise ValueError("class_ids disagree with instance_to_class")
        object.__setattr__(self, "instance_ids", inst)
        object.__setattr__(self, "class_ids", cls)
        object.__setattr__(self, "instance_to_class", dict(self.instance_to_class))

    @classmethod
    def from_instances(
        cls,
        instance_ids: np.ndarray,
        instance_to_class: dict[int, int],
        class_table: ClassTable,
    ) -> "PanopticMap":
        """Build a map from an instance-ID tensor, deriving the class map."""
        inst = np.asarray(instance_ids)
        class_ids = np.full(inst.shape, class_table.void_class, dtype=np.int32)
        for iid, cid in instance_to_class.items():
            class_ids[inst == iid] = cid
        return cls(inst, class_ids, dict(instance_to_class), class_table)

    @property
    def num_views(self) -> int:
        return self.instance_ids.shape[0]

    @property
    def height(self) -> int:
        return self.instance_ids.shape[1]

    @property
    def width(self) -> int:
        return self.instance_ids.shape[2]


def weighted_area(masks: SoftMaskSet, query: int) -> float:
    """Sum of a proposal's soft values over all views and pixels."""
    if not 0 <= query < masks.num_queries:
        raise IndexError(f"query {query} out of range for m={masks.num_queries}")
    return float(masks.values[query].sum())


def pairwise_overlap(masks: SoftMaskSet, i: int, j: int) -> float:
    """Fuzzy intersection area: sum over positions of min(M_i, M_j)."""
    m = masks.num_queries
    if not 0 <= i < m:
        raise IndexError(f"query {i} out of range for m={m}")
    if not 0 <= j < m:
        raise IndexError(f"query {j} out of range for m={m}")
    return float(np.minimum(masks.values[i], masks.values[j]).sum())
