import numpy as np
import pytest

from panomerge import ClassTable, SoftMaskSet


@pytest.fixture
def simple_table():
    return ClassTable(("chair", "bag", "wall"), (True, True, False))


def make_mask_set(values, class_probs=None, table=None):
    values = np.asarray(values, dtype=np.float64)
    m = values.shape[0]
    if table is None:
        table = ClassTable(("chair", "bag", "wall"), (True, True, False))
    if class_probs is None:
        class_probs = np.tile([0.9, 0.05, 0.05], (m, 1))
    return SoftMaskSet(values, np.asarray(class_probs, dtype=np.float64), table)


def random_mask_set(rng, m=3, n=2, h=4, w=4, table=None):
    return make_mask_set(rng.random((m, n, h, w)), table=table)
