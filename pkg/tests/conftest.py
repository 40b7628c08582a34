import numpy as np
import pytest

from fairpriv.core import GroupClassCounter, LabeledExample, SeededRng


@pytest.fixture
def rng():
    return SeededRng(1234)


@pytest.fixture
def counter_2x2():
    """A small populated counter: groups {0,1}, classes {0,1}."""
    c = GroupClassCounter(num_groups=2, num_classes=2)
    for z, k, n in [(0, 0, 12), (0, 1, 8), (1, 0, 6), (1, 1, 14)]:
        for _ in range(n):
            c.increment(z, k)
    return c


def make_examples(n, num_groups=2, num_classes=2, d=4, seed=0, public_frac=0.0):
    """Deterministic toy example list for gate and preprocessing tests."""
    r = np.random.default_rng(seed)
    out = []
    for i in range(n):
        out.append(
            LabeledExample(
                features=r.standard_normal(d),
                group=int(r.integers(num_groups)),
                label=int(r.integers(num_classes)),
                is_public=bool(r.random() < public_frac),
            )
        )
    return out


@pytest.fixture
def examples():
    return make_examples(60, seed=3)
