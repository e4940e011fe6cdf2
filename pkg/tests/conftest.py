import numpy as np
import pytest

from bkmtomo import GkslModel

# Benchmark problem used throughout: a generic anisotropic model whose
# trajectory starts close to the pure-state boundary (|a0| ~ 0.939).
BENCH_E = np.array([1.0, -0.6, 0.4])
BENCH_D = np.array([0.2, 0.3, 0.1])
BENCH_A0 = np.array([0.815, -0.007, 0.466])


@pytest.fixture
def bench_model() -> GkslModel:
    return GkslModel(e=BENCH_E.copy(), d=BENCH_D.copy())


def random_mixed_state(rng, r_min=0.0, r_max=0.95) -> np.ndarray:
    """Uniform direction, radius uniform in [r_min, r_max]."""
    u = rng.normal(size=3)
    u /= np.linalg.norm(u)
    return u * rng.uniform(r_min, r_max)


def signed_permutations():
    """All 48 signed permutation matrices (orthogonal, axis-aligned)."""
    from itertools import permutations, product

    mats = []
    for perm in permutations(range(3)):
        for signs in product((1.0, -1.0), repeat=3):
            m = np.zeros((3, 3))
            for row, (col, s) in enumerate(zip(perm, signs)):
                m[row, col] = s
            mats.append(m)
    return mats
