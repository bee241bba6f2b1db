"""Synthetic wholesaler dataset (30 wholesalers x 9 substitutability features).

Regenerates the distributional recipe of the motor-vehicle-parts
wholesaler example: every feature is a concatenation of integer draws from
a few patterns, so the rows carry two to three latent groups.  The draws come
from this package's generator, so the numbers differ from any other
environment's; only the pattern structure is reproduced.
"""

from __future__ import annotations

import numpy as np

from marketdef.dataset import FeatureSpec, ProductFeatureMatrix, standardize
from marketdef.rng import as_seed

WHOLESALER_FEATURES = (
    "n_categories",
    "products_per_category",
    "n_brands",
    "n_models",
    "product_price_dev",
    "category_price_dev",
    "pct_non_parts",
    "pct_uncommon_transport",
    "pct_used",
)


def _ints(gen, lo, hi, size):
    # inclusive bounds, sampling with replacement
    return gen.integers(lo, hi + 1, size=size)


def _shuffle(gen, values):
    return gen.permutation(np.asarray(values))


def wholesaler_raw(rng=1) -> np.ndarray:
    """Unstandardized 30 x 9 integer-valued feature matrix."""
    g = as_seed(rng).generator()
    cols = [
        np.concatenate([_ints(g, 1, 50, 10), _ints(g, 100, 200, 15), _ints(g, 250, 300, 5)]),
        np.concatenate([_ints(g, 1, 10, 15), _ints(g, 20, 30, 15)]),
        np.concatenate([_ints(g, 10, 30, 20), _ints(g, 1, 10, 10)]),
        np.concatenate([_ints(g, 50, 100, 20), _ints(g, 1, 50, 10)]),
        _ints(g, 1, 300, 30),
        _ints(g, 1, 100, 30),
        np.concatenate([_ints(g, 30, 70, 20), _ints(g, 1, 100, 10)]),
    ]
    large = _shuffle(g, np.concatenate([np.zeros(5), _ints(g, 10, 30, 5)]))
    median = _shuffle(g, [0] * 6 + [100, 100, 20, 10])
    small = _shuffle(g, [0] * 6 + [100] * 4)
    cols.append(np.concatenate([large, median, small]))
    large_u = _shuffle(g, [0] * 8 + [3, 5])
    median_u = _shuffle(g, [0] * 7 + [3, 5, 8])
    small_u = _shuffle(g, np.concatenate([np.zeros(6), _ints(g, 1, 20, 4)]))
    cols.append(np.concatenate([large_u, median_u, small_u]))
    return np.column_stack(cols).astype(float)


def simulate_wholesalers(rng=1, standardized: bool = True) -> ProductFeatureMatrix:
    ids = [f"W{i + 1:02d}" for i in range(30)]
    m = ProductFeatureMatrix(ids, [FeatureSpec(f) for f in WHOLESALER_FEATURES],
                             wholesaler_raw(rng), False, "wholesaler")
    return standardize(m) if standardized else m
