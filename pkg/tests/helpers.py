import numpy as np

SEED = 20240917
N_PROPERTY = 1000


def interior_points(chart, n=N_PROPERTY, seed=SEED, margin=0.02, extent=4.0):
    """Uniform random points away from the chart's singular loci."""
    rng = np.random.default_rng(seed)
    cols = []
    for (lo, hi), periodic in zip(chart.domain, chart.periodic):
        lo = lo if np.isfinite(lo) else -extent
        hi = hi if np.isfinite(hi) else extent
        pad = 0.0 if periodic else margin * (hi - lo)
        cols.append(rng.uniform(lo + pad, hi - pad, n))
    return np.stack(cols, axis=-1)


def rel(a, b):
    return abs(a - b) / abs(b)
