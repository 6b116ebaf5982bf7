"""Independent reference computations used by the tests."""

import itertools

import numpy as np

GRID_STEP = 0.05
GRID = np.arange(-40, 41) * GRID_STEP  # [-2, 2]


def grid_search_min(ratings: np.ndarray, stop_at_zero: bool = True) -> float:
    """Minimum loss over every parameter setting on the [-2, 2] grid.

    ``ratings`` is a dense users x notes matrix with no regularization. Note
    parameters are enumerated outright. For user parameters the grid over
    f_u is enumerated and i_u is set to the grid point nearest the 1-D
    least-squares optimum, which is exactly the best grid value because the
    loss is a convex parabola in i_u. Users are independent given the note
    parameters. Since loss >= 0, the search may stop once it finds 0.
    """
    ratings = np.asarray(ratings, dtype=np.float64)
    U, N = ratings.shape
    note_icpts = np.array(list(itertools.product(GRID, repeat=N)))  # (M, N)
    best = np.inf
    for fn in itertools.product(GRID, repeat=N):
        fn = np.array(fn)
        total = np.zeros(len(note_icpts))
        for u in range(U):
            # c[m, k, n] = r_un - i_n - f_u * f_n for note intercepts m and user factor k
            c = ratings[u][None, None, :] - note_icpts[:, None, :] - GRID[None, :, None] * fn[None, None, :]
            iu = np.clip(np.round(c.mean(axis=2) / GRID_STEP), -40, 40) * GRID_STEP
            per_user = ((iu[:, :, None] - c) ** 2).sum(axis=2).min(axis=1)
            total += per_user
        best = min(best, float(total.min()))
        if stop_at_zero and best <= 1e-20:
            return best
    return best
