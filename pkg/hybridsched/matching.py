"""
Maximum-weight bipartite matching over square nonnegative weight matrices.

The solver is scipy's exact assignment routine; a factorial brute force
is kept as an oracle for small n.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .utils import BRUTE_FORCE_MAX_N, EPS, ArgumentError, as_square_matrix


@dataclass(frozen=True)
class Matching:
    """A set of (input, output) circuit connections, one crossbar state."""

    n: int
    pairs: tuple

    @classmethod
    def from_pairs(cls, n, pairs):
        return cls(n, tuple(sorted((int(i), int(j)) for i, j in pairs)))

    @property
    def inputs(self):
        return np.fromiter((i for i, _ in self.pairs), dtype=int, count=len(self.pairs))

    @property
    def outputs(self):
        return np.fromiter((j for _, j in self.pairs), dtype=int, count=len(self.pairs))

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def is_legal(self):
        """Each input and each output appears at most once, all in range."""
        ins = [i for i, _ in self.pairs]
        outs = [j for _, j in self.pairs]
        in_range = all(0 <= p < self.n for p in ins + outs)
        return in_range and len(set(ins)) == len(ins) and len(set(outs)) == len(outs)

    def weight(self, weights):
        weights = np.asarray(weights, dtype=float)
        if not self.pairs:
            return 0.0
        return float(weights[self.inputs, self.outputs].sum())

    def to_matrix(self):
        matrix = np.zeros((self.n, self.n), dtype=int)
        for i, j in self.pairs:
            matrix[i, j] = 1
        return matrix

    def to_list(self):
        return [[i, j] for i, j in self.pairs]


def max_weight_matching(weights):
    """
    Return a full matching maximizing the total weight.

    Among equal-weight optima the lexicographically smallest sorted pair
    list wins, so the result is unchanged when every weight is scaled by
    the same positive factor.
    """
    weights = as_square_matrix(weights, "weights")
    n = weights.shape[0]
    if n == 0:
        return Matching(0, ())
    _, cols = linear_sum_assignment(weights, maximize=True)
    cols = _lexicographic_optimum(weights, cols)
    return Matching(n, tuple(enumerate(cols.tolist())))


def _tight_edges(weights, cols):
    """
    Edges that belong to at least one optimal assignment's support.

    Builds dual prices v for the columns by longest paths over the exchange
    graph of the optimal assignment cols, then u_i = w(i, cols[i]) - v(cols[i]).
    Every optimal assignment uses only edges with u_i + v_j == w_ij, and
    every perfect matching on those edges is optimal.
    """
    n = weights.shape[0]
    tol = EPS * float(weights.max())
    owner = np.empty(n, dtype=int)
    owner[cols] = np.arange(n)
    held = weights[owner, np.arange(n)]
    # gain[k, j]: what the owner of column k earns by moving to column j
    gain = weights[owner, :] - held[:, None]
    prices = np.zeros(n)
    for _ in range(n + 1):
        reach = (prices[:, None] + gain).max(axis=0)
        if not np.any(reach > prices + tol):
            break
        prices = np.maximum(prices, reach)
    row_prices = weights[np.arange(n), cols] - prices[cols]
    return row_prices[:, None] + prices[None, :] - weights <= tol


def _paths_to(tight, cols, open_rows, target):
    """
    Alternating paths ending at column target.

    via[r] is the column open row r moves to on its way toward target, -1
    when r cannot reach it.
    """
    n = len(cols)
    via = np.full(n, -1)
    frontier = np.zeros(n, dtype=bool)
    frontier[target] = True
    while True:
        columns = np.flatnonzero(frontier)
        hits = tight[:, columns]
        new = open_rows & (via < 0) & hits.any(axis=1)
        if not new.any():
            return via
        via[new] = columns[hits[new].argmax(axis=1)]
        frontier[:] = False
        frontier[cols[new]] = True


def _lexicographic_optimum(weights, cols):
    """
    Rewrite the optimal assignment cols into the lexicographically smallest one.

    Row by row, take the lowest tight column that still leaves a perfect
    matching on the tight edges of the rows below, rotating the current
    assignment along an alternating path to make room.
    """
    n = len(cols)
    cols = np.array(cols, dtype=int)
    owner = np.empty(n, dtype=int)
    owner[cols] = np.arange(n)
    tight = _tight_edges(weights, cols)
    open_rows = np.ones(n, dtype=bool)
    for i in range(n):
        open_rows[i] = False
        home = cols[i]
        options = np.flatnonzero(tight[i, :home])
        options = options[open_rows[owner[options]]]
        if options.size == 0:
            continue
        via = _paths_to(tight, cols, open_rows, home)
        for j in options:
            r = owner[j]
            if via[r] < 0:
                continue
            cols[i], owner[j] = j, i
            while True:
                c = via[r]
                after = owner[c]
                cols[r], owner[c] = c, r
                if c == home:
                    break
                r = after
            break
    return cols


def brute_force_mwm(weights):
    """
    Enumerate every permutation and keep the heaviest one.

    Permutations are visited in lexicographic order and only a strictly
    heavier one replaces the incumbent, so ties resolve to the
    lexicographically smallest pair list.
    """
    weights = as_square_matrix(weights, "weights")
    n = weights.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ArgumentError(f"brute force refused for n={n} > {BRUTE_FORCE_MAX_N}")
    rows = np.arange(n)
    best_perm, best_weight = tuple(range(n)), -1.0
    for perm in itertools.permutations(range(n)):
        total = float(weights[rows, list(perm)].sum()) if n else 0.0
        if total > best_weight:
            best_perm, best_weight = perm, total
    return Matching(n, tuple(zip(range(n), best_perm)))
