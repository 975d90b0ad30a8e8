"""Constant-time sampling from a fixed discrete distribution (Vose's alias method)."""

from __future__ import annotations

import numpy as np


class AliasTable:
    """Alias table for weights ``p``; one uniform in [0, 1) yields one draw.

    The integer part of ``u * k`` picks a column, the fractional part decides
    between the column and its alias.
    """

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        if p.ndim != 1 or len(p) == 0:
            raise ValueError("need a non-empty 1-d weight vector")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("weights must be finite and non-negative")
        k = len(p)
        scaled = p * (k / p.sum())
        prob = np.ones(k)
        alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large[-1]
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = scaled[g] + scaled[s] - 1.0
            if scaled[g] < 1.0:
                large.pop()
                small.append(g)
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias

    def __len__(self):
        return len(self.prob)

    def sample(self, u: float) -> int:
        k = len(self.prob)
        scaled = u * k
        i = min(int(scaled), k - 1)
        return i if scaled - i < self.prob[i] else int(self.alias[i])

    def sample_many(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        k = len(self.prob)
        scaled = u * k
        i = np.minimum(scaled.astype(np.int64), k - 1)
        return np.where(scaled - i < self.prob[i], i, self.alias[i])

    def probabilities(self) -> np.ndarray:
        """The distribution the table encodes, reconstructed from its columns."""
        k = len(self.prob)
        out = self.prob / k
        np.add.at(out, self.alias, (1.0 - self.prob) / k)
        return out
