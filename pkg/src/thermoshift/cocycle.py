"""Matrix-product weights, Lyapunov estimates and singular values.

The weight of a word is the log norm of the ordered product of the family
matrices, rightmost factor first: w = (i_1, ..., i_n) weighs
log || A_{i_n} ... A_{i_2} A_{i_1} ||.  Norms are sub-multiplicative, so the
weights are exactly sub-additive.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .logsum import NEG_INF
from .shifts import ShiftError, ShiftSpace, Word

#: factor count between norm renormalizations of a running product
RENORM_EVERY = 32


class MatrixFamily:
    """A finite list of d x d nonnegative matrices with a chosen norm."""

    NORMS = ("max-row-sum", "spectral")

    def __init__(self, matrices: Sequence, norm: str = "max-row-sum"):
        mats = [np.asarray(m, dtype=float) for m in matrices]
        if not mats:
            raise ShiftError("matrix family must be nonempty")
        d = mats[0].shape[0]
        for m in mats:
            if m.shape != (d, d):
                raise ShiftError("all matrices must be square of one dimension")
            if (m < 0).any():
                raise ShiftError("matrix entries must be nonnegative")
        if norm not in self.NORMS:
            raise ShiftError(f"norm must be one of {self.NORMS}")
        self.matrices = mats
        self.d = d
        self.norm = norm

    def _norm(self, m: np.ndarray) -> float:
        if self.norm == "max-row-sum":
            return float(np.abs(m).sum(axis=1).max())
        return float(np.linalg.norm(m, 2))

    def log_norm_product(self, word: Word) -> float:
        """log of the norm of the ordered product along the word.

        Renormalizes every RENORM_EVERY factors so overflow cannot occur; the
        running log is exact up to float rounding.
        """
        if not word:
            return 0.0
        for s in word:
            if not (1 <= s <= len(self.matrices)):
                raise ShiftError(f"symbol {s} has no matrix")
        prod = self.matrices[word[0] - 1]
        log_scale = 0.0
        for idx, s in enumerate(word[1:], start=1):
            prod = self.matrices[s - 1] @ prod
            if idx % RENORM_EVERY == 0:
                scale = prod.max()
                if scale == 0.0:
                    return NEG_INF
                prod = prod / scale
                log_scale += math.log(scale)
        n = self._norm(prod)
        if n == 0.0:
            return NEG_INF
        return log_scale + math.log(n)


def cocycle_weight(family: MatrixFamily, word: Word) -> float:
    return family.log_norm_product(tuple(word))


class MatrixCocycleWeights:
    """Weight-system view of a matrix family (see potentials.WeightSystem)."""

    kind = "matrix-cocycle"
    declared_C = 0.0   # sub-multiplicative norm
    declared_M = 1.0   # the weight depends on the first n symbols only
    depth = None

    def __init__(self, family: MatrixFamily):
        self.family = family

    def eval(self, word: Word) -> float:
        return self.family.log_norm_product(word)

    def transfer_log_partition(self, shift, n, cover_level=None):
        return None

    def transfer_log_gurevich(self, shift, n, a):
        return None

    def describe(self):
        return {"kind": self.kind, "d": self.family.d, "norm": self.family.norm,
                "declared_C": self.declared_C, "declared_M": self.declared_M}


def lyapunov_estimate(measure, family: MatrixFamily, n: int) -> float:
    """Measure-weighted growth rate (1/n) sum_w m([w]) log||A_w|| at level n.

    With increasing n the values form a sub-additive sequence whose trend,
    not any single entry, estimates the maximal Lyapunov exponent.
    """
    if n > measure.depth:
        raise ShiftError("n exceeds the measure depth")
    marg = measure.marginal(n)
    total = 0.0
    # share partial products along common prefixes of the sorted support
    support = sorted(marg.weights)
    prev: Word = ()
    cache = []  # cache[i] = (prod, log_scale) after word[:i+1]
    for word in support:
        mass = marg.weights[word]
        if mass == 0.0:
            continue
        shared = 0
        for a, b in zip(prev, word):
            if a != b:
                break
            shared += 1
        cache = cache[:shared]
        while len(cache) < len(word):
            i = len(cache)
            if i == 0:
                cache.append((family.matrices[word[0] - 1], 0.0))
            else:
                prod = family.matrices[word[i] - 1] @ cache[i - 1][0]
                log_scale = cache[i - 1][1]
                if i % RENORM_EVERY == 0:
                    sc = prod.max()
                    prod = prod / sc
                    log_scale += math.log(sc)
                cache.append((prod, log_scale))
        prod, log_scale = cache[-1]
        nrm = family._norm(prod)
        if nrm == 0.0:
            raise ShiftError(f"zero product on a cylinder of positive mass: {word}")
        total += mass * (log_scale + math.log(nrm))
        prev = word
    return total / n


def singular_values(matrix) -> tuple:
    """Nonincreasing singular values of a real 2x2 or 3x3 matrix.

    d == 2 uses the closed form from the trace and determinant of A^T A;
    d == 3 falls back to numpy's SVD.
    """
    a = np.asarray(matrix, dtype=float)
    if a.shape == (2, 2):
        g = a.T @ a
        t = g[0, 0] + g[1, 1]
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        disc = max(t * t - 4.0 * det, 0.0)
        root = math.sqrt(disc)
        lo = max((t - root) / 2.0, 0.0)
        hi = max((t + root) / 2.0, 0.0)
        return (math.sqrt(hi), math.sqrt(lo))
    if a.shape == (3, 3):
        s = np.linalg.svd(a, compute_uv=False)
        return tuple(float(x) for x in s)
    raise ShiftError("singular_values supports d in {2, 3}")
