"""Log-domain accumulation helpers.

All partition-style sums in this package live in log space, with
``float("-inf")`` as the explicit "weight zero" sentinel.  Reductions use a
fixed pairwise tree so that the result does not depend on how the terms were
partitioned across workers.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

NEG_INF = float("-inf")


def log_add(a: float, b: float) -> float:
    """log(e^a + e^b), tolerating -inf on either side."""
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def logsumexp(values: Sequence[float]) -> float:
    """log-sum-exp via a fixed-shape pairwise reduction tree.

    The tree depends only on len(values), so splitting the input into
    contiguous chunks, reducing each and merging gives bit-identical results
    as long as the chunk boundaries follow the same tree.
    """
    vals = list(values)
    if not vals:
        return NEG_INF
    while len(vals) > 1:
        nxt = []
        for i in range(0, len(vals) - 1, 2):
            nxt.append(log_add(vals[i], vals[i + 1]))
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def logsumexp_stream(values: Iterable[float]) -> float:
    """Sequential left fold; used where the term order is itself canonical."""
    acc = NEG_INF
    for v in values:
        acc = log_add(acc, v)
    return acc
