"""Partition sums, two-sided pressure brackets and periodic-orbit sums.

The growth rate of the partition sums is always reported as an interval:
sub-additivity gives the upper bound (log Z_n + C) / n for every n, and the
measured connector inequality gives the matching lower bound through
C_1 = D / (e^{C p} K (p + 1)) with K = max(1, Z_1^p).  Both are rigorous for
the truncation whenever the constants are (they are exact for locally
constant weights at sufficient estimator scale).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .logsum import NEG_INF, logsumexp
from .potentials import (ConditionEstimate, WeightSystem, estimate_c2,
                         subadditivity_defect, z1)
from .shifts import (BudgetExceededError, ShiftError, ShiftSpace, WORD_BUDGET,
                     Word, count_words, default_ladder, iter_words,
                     periodic_words)

THREADS_ENV = "THERMOSHIFT_THREADS"


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _iter_words_from(shift: ShiftSpace, first: int, n: int, cover_level):
    state = shift.initial_state(first, cover_level)
    if state is None:
        return
    if n == 1:
        yield (first,)
        return
    word = [first] + [0] * (n - 1)

    def rec(depth, st):
        if depth == n:
            yield tuple(word)
            return
        for b in shift.symbols(cover_level):
            st2 = shift.step_state(st, b, cover_level)
            if st2 is not None:
                word[depth] = b
                yield from rec(depth + 1, st2)

    yield from rec(1, state)


def _enumerated_log_partition(ws: WeightSystem, shift: ShiftSpace, n: int,
                              cover_level) -> float:
    """First-symbol partitioned fold with a fixed reduction tree.

    The per-partition values and the merge order do not depend on the worker
    count, so results are bit-stable under THERMOSHIFT_THREADS.
    """
    total = count_words(shift, n, cover_level)
    if total > WORD_BUDGET:
        raise BudgetExceededError(
            f"B_{n} has {total} words; budget is {WORD_BUDGET}")
    firsts = list(shift.symbols(cover_level))

    def partial(first: int) -> float:
        return logsumexp([ws.eval(w)
                          for w in _iter_words_from(shift, first, n, cover_level)])

    workers = _thread_count()
    if workers > 1 and len(firsts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(partial, firsts))
    else:
        partials = [partial(b) for b in firsts]
    return logsumexp(partials)


def log_partition(ws: WeightSystem, shift: ShiftSpace, n: int,
                  level: Optional[int] = None) -> float:
    """log Z_n: log of the summed cylinder-sup weights over B_n.

    Weight systems that factorize along the graph supply an exact transfer
    recursion; everything else is folded over the lexicographic enumeration.
    ``level`` indexes the shift's ladder (cover truncation).
    """
    if n < 1:
        raise ShiftError("n must be >= 1")
    from .shifts import _resolve_level
    cover_level = _resolve_level(shift, level)
    fast = ws.transfer_log_partition(shift, n, cover_level)
    if fast is not None:
        return fast
    return _enumerated_log_partition(ws, shift, n, cover_level)


def pressure_bracket(ws: WeightSystem, shift: ShiftSpace, n: int, C: float,
                     c1_inputs, level: Optional[int] = None):
    """Per-n two-sided bounds (lower_n, upper_n) on the truncation pressure.

    ``c1_inputs`` is (D, p, Z1_partial) from the condition estimators; a
    missing or nonpositive D withdraws the lower bound but keeps the upper.
    """
    log_z = log_partition(ws, shift, n, level=level)
    if log_z == NEG_INF:
        return (NEG_INF, NEG_INF)
    upper = (log_z + C) / n
    D, p, z1_partial = c1_inputs
    if D is None or D <= 0.0:
        return (None, upper)
    K = max(1.0, z1_partial ** p)
    c1 = D / (math.exp(C * p) * K * (p + 1))
    lower = (log_z + math.log(c1)) / n
    return (lower, upper)


def gurevich_log_sum(ws: WeightSystem, shift: ShiftSpace, n: int, a: int) -> float:
    """log Z_n(., a): weights of the length-n cycle words through symbol a.

    Cycle words are weighed by eval, which equals the value of the n-th
    potential at the periodic point exactly when the weight system is
    constant on depth-n cylinders (declared_M == 1); otherwise the value
    carries a Bowen slack of up to log M.
    """
    if n < 1:
        raise ShiftError("n must be >= 1")
    fast = ws.transfer_log_gurevich(shift, n, a)
    if fast is not None:
        return fast
    cycles = periodic_words(shift, n, a)
    if not cycles:
        return NEG_INF
    return logsumexp([ws.eval(w) for w in cycles])


def gurevich_is_exact(ws: WeightSystem) -> bool:
    return ws.declared_M == 1.0


@dataclass
class CompareRow:
    n: int
    log_z_rate: float                  # (1/n) log Z_n
    anchor_rates: dict                 # a -> (1/n) log Z_n(., a)
    discrepancies: dict                # a -> |difference|
    max_discrepancy: float


@dataclass
class CompareReport:
    rows: tuple
    anchors: tuple
    tolerance: float
    monotone_from: int
    monotone: bool
    final_discrepancy: float
    passed: bool


def pressure_compare(ws: WeightSystem, shift: ShiftSpace, n_range,
                     anchors: Sequence[int], tolerance: float = 0.1,
                     monotone_from: int = 8) -> CompareReport:
    """Anchor-wise gap between partition and periodic-orbit growth rates.

    Passes when the worst gap is nonincreasing from ``monotone_from`` on and
    the final gap is within tolerance.
    """
    rows = []
    for n in n_range:
        lz = log_partition(ws, shift, n) / n
        rates = {}
        disc = {}
        for a in anchors:
            la = gurevich_log_sum(ws, shift, n, a)
            rates[a] = la / n if la != NEG_INF else NEG_INF
            disc[a] = abs(rates[a] - lz) if la != NEG_INF else math.inf
        rows.append(CompareRow(n, lz, rates, disc, max(disc.values())))
    mono = True
    prev = None
    for row in rows:
        if row.n < monotone_from:
            continue
        if prev is not None and row.max_discrepancy > prev + 1e-9:
            mono = False
        prev = row.max_discrepancy
    final = rows[-1].max_discrepancy if rows else math.inf
    return CompareReport(tuple(rows), tuple(anchors), tolerance, monotone_from,
                         mono, final, mono and final <= tolerance)


# ----------------------------------------------------------------------
# approximation ladder

def _strongly_connected(shift: ShiftSpace) -> bool:
    k = shift.alphabet_size
    if k == 1:
        return (1, 1) in shift.edges

    def reach(start, nbrs):
        seen = {start}
        stack = [start]
        while stack:
            s = stack.pop()
            for t in nbrs(s):
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return seen

    return (len(reach(1, shift.out_neighbors)) == k
            and len(reach(1, shift.in_neighbors)) == k)


def restrict_shift(shift: ShiftSpace, cover_level: int) -> ShiftSpace:
    """Induced sub-shift on cover symbols 1..cover_level."""
    edges = {(i, j) for (i, j) in shift.edges
             if i <= cover_level and j <= cover_level}
    fm = shift.factor_map[:cover_level] if shift.factor_map else None
    return ShiftSpace(cover_level, edges, factor_map=fm)


@dataclass
class LadderLevel:
    cover_level: int
    estimate: Optional[float]          # (1/n_fixed) log Z_{n_fixed}
    lower: Optional[float]
    upper: Optional[float]
    skipped: bool
    note: str


def approximation_ladder(ws: WeightSystem, shift: ShiftSpace, n_fixed: int,
                         n_max_conditions: int = 2, p_max: int = 3) -> list:
    """Pressure estimates over the increasing truncation levels.

    Levels whose induced cover subgraph is not irreducible are skipped with a
    note.  Per level, the bracket uses constants re-estimated on that level.
    """
    levels = shift.ladder or default_ladder(shift.alphabet_size)
    out = []
    for lv in levels:
        try:
            sub = restrict_shift(shift, lv)
        except ShiftError as exc:
            out.append(LadderLevel(lv, None, None, None, True,
                                   f"degenerate level: {exc}"))
            continue
        if not _strongly_connected(sub.cover() if sub.is_sofic else sub):
            out.append(LadderLevel(lv, None, None, None, True,
                                   "reducible level"))
            continue
        c_hat, _ = subadditivity_defect(ws, sub, max(2, n_max_conditions))
        C = ws.declared_C if ws.declared_C is not None else c_hat
        est = estimate_c2(ws, sub, n_max=n_max_conditions, p_max=p_max)
        z1_val = z1(ws, sub).value
        d = est.D_hat if est.ok else None
        lower, upper = pressure_bracket(ws, sub, n_fixed, C,
                                        (d, est.p_hat, z1_val))
        log_z = log_partition(ws, sub, n_fixed)
        estimate = log_z / n_fixed if log_z != NEG_INF else NEG_INF
        out.append(LadderLevel(lv, estimate, lower, upper, False, ""))
    if all(level.skipped for level in out):
        raise ShiftError("every ladder level is reducible or degenerate")
    return out


# ----------------------------------------------------------------------
# full report

@dataclass
class PerN:
    n: int
    log_z: float
    lower: Optional[float]
    upper: Optional[float]


@dataclass
class PressureReport:
    per_n: tuple
    gurevich_per_n: tuple              # (n, a, log Z_n(., a))
    ladder: tuple                      # LadderLevel rows
    P_best: tuple                      # (lower, upper); best rigorous interval
    status: str                        # finite | suspected-infinite | suspected-minus-infinite
    constants: dict
    gurevich_exact: bool
    notes: tuple = ()


def _intersect_brackets(per_n) -> tuple:
    lowers = [r.lower for r in per_n if r.lower is not None and r.lower != NEG_INF]
    uppers = [r.upper for r in per_n if r.upper is not None and r.upper != NEG_INF]
    lo = max(lowers) if lowers else None
    hi = min(uppers) if uppers else None
    return (lo, hi)


def pressure_report(ws: WeightSystem, shift: ShiftSpace, n_max: int,
                    anchors: Sequence[int] = (1,),
                    n_max_conditions: int = 2, p_max: int = 3,
                    with_ladder: bool = True,
                    ladder_n_fixed: Optional[int] = None) -> PressureReport:
    """Assemble the full two-sided pressure picture for one truncation."""
    notes = []
    c_hat, c_lower = subadditivity_defect(ws, shift, max(2, n_max_conditions))
    C = ws.declared_C if ws.declared_C is not None else c_hat
    est = estimate_c2(ws, shift, n_max=n_max_conditions, p_max=p_max)
    z1_report = z1(ws, shift)
    d = est.D_hat if est.ok else None
    if not est.ok:
        notes.append("connector inequality failed; lower bounds unavailable")

    per_n = []
    for n in range(1, n_max + 1):
        lower, upper = pressure_bracket(ws, shift, n, C, (d, est.p_hat,
                                                          z1_report.value))
        per_n.append(PerN(n, log_partition(ws, shift, n), lower, upper))

    gur = []
    for n in range(1, n_max + 1):
        for a in anchors:
            gur.append((n, a, gurevich_log_sum(ws, shift, n, a)))

    ladder_rows = ()
    if with_ladder:
        ladder_rows = tuple(approximation_ladder(
            ws, shift, ladder_n_fixed or n_max,
            n_max_conditions=n_max_conditions, p_max=p_max))

    p_best = _intersect_brackets(per_n)
    if (p_best[0] is not None and p_best[1] is not None
            and p_best[0] > p_best[1] + 1e-12):
        notes.append("per-n brackets are inconsistent; estimated constants "
                     "do not extend to the computed range")

    final_log_z = per_n[-1].log_z if per_n else NEG_INF
    active = [l for l in ladder_rows if not l.skipped]
    growth = (len(active) >= 2 and active[-1].estimate is not None
              and active[-2].estimate is not None
              and active[-1].estimate - active[-2].estimate > 1e-2)
    if final_log_z == NEG_INF:
        status = "suspected-minus-infinite"
    elif z1_report.diverging and growth:
        status = "suspected-infinite"
    else:
        status = "finite"

    constants = {
        "C_hat": c_hat, "C_lower_hat": c_lower, "C_used": C,
        "D_hat": est.D_hat if est.ok else None,
        "p_hat": est.p_hat, "W_hat": [list(w) for w in est.W_hat],
        "Z1_partial": z1_report.value, "Z1_diverging": z1_report.diverging,
    }
    return PressureReport(tuple(per_n), tuple(gur), ladder_rows, p_best,
                          status, constants, gurevich_is_exact(ws),
                          tuple(notes))
