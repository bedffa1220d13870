"""Cylinder weight systems and their regularity estimators.

A weight system assigns to every allowable word w the log of the supremum of
the n-th potential over the cylinder [w]; -inf marks cylinders where the
potential vanishes.  All built-in kinds are locally constant at the scale
they are evaluated, so the cylinder sup is exact.

The estimators measure, at a fixed truncation and word-length scale, the
sub/super-additivity defects, the quasi-multiplicativity constant D with its
connector set W, and the first-level sum Z_1.  They are estimates at scale,
never global proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .logsum import NEG_INF, log_add, logsumexp, logsumexp_stream
from .shifts import (EPSILON, ShiftError, ShiftSpace, Word, enumerate_words)


class WeightSystem:
    """Base class: deterministic map Word -> extended real, eval(()) == 0."""

    kind = "abstract"
    #: sub/almost-additivity constant, when known a priori
    declared_C: Optional[float] = None
    #: Bowen constant (1.0 means f_n is constant on depth-n cylinders)
    declared_M: Optional[float] = None
    depth: Optional[int] = None

    def eval(self, word: Word) -> float:
        raise NotImplementedError

    # optional exact fast paths; None means "not supported, enumerate"
    def transfer_log_partition(self, shift: ShiftSpace, n: int,
                               cover_level: Optional[int] = None) -> Optional[float]:
        return None

    def transfer_log_gurevich(self, shift: ShiftSpace, n: int, a: int) -> Optional[float]:
        return None

    def describe(self) -> dict:
        return {"kind": self.kind, "depth": self.depth,
                "declared_C": self.declared_C, "declared_M": self.declared_M}


def log_weight(ws: WeightSystem, word: Word, shift: Optional[ShiftSpace] = None) -> float:
    """Validated evaluation; raises on a non-allowable word when a shift is given."""
    word = tuple(word)
    if shift is not None:
        from .shifts import is_allowable
        if not is_allowable(shift, word):
            raise ShiftError(f"word {word} is not allowable")
    return ws.eval(word)


# ----------------------------------------------------------------------
# log-domain vector/matrix helpers for the transfer fast paths

def _log_matvec(mat, vec):
    """out[t] = logsumexp_s(vec[s] + mat[s][t]) without numpy, small k only."""
    k = len(vec)
    out = [NEG_INF] * k
    for s in range(k):
        vs = vec[s]
        if vs == NEG_INF:
            continue
        row = mat[s]
        for t in range(k):
            m = row[t]
            if m != NEG_INF:
                out[t] = log_add(out[t], vs + m)
    return out


def _edge_matrix(shift: ShiftSpace, value, cover_level=None):
    """Dense log-weight matrix over cover symbols; non-edges are -inf."""
    k = cover_level or shift.alphabet_size
    mat = [[NEG_INF] * k for _ in range(k)]
    for (i, j) in shift.edges:
        if i <= k and j <= k:
            mat[i - 1][j - 1] = value(i, j)
    return mat


# ----------------------------------------------------------------------
# built-in weight systems

def _parse_word_key(key) -> Word:
    if isinstance(key, (list, tuple)):
        return tuple(int(s) for s in key)
    key = str(key)
    if "," in key:
        return tuple(int(p) for p in key.split(","))
    return tuple(int(ch) for ch in key)


class AdditiveCylinderWeights(WeightSystem):
    """Products of a depth-d locally constant factor along the word.

    ``values`` maps each allowable window of length d to its log factor;
    eval(w) sums the |w| - d + 1 complete windows inside w (0 when |w| < d).
    Windows absent from the table weigh -inf.  For d == 1 this is an exactly
    additive Birkhoff sum; for d >= 2 it is almost-additive with constant
    C = (d-1) * max positive window value.
    """

    kind = "additive-cylinder"
    declared_M = 1.0

    def __init__(self, values: dict, depth: int = 1):
        if depth < 1:
            raise ShiftError("additive-cylinder depth must be >= 1")
        self.depth = int(depth)
        self.values = {_parse_word_key(k): float(v) for k, v in values.items()}
        for w in self.values:
            if len(w) != self.depth:
                raise ShiftError(
                    f"window {w} has length {len(w)}, expected depth {self.depth}")
        pos = max((v for v in self.values.values() if v > 0), default=0.0)
        self.declared_C = 0.0 if self.depth == 1 else (self.depth - 1) * pos

    def eval(self, word: Word) -> float:
        n, d = len(word), self.depth
        if n < d:
            return 0.0
        total = 0.0
        get = self.values.get
        for i in range(n - d + 1):
            v = get(word[i:i + d])
            if v is None:
                return NEG_INF
            total += v
        return total

    def transfer_log_partition(self, shift, n, cover_level=None):
        if shift.is_sofic or self.depth > 2:
            return None
        k = cover_level or shift.alphabet_size
        if self.depth == 1:
            init = [self.values.get((s,), NEG_INF) for s in range(1, k + 1)]
            mat = _edge_matrix(shift, lambda i, j: self.values.get((j,), NEG_INF),
                               cover_level)
        else:
            if n == 1:
                return math.log(k)
            init = [0.0] * k
            mat = _edge_matrix(shift, lambda i, j: self.values.get((i, j), NEG_INF),
                               cover_level)
        vec = init
        for _ in range(n - 1):
            vec = _log_matvec(mat, vec)
        return logsumexp(vec)

    def transfer_log_gurevich(self, shift, n, a):
        if shift.is_sofic or self.depth > 2:
            return None
        k = shift.alphabet_size
        if self.depth == 1:
            mat = _edge_matrix(shift, lambda i, j: self.values.get((j,), NEG_INF))
            vec = [NEG_INF] * k
            vec[a - 1] = 0.0
            for _ in range(n):
                vec = _log_matvec(mat, vec)
            return vec[a - 1]
        # depth 2: weight of the cycle word uses its |w| - 1 interior windows
        if n == 1:
            return 0.0 if (a, a) in shift.edges else NEG_INF
        mat = _edge_matrix(shift, lambda i, j: self.values.get((i, j), NEG_INF))
        vec = [NEG_INF] * k
        vec[a - 1] = 0.0
        for _ in range(n - 1):
            vec = _log_matvec(mat, vec)
        terms = [vec[t - 1] for t in range(1, k + 1)
                 if (t, a) in shift.edges and vec[t - 1] != NEG_INF]
        return logsumexp(terms) if terms else NEG_INF


def zero_weights() -> AdditiveCylinderWeights:
    """The zero potential (all weights 1); partition sums count words."""
    return _ZeroWeights()


class _ZeroWeights(AdditiveCylinderWeights):
    def __init__(self):
        super().__init__({}, depth=1)

    def eval(self, word):
        return 0.0

    def transfer_log_partition(self, shift, n, cover_level=None):
        from .shifts import count_words
        c = count_words(shift, n, cover_level)
        return math.log(c) if c else NEG_INF

    def transfer_log_gurevich(self, shift, n, a):
        if shift.is_sofic:
            return None
        k = shift.alphabet_size
        counts = {a: 1}
        for _ in range(n):
            nxt = {}
            for s, c in counts.items():
                for t in shift.out_neighbors(s):
                    nxt[t] = nxt.get(t, 0) + c
            counts = nxt
        c = counts.get(a, 0)
        return math.log(c) if c else NEG_INF


class TabulatedAlmostAdditiveWeights(WeightSystem):
    """Per-symbol factors modulated by a scalar length sequence.

    eval(w) = log c_{|w|} + sum_i log lambda_{w_i}, with c given in closed
    form ("one", "geometric:r", "power:s").  With an almost-additive {log c_n}
    the system is almost-additive with the same constant.
    """

    kind = "almost-additive-tabulated"
    declared_M = 1.0
    depth = 1

    def __init__(self, lam: Sequence[float], c_form: str = "one"):
        self.lam = tuple(float(x) for x in lam)
        if any(x <= 0 for x in self.lam):
            raise ShiftError("per-symbol factors must be positive")
        self.log_lam = tuple(math.log(x) for x in self.lam)
        self.c_form = c_form
        if c_form == "one":
            self._log_c = lambda n: 0.0
            self.declared_C = 0.0
        elif c_form.startswith("geometric:"):
            r = float(c_form.split(":", 1)[1])
            self._log_c = lambda n: n * math.log(r)
            self.declared_C = 0.0
        elif c_form.startswith("power:"):
            s = float(c_form.split(":", 1)[1])
            self._log_c = lambda n: s * math.log(n) if n else 0.0
            self.declared_C = abs(s) * math.log(2)
        else:
            raise ShiftError(f"unknown closed-form id {c_form!r}")

    def eval(self, word: Word) -> float:
        if not word:
            return 0.0
        try:
            body = sum(self.log_lam[s - 1] for s in word)
        except IndexError:
            raise ShiftError("symbol outside the tabulated factor range") from None
        return self._log_c(len(word)) + body

    def transfer_log_partition(self, shift, n, cover_level=None):
        if shift.is_sofic:
            return None
        k = cover_level or shift.alphabet_size
        if k > len(self.lam):
            return None
        init = [self.log_lam[s - 1] for s in range(1, k + 1)]
        mat = _edge_matrix(shift, lambda i, j: self.log_lam[j - 1], cover_level)
        vec = init
        for _ in range(n - 1):
            vec = _log_matvec(mat, vec)
        return self._log_c(n) + logsumexp(vec)

    def transfer_log_gurevich(self, shift, n, a):
        if shift.is_sofic or a > len(self.lam):
            return None
        k = shift.alphabet_size
        mat = _edge_matrix(shift, lambda i, j: self.log_lam[j - 1])
        vec = [NEG_INF] * k
        vec[a - 1] = 0.0
        for _ in range(n):
            vec = _log_matvec(mat, vec)
        v = vec[a - 1]
        return v if v == NEG_INF else self._log_c(n) + v


class ScaledWeights(WeightSystem):
    """Per-step exponential rescaling: eval(w) = inner(w) + c * |w|."""

    kind = "scaled"

    def __init__(self, inner: WeightSystem, per_step: float):
        self.inner = inner
        self.per_step = float(per_step)
        self.declared_C = inner.declared_C
        self.declared_M = inner.declared_M
        self.depth = inner.depth

    def eval(self, word: Word) -> float:
        v = self.inner.eval(word)
        return v if v == NEG_INF else v + self.per_step * len(word)

    def transfer_log_partition(self, shift, n, cover_level=None):
        v = self.inner.transfer_log_partition(shift, n, cover_level)
        return None if v is None else (v if v == NEG_INF else v + self.per_step * n)

    def transfer_log_gurevich(self, shift, n, a):
        v = self.inner.transfer_log_gurevich(shift, n, a)
        return None if v is None else (v if v == NEG_INF else v + self.per_step * n)


# matrix-cocycle and factor-induced systems are defined with their machinery
# and re-exported here for the JSON loader
def load_potential(spec: dict, shift: Optional[ShiftSpace] = None) -> WeightSystem:
    """Build a WeightSystem from the JSON spec-file dictionary.

    ``shift`` is required for the factor-induced kinds (preimage-count,
    pushforward), whose evaluation needs the cover and symbol map.
    """
    if not isinstance(spec, dict) or "type" not in spec:
        raise ShiftError("potential spec must be an object with a 'type'")
    t = spec["type"]
    if t == "zero":
        return zero_weights()
    if t == "additive-cylinder":
        ws = AdditiveCylinderWeights(spec["values"], depth=int(spec.get("depth", 1)))
        # user-declared regularity overrides (e.g. the eval is a cylinder sup
        # of something only M-close to locally constant)
        if "declared_M" in spec:
            ws.declared_M = float(spec["declared_M"])
        if "declared_C" in spec:
            ws.declared_C = float(spec["declared_C"])
        return ws
    if t == "tabulated-aa":
        return TabulatedAlmostAdditiveWeights(spec["lambda"], spec.get("c", "one"))
    if t == "scaled":
        inner = load_potential(spec["inner"], shift)
        return ScaledWeights(inner, spec["per-step"])
    if t == "matrix-cocycle":
        from .cocycle import MatrixFamily, MatrixCocycleWeights
        fam = MatrixFamily(spec["matrices"], norm=spec.get("norm", "max-row-sum"))
        return MatrixCocycleWeights(fam)
    if t == "preimage-count":
        from .factor import FactorMap, preimage_count_weight
        if shift is None or not shift.is_sofic:
            raise ShiftError("preimage-count needs a shift with a factor_map")
        return preimage_count_weight(FactorMap.from_shift(shift))
    if t == "pushforward":
        from .factor import FactorMap, pushforward_weight
        if shift is None or not shift.is_sofic:
            raise ShiftError("pushforward needs a shift with a factor_map")
        inner = load_potential(spec["inner"], shift.cover())
        return pushforward_weight(FactorMap.from_shift(shift), inner)
    raise ShiftError(f"unknown potential type {t!r}")


# ----------------------------------------------------------------------
# condition estimators

@dataclass
class ConditionEstimate:
    """Measured quasi-multiplicativity data at a fixed truncation scale."""

    D_hat: float                    # exp of the min over pairs of the best gap
    p_hat: int                      # max connector length actually used
    W_hat: tuple                    # chosen connectors, sorted
    n_max: int
    p_max: int
    D_table: dict                   # (n, m) -> min best-gap D over those pairs
    trend: dict                     # (n, m) -> (1/(n+m)) * log D_{n,m}
    failure_pair: Optional[tuple] = None
    connector_choice: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failure_pair is None and self.D_hat > 0


def subadditivity_defect(ws: WeightSystem, shift: ShiftSpace, n_max: int):
    """(C_hat, C_lower_hat): worst over- and under-shoot of eval(uv) vs
    eval(u) + eval(v) over allowable uv with |u| + |v| <= n_max.

    C_hat == 0 reports sub-additivity at scale; both finite reports
    almost-additivity at scale.  Monotone nondecreasing in n_max.
    """
    if n_max < 2:
        raise ShiftError("n_max must be >= 2")
    c_upper = 0.0
    c_lower = 0.0
    for total in range(2, n_max + 1):
        for word in enumerate_words(shift, total):
            full = ws.eval(word)
            for cut in range(1, total):
                u, v = word[:cut], word[cut:]
                left, right = ws.eval(u), ws.eval(v)
                if full == NEG_INF:
                    if left == NEG_INF or right == NEG_INF:
                        continue
                    c_lower = math.inf
                    continue
                if left == NEG_INF or right == NEG_INF:
                    c_upper = math.inf
                    continue
                defect = full - (left + right)
                if defect > c_upper:
                    c_upper = defect
                elif -defect > c_lower:
                    c_lower = -defect
    return c_upper, c_lower


def estimate_c2(ws: WeightSystem, shift: ShiftSpace, n_max: int, p_max: int,
                max_pairs: int = 250_000) -> ConditionEstimate:
    """Measure the connector inequality over all pairs of words <= n_max.

    For each pair the search maximizes eval(u w v) - eval(u) - eval(v) over
    connectors w with |w| <= p_max, resolving ties shortest-then-lex (the
    first maximizer in that order wins).  Pairs whose own weight is -inf only
    require a connector to exist.
    """
    words = []
    for n in range(1, n_max + 1):
        words.extend(enumerate_words(shift, n))
    if len(words) ** 2 > max_pairs:
        raise ShiftError(f"{len(words)**2} pairs exceed the cap of {max_pairs}")
    candidates = [EPSILON]
    for k in range(1, p_max + 1):
        candidates.extend(enumerate_words(shift, k))

    evals = {w: ws.eval(w) for w in words}
    states = {w: shift.run(w) for w in words}
    min_gap = math.inf
    table: dict = {}
    choice: dict = {}
    for u in words:
        su = states[u]
        eu = evals[u]
        for v in words:
            ev = evals[v]
            vacuous = (eu == NEG_INF or ev == NEG_INF)
            best_gap = -math.inf
            best_w = None
            for w in candidates:
                st = shift.continue_run(su, w)
                if st is None or shift.continue_run(st, v) is None:
                    continue
                if vacuous:
                    best_gap, best_w = math.inf, w
                    break
                g = ws.eval(u + w + v)
                if g == NEG_INF:
                    continue
                gap = g - eu - ev
                if gap > best_gap:
                    best_gap, best_w = gap, w
            if best_w is None:
                return ConditionEstimate(
                    D_hat=0.0, p_hat=0, W_hat=(), n_max=n_max, p_max=p_max,
                    D_table={}, trend={}, failure_pair=(u, v))
            choice[(u, v)] = best_w
            if not vacuous:
                key = (len(u), len(v))
                if best_gap < table.get(key, math.inf):
                    table[key] = best_gap
                if best_gap < min_gap:
                    min_gap = best_gap

    if min_gap is math.inf:  # every pair vacuous
        min_gap = 0.0
    connectors = tuple(sorted(set(choice.values()), key=lambda w: (len(w), w)))
    d_table = {k: math.exp(v) for k, v in table.items()}
    trend = {k: v / (k[0] + k[1]) for k, v in table.items()}
    return ConditionEstimate(
        D_hat=math.exp(min_gap), p_hat=max((len(w) for w in connectors), default=0),
        W_hat=connectors, n_max=n_max, p_max=p_max,
        D_table=d_table, trend=trend, connector_choice=choice)


@dataclass
class Z1Report:
    partial_sums: tuple        # cumulative sum of exp(eval((i,))) over symbols
    terms: tuple
    tail_ratio: Optional[float]
    diverging: bool
    note: str

    @property
    def value(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0


def z1(ws: WeightSystem, shift: ShiftSpace, level: Optional[int] = None) -> Z1Report:
    """Partial sums of the first-level series, plus a divergence heuristic.

    The heuristic is a tail ratio test on the per-symbol terms; it only ever
    reports "looks divergent", never a convergence claim.
    """
    syms = list(shift.symbols())
    if level is not None:
        if level > len(syms):
            raise ShiftError(f"level {level} exceeds the alphabet")
        syms = syms[:level]
    terms = [math.exp(ws.eval((s,))) for s in syms]
    sums = []
    acc = 0.0
    for t in terms:
        acc += t
        sums.append(acc)
    if len(terms) < 4:
        return Z1Report(tuple(sums), tuple(terms), None, False,
                        "too few terms for a tail heuristic")
    tail = terms[len(terms) - max(2, len(terms) // 4) - 1:]
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
    tail_ratio = sum(ratios) / len(ratios) if ratios else None
    diverging = tail_ratio is not None and tail_ratio >= 0.999 and tail[-1] > 0
    note = ("tail terms are not shrinking; the untruncated series looks divergent"
            if diverging else
            "partial sums only; convergence of the untruncated series is not claimed")
    return Z1Report(tuple(sums), tuple(terms), tail_ratio, diverging, note)


@dataclass
class FinitenessScanLevel:
    cover_level: int
    D_hat: float
    p_hat: int
    W_hat: tuple
    W_size: int


@dataclass
class FinitenessScanReport:
    """Stability of (D, W) across truncation levels, for the finite-W check.

    ``stabilized`` requires the chosen connector set to stop growing and the
    measured D to stop decaying across the last two levels.  A failing scan
    is evidence, at scale, that no single finite connector set works.
    """

    p_max: int
    levels: tuple
    stabilized: bool
    reason: str


def finiteness_scan(ws_factory, shift: ShiftSpace, cover_levels: Sequence[int],
                    n_max: int, p_max: int, decay_threshold: float = 0.75) -> FinitenessScanReport:
    """Run estimate_c2 on a ladder of truncations of the same family.

    ``ws_factory(cover_level) -> (ws, shift_at_level)`` supplies matched
    truncations.  The connector sets are compared as sets of words.
    """
    rows = []
    for lv in cover_levels:
        ws_l, shift_l = ws_factory(lv)
        est = estimate_c2(ws_l, shift_l, n_max=n_max, p_max=p_max)
        if not est.ok:
            rows.append(FinitenessScanLevel(lv, 0.0, 0, (), 0))
            continue
        rows.append(FinitenessScanLevel(lv, est.D_hat, est.p_hat,
                                        est.W_hat, len(est.W_hat)))
    if len(rows) < 2:
        raise ShiftError("finiteness scan needs at least two levels")
    last, prev = rows[-1], rows[-2]
    grew = set(last.W_hat) - set(prev.W_hat)
    decayed = last.D_hat < decay_threshold * prev.D_hat
    if last.D_hat == 0.0:
        stabilized, reason = False, "connector search failed outright"
    elif grew:
        stabilized, reason = False, (
            f"connector set still growing at the last level (+{len(grew)} words)")
    elif decayed:
        stabilized, reason = False, (
            f"D decayed {prev.D_hat:.3g} -> {last.D_hat:.3g} across the last levels")
    else:
        stabilized, reason = True, "connector set and D stable across the last levels"
    return FinitenessScanReport(p_max=p_max, levels=tuple(rows),
                                stabilized=stabilized, reason=reason)
