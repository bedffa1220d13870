"""One-block factor maps: fiber computations and induced weight systems.

The induced weight of an image word is the log of the summed cylinder-sup
weights of its preimage words.  For weights that are constant on depth-n
cylinders this equals the representative-set supremum exactly; otherwise it
brackets it within the declared Bowen factor, and the induced system records
that slack in its own declared_M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .logsum import NEG_INF, logsumexp, logsumexp_stream
from .potentials import AdditiveCylinderWeights, WeightSystem, z1
from .gibbs import (CylinderMeasure, GibbsRatioReport, build_nu,
                    cesaro_average, gibbs_ratio_report)
from .shifts import (ShiftError, ShiftSpace, Word, check_finite_irreducibility,
                     SpecificationCertificate)


@dataclass(frozen=True)
class FactorMap:
    """A symbolwise surjection from a Markov cover onto its sofic image."""

    symbol_map: tuple            # symbol_map[i-1] = image of cover symbol i
    domain: ShiftSpace           # the Markov cover
    codomain: ShiftSpace         # cover + map, answering image-language queries

    @classmethod
    def from_shift(cls, shift: ShiftSpace) -> "FactorMap":
        if not shift.is_sofic:
            raise ShiftError("shift carries no factor map")
        return cls(shift.factor_map, shift.cover(), shift)

    @classmethod
    def from_map(cls, cover: ShiftSpace, symbol_map: Sequence[int]) -> "FactorMap":
        if cover.is_sofic:
            raise ShiftError("domain must be a plain Markov shift")
        combined = ShiftSpace(cover.alphabet_size, cover.edges,
                              ladder=cover.ladder, factor_map=tuple(symbol_map))
        return cls(combined.factor_map, cover, combined)

    def fiber(self, image_symbol: int) -> tuple:
        return self.codomain.fibers().get(image_symbol, ())


def image_word(fm: FactorMap, u: Word) -> Word:
    """Symbolwise image of a domain word; always allowable in the image."""
    u = tuple(u)
    from .shifts import is_allowable
    if not is_allowable(fm.domain, u):
        raise ShiftError(f"word {u} is not allowable in the cover")
    m = fm.symbol_map
    return tuple(m[s - 1] for s in u)


def preimage_words(fm: FactorMap, v: Word) -> list:
    """All allowable domain words mapping onto v, in lexicographic order."""
    v = tuple(v)
    from .shifts import is_allowable
    if not is_allowable(fm.codomain, v):
        raise ShiftError(f"word {v} is not allowable in the image")
    if not v:
        return [()]
    out = []
    word = [0] * len(v)

    def rec(i: int):
        if i == len(v):
            out.append(tuple(word))
            return
        for s in fm.fiber(v[i]):
            if i == 0 or (word[i - 1], s) in fm.domain.edges:
                word[i] = s
                rec(i + 1)

    rec(0)
    return out


def preimage_count(fm: FactorMap, v: Word) -> int:
    """|preimage(v)| by integer path counting over the fibers."""
    v = tuple(v)
    if not v:
        return 1
    counts = {s: 1 for s in fm.fiber(v[0])}
    for sym in v[1:]:
        nxt = {}
        for t in fm.fiber(sym):
            c = sum(cnt for s, cnt in counts.items() if (s, t) in fm.domain.edges)
            if c:
                nxt[t] = c
        if not nxt:
            return 0
        counts = nxt
    return sum(counts.values())


class PreimageCountWeights(WeightSystem):
    """log of the preimage-word count; sub-additive by fiber splitting."""

    kind = "preimage-count"
    declared_C = 0.0
    declared_M = 1.0
    depth = None

    def __init__(self, fm: FactorMap):
        self.fm = fm

    def eval(self, word: Word) -> float:
        c = preimage_count(self.fm, word)
        return math.log(c) if c else NEG_INF

    def transfer_log_partition(self, shift, n, cover_level=None):
        # fibers partition the cover language, so Z_n equals the cover count
        from .shifts import count_words
        c = count_words(self.fm.domain, n, cover_level)
        return math.log(c) if c else NEG_INF

    def transfer_log_gurevich(self, shift, n, a):
        if not shift.is_sofic or not shift.image_is_markov():
            return None
        image_edges = shift.image_edges()
        m = self.fm.symbol_map
        counts = {s: 1 for s in self.fm.fiber(a)}
        for _ in range(n - 1):
            nxt = {}
            for s, c in counts.items():
                for t in self.fm.domain.out_neighbors(s):
                    nxt[t] = nxt.get(t, 0) + c
            counts = nxt
        total = sum(c for s, c in counts.items() if (m[s - 1], a) in image_edges)
        return math.log(total) if total else NEG_INF


class PushforwardWeights(WeightSystem):
    """Fiber sums of a cover weight system: exp eval(v) = sum over
    preimage words u of exp inner(u)."""

    kind = "pushforward"

    def __init__(self, fm: FactorMap, inner: WeightSystem):
        self.fm = fm
        self.inner = inner
        self.declared_C = inner.declared_C
        self.declared_M = inner.declared_M
        self.depth = None
        self._sum_is_additive = (isinstance(inner, AdditiveCylinderWeights)
                                 and inner.depth == 1)

    def eval(self, word: Word) -> float:
        word = tuple(word)
        if not word:
            return 0.0
        if self._sum_is_additive:
            return self._eval_dp(word)
        pres = preimage_words(self.fm, word)
        if not pres:
            return NEG_INF
        return logsumexp([self.inner.eval(u) for u in pres])

    def _sym_val(self, s: int) -> float:
        return self.inner.eval((s,))

    def _eval_dp(self, word: Word) -> float:
        from .logsum import log_add
        state = {}
        for s in self.fm.fiber(word[0]):
            v = self._sym_val(s)
            if v != NEG_INF:
                state[s] = v
        for sym in word[1:]:
            nxt = {}
            for t in self.fm.fiber(sym):
                v = self._sym_val(t)
                if v == NEG_INF:
                    continue
                acc = NEG_INF
                for s, sv in state.items():
                    if (s, t) in self.fm.domain.edges:
                        acc = log_add(acc, sv)
                if acc != NEG_INF:
                    nxt[t] = acc + v
            if not nxt:
                return NEG_INF
            state = nxt
        return logsumexp_stream(state[s] for s in sorted(state))

    def transfer_log_partition(self, shift, n, cover_level=None):
        # fibers partition the cover language: Z_n of the image system equals
        # Z_n of the inner system on the cover
        inner_fast = self.inner.transfer_log_partition(self.fm.domain, n, cover_level)
        if inner_fast is not None:
            return inner_fast
        from .pressure import _enumerated_log_partition
        return _enumerated_log_partition(self.inner, self.fm.domain, n, cover_level)

    def transfer_log_gurevich(self, shift, n, a):
        if not self._sum_is_additive:
            return None
        if not shift.is_sofic or not shift.image_is_markov():
            return None
        from .logsum import log_add
        image_edges = shift.image_edges()
        m = self.fm.symbol_map
        state = {}
        for s in self.fm.fiber(a):
            v = self._sym_val(s)
            if v != NEG_INF:
                state[s] = v
        for _ in range(n - 1):
            nxt = {}
            for s, sv in state.items():
                for t in self.fm.domain.out_neighbors(s):
                    v = self._sym_val(t)
                    if v == NEG_INF:
                        continue
                    nxt[t] = log_add(nxt.get(t, NEG_INF), sv + v)
            state = nxt
        terms = [sv for s, sv in sorted(state.items())
                 if (m[s - 1], a) in image_edges]
        return logsumexp(terms) if terms else NEG_INF


def preimage_count_weight(fm: FactorMap) -> PreimageCountWeights:
    return PreimageCountWeights(fm)


def pushforward_weight(fm: FactorMap, ws_on_domain: WeightSystem) -> PushforwardWeights:
    return PushforwardWeights(fm, ws_on_domain)


def pushforward_measure(fm: FactorMap, measure: CylinderMeasure) -> CylinderMeasure:
    """Image measure: mass of [v] is the summed mass of its preimage words."""
    out: dict = {}
    m = fm.symbol_map
    for w, mass in measure.weights.items():
        key = tuple(m[s - 1] for s in w)
        out[key] = out.get(key, 0.0) + mass
    meas = CylinderMeasure(measure.depth, out, fm.codomain)
    meas.validate()
    return meas


@dataclass
class HiddenGibbsReport:
    """Gibbs diagnostics for the projected measure against the fiber-sum weights."""

    certificate: SpecificationCertificate
    pressure_domain: tuple         # (lower, upper) for the cover system
    pressure_image: tuple          # (lower, upper) for the induced system
    brackets_overlap: bool
    ratio: GibbsRatioReport
    C0_stability: float            # relative change of C0 between n_max/2 and n_max
    Z1_domain: float
    Z1_image: float
    passed: bool
    regime: str                    # "exact" (M == 1) or "bowen-bracketed"


def hidden_gibbs_report(fm: FactorMap, ws: WeightSystem, depth: int, n_max: int,
                        cesaro_steps: int = 2, n_max_conditions: int = 2,
                        p_max: int = 3, stability_tol: float = 0.5,
                        cert_n_max: int = 2) -> HiddenGibbsReport:
    """Push the truncation Gibbs construction through the factor map.

    Builds the normalized cylinder measure for ``ws`` on the cover, Cesaro
    averages it, projects it, and checks its Gibbs ratios against the induced
    fiber-sum weights, alongside overlap of the two pressure brackets.
    """
    cert = check_finite_irreducibility(fm.domain, n_max=cert_n_max, p_max=p_max)
    if not isinstance(cert, SpecificationCertificate):
        raise ShiftError(f"cover is not finitely irreducible at scale: {cert}")

    from .pressure import pressure_report
    dom_report = pressure_report(ws, fm.domain, n_max=n_max,
                                 n_max_conditions=n_max_conditions,
                                 p_max=p_max, with_ladder=False)
    g = pushforward_weight(fm, ws)
    img_report = pressure_report(g, fm.codomain, n_max=n_max,
                                 n_max_conditions=n_max_conditions,
                                 p_max=p_max, with_ladder=False)

    nu = build_nu(ws, fm.domain, depth)
    mu = cesaro_average(nu, cesaro_steps) if cesaro_steps else nu
    projected = pushforward_measure(fm, mu)

    ratio = gibbs_ratio_report(projected, g, img_report.P_best, n_max)
    half = max(1, n_max // 2)
    c0_half, c0_full = ratio.C0_at(half), ratio.C0_at(n_max)
    stability = abs(c0_full - c0_half) / c0_half if c0_half > 0 else math.inf

    lo_d, hi_d = dom_report.P_best
    lo_i, hi_i = img_report.P_best
    overlap = (lo_d is not None and hi_d is not None
               and lo_i is not None and hi_i is not None
               and max(lo_d, lo_i) <= min(hi_d, hi_i) + 1e-12)
    passed = overlap and math.isfinite(ratio.C0) and stability <= stability_tol
    return HiddenGibbsReport(
        certificate=cert,
        pressure_domain=dom_report.P_best,
        pressure_image=img_report.P_best,
        brackets_overlap=overlap,
        ratio=ratio,
        C0_stability=stability,
        Z1_domain=z1(ws, fm.domain).value,
        Z1_image=z1(g, fm.codomain).value,
        passed=passed,
        regime="exact" if ws.declared_M == 1.0 else "bowen-bracketed",
    )
