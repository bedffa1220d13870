"""Finite-truncation Gibbs measures and their diagnostics.

Measures are exact tables on the depth-l cylinders of a finite truncation.
The weak-* limits of the theory are replaced by what is checkable at desk
scale: normalized cylinder-sup weights, Cesaro invariantization by exact
pullback summation, and stability of the Gibbs ratios across depths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .logsum import NEG_INF, logsumexp
from .potentials import WeightSystem
from .shifts import ShiftError, ShiftSpace, Word, enumerate_words

MASS_TOL = 1e-12


@dataclass(frozen=True)
class CylinderMeasure:
    """Probability weights on the depth-l cylinders of a truncation."""

    depth: int
    weights: dict            # Word (length == depth) -> mass
    shift: ShiftSpace

    def validate(self) -> None:
        total = math.fsum(self.weights.values())
        if abs(total - 1.0) > MASS_TOL:
            raise ShiftError(f"total mass {total} is not 1 within {MASS_TOL}")
        if any(m < 0 for m in self.weights.values()):
            raise ShiftError("negative cylinder mass")

    def marginal(self, k: int) -> "CylinderMeasure":
        """Depth-k marginal by summation over extensions."""
        if k > self.depth:
            raise ShiftError("marginal depth exceeds the table depth")
        if k == self.depth:
            return self
        out: dict = {}
        for w, m in self.weights.items():
            key = w[:k]
            out[key] = out.get(key, 0.0) + m
        return CylinderMeasure(k, out, self.shift)

    def mass(self, word: Word) -> float:
        """Mass of [word] for |word| <= depth."""
        word = tuple(word)
        if len(word) > self.depth:
            raise ShiftError("cylinder deeper than the table")
        return self.marginal(len(word)).weights.get(word, 0.0)


def build_nu(ws: WeightSystem, shift: ShiftSpace, depth: int) -> CylinderMeasure:
    """Cylinder-sup weights at depth l, normalized by their sum."""
    if depth < 1:
        raise ShiftError("depth must be >= 1")
    words = enumerate_words(shift, depth)
    logs = [ws.eval(w) for w in words]
    log_total = logsumexp(logs)
    if log_total == NEG_INF:
        raise ShiftError("all depth-l cylinders have weight zero")
    weights = {w: math.exp(lv - log_total) if lv != NEG_INF else 0.0
               for w, lv in zip(words, logs)}
    m = CylinderMeasure(depth, weights, shift)
    m.validate()
    return m


def cesaro_average(nu: CylinderMeasure, n_steps: int) -> CylinderMeasure:
    """Average of the first n_steps shift pullbacks, at reduced depth.

    The result assigns [u] the mean over i = 1..n_steps of nu(sigma^-i [u]),
    each computed by exact summation over the length-(i+|u|) words carrying u
    as an infix; total mass is preserved.
    """
    if n_steps < 1:
        raise ShiftError("n_steps must be >= 1")
    if n_steps >= nu.depth:
        raise ShiftError("n_steps must be smaller than the measure depth")
    d = nu.depth - n_steps
    out: dict = {}
    frac = 1.0 / n_steps
    for i in range(1, n_steps + 1):
        for w, m in nu.weights.items():
            if m == 0.0:
                continue
            u = w[i:i + d]
            out[u] = out.get(u, 0.0) + m * frac
    meas = CylinderMeasure(d, out, nu.shift)
    meas.validate()
    return meas


@dataclass
class RatioRow:
    n: int
    min_ratio: float
    max_ratio: float
    count: int


@dataclass
class GibbsRatioReport:
    """Cylinder-mass to weight ratios m([w]) e^{nP} / exp(eval(w)) per depth."""

    rows: tuple
    C0: float                      # max over rows of max(max_ratio, 1/min_ratio)
    P_used: float
    P_halfwidth: float
    C0_uncertainty_factor: float   # extra slack from the pressure interval

    def row(self, n: int) -> RatioRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(n)

    def C0_at(self, n: int) -> float:
        r = self.row(n)
        return max(r.max_ratio, 1.0 / r.min_ratio)


def gibbs_ratio_report(measure: CylinderMeasure, ws: WeightSystem,
                       pressure_interval, n_max: int) -> GibbsRatioReport:
    """Exact min/max Gibbs ratios over positive-mass cylinders, per depth.

    ``pressure_interval`` is (lower, upper); the midpoint enters the ratios
    and the half-width is folded into the reported uncertainty factor.
    """
    lo, hi = pressure_interval
    p_mid = 0.5 * (lo + hi)
    halfwidth = 0.5 * (hi - lo)
    if n_max > measure.depth:
        raise ShiftError("n_max exceeds the measure depth")
    rows = []
    c0 = 1.0
    for n in range(1, n_max + 1):
        marg = measure.marginal(n)
        rmin, rmax, count = math.inf, 0.0, 0
        for w, m in sorted(marg.weights.items()):
            if m == 0.0:
                continue
            lw = ws.eval(w)
            if lw == NEG_INF:
                raise ShiftError(f"positive mass on a zero-weight cylinder {w}")
            ratio = math.exp(math.log(m) + n * p_mid - lw)
            rmin = min(rmin, ratio)
            rmax = max(rmax, ratio)
            count += 1
        rows.append(RatioRow(n, rmin, rmax, count))
        c0 = max(c0, rmax, 1.0 / rmin)
    return GibbsRatioReport(
        rows=tuple(rows), C0=c0, P_used=p_mid, P_halfwidth=halfwidth,
        C0_uncertainty_factor=math.exp(n_max * halfwidth))


@dataclass
class MixingSample:
    u: Word
    v: Word
    t: int
    best_i: Optional[int]
    best_ratio: float


@dataclass
class MixingReport:
    samples: tuple
    c_min: float
    mixing_constant: float     # min over samples of the best ratio
    passed: bool


def mixing_report(measure: CylinderMeasure, ws: WeightSystem, p: int,
                  samples: Sequence, c_min: float = 0.1) -> MixingReport:
    """Occupation of [u] inter sigma^-(|u|+t+i) [v] against product mass.

    For each (u, v, t) the gap index i ranges over 0..2p; the sample passes
    when some i achieves ratio >= c_min.  Depths must fit the table.
    """
    rows = []
    overall = math.inf
    for (u, v, t) in samples:
        u, v = tuple(u), tuple(v)
        best_ratio, best_i = 0.0, None
        mu, mv = measure.mass(u), measure.mass(v)
        if mu == 0.0 or mv == 0.0:
            rows.append(MixingSample(u, v, t, None, 0.0))
            overall = min(overall, 0.0)
            continue
        for i in range(0, 2 * p + 1):
            total_len = len(u) + t + i + len(v)
            if total_len > measure.depth:
                raise ShiftError(
                    f"sample (|u|={len(u)}, t={t}, i={i}, |v|={len(v)}) "
                    f"needs depth {total_len} > {measure.depth}")
            gap = t + i
            marg = measure.marginal(total_len)
            joint = 0.0
            for w, m in marg.weights.items():
                if m and w[:len(u)] == u and w[len(u) + gap:] == v:
                    joint += m
            ratio = joint / (mu * mv)
            if ratio > best_ratio:
                best_ratio, best_i = ratio, i
        rows.append(MixingSample(u, v, t, best_i, best_ratio))
        overall = min(overall, best_ratio)
    passed = all(s.best_ratio >= c_min for s in rows)
    return MixingReport(tuple(rows), c_min, overall, passed)


@dataclass
class EnergyBalance:
    n: int
    entropy: float
    energy: float
    balance: float            # entropy + energy


def entropy_energy(measure: CylinderMeasure, ws: WeightSystem, n: int) -> EnergyBalance:
    """Depth-n entropy and energy rates; zero-mass cylinders contribute 0."""
    if n > measure.depth:
        raise ShiftError("n exceeds the measure depth")
    marg = measure.marginal(n)
    ent = 0.0
    eng = 0.0
    for w, m in sorted(marg.weights.items()):
        if m == 0.0:
            continue
        ent -= m * math.log(m)
        lw = ws.eval(w)
        eng += m * lw if lw != NEG_INF else -math.inf
    return EnergyBalance(n, ent / n, eng / n, (ent / n) + (eng / n))


@dataclass
class GibbsReport:
    """Aggregate diagnostics for one constructed measure."""

    ratio: GibbsRatioReport
    mixing: Optional[MixingReport]
    balances: tuple            # EnergyBalance per requested n
    pressure_interval: tuple
    depth: int
    cesaro_steps: int
