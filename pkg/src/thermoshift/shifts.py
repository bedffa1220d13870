"""Finite truncations of countable Markov and sofic shifts.

A shift is presented as a directed graph on symbols ``1..k``.  When a
``factor_map`` is attached, the object models the sofic image of that graph
under the one-block code, and all word-level queries (allowability,
enumeration, cycles) are answered on the image alphabet through a cached
subset-construction determinization of the cover.

Words are plain tuples of ints; ``()`` is the empty word and is always
allowable.  Enumeration order is lexicographic throughout.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

Word = tuple  # tuple[int, ...]

EPSILON: Word = ()


class ShiftError(ValueError):
    """Invalid shift description."""


class BudgetExceededError(RuntimeError):
    """An enumeration would produce more words than the configured cap."""


#: Hard cap on words materialized by a single enumeration call.
WORD_BUDGET = 10**7


def default_ladder(k: int) -> tuple:
    """Doubling truncation levels 2, 4, 8, ... capped and ending at k."""
    levels = []
    level = 2
    while level < k:
        levels.append(level)
        level *= 2
    levels.append(k)
    return tuple(levels)


class ShiftSpace:
    """A truncated Markov shift, optionally carried with a one-block code.

    Parameters
    ----------
    alphabet_size:
        Number of cover symbols; symbols are 1..k.
    edges:
        Allowed transitions (i, j) between cover symbols.
    ladder:
        Optional strictly increasing truncation levels, each <= k.
    factor_map:
        Optional sequence m with m[i-1] the image of cover symbol i.  When
        present the space presents the sofic image; words are over the image
        alphabet 1..k' and the Markov graph acts as the cover.
    """

    def __init__(self, alphabet_size: int, edges, ladder=None, factor_map=None):
        if alphabet_size < 1:
            raise ShiftError("alphabet_size must be >= 1")
        self.alphabet_size = int(alphabet_size)
        self.edges = frozenset((int(i), int(j)) for i, j in edges)
        for i, j in self.edges:
            if not (1 <= i <= alphabet_size and 1 <= j <= alphabet_size):
                raise ShiftError(f"edge ({i},{j}) outside alphabet 1..{alphabet_size}")
        self._out = {s: tuple() for s in range(1, alphabet_size + 1)}
        self._in = {s: tuple() for s in range(1, alphabet_size + 1)}
        out = {s: [] for s in range(1, alphabet_size + 1)}
        inc = {s: [] for s in range(1, alphabet_size + 1)}
        for i, j in sorted(self.edges):
            out[i].append(j)
            inc[j].append(i)
        for s in range(1, alphabet_size + 1):
            if not out[s]:
                raise ShiftError(f"symbol {s} has no outgoing edge")
            if not inc[s]:
                raise ShiftError(f"symbol {s} has no incoming edge")
            self._out[s] = tuple(out[s])
            self._in[s] = tuple(sorted(inc[s]))

        if ladder is not None:
            ladder = tuple(int(l) for l in ladder)
            if any(b <= a for a, b in zip(ladder, ladder[1:])):
                raise ShiftError("ladder levels must be strictly increasing")
            if ladder and ladder[-1] > alphabet_size:
                raise ShiftError("ladder levels must be <= alphabet_size")
        self.ladder = ladder

        if factor_map is not None:
            factor_map = tuple(int(m) for m in factor_map)
            if len(factor_map) != alphabet_size:
                raise ShiftError("factor_map must assign an image to every symbol")
            image = set(factor_map)
            k_img = max(image)
            if image != set(range(1, k_img + 1)):
                raise ShiftError("factor_map image must be exactly 1..k'")
        self.factor_map = factor_map

        # caches (the object is immutable after construction)
        self._fibers = None
        self._dfa = {}            # (state, image symbol) -> state or None
        self._image_edges = None
        self._image_markov = None
        self._periodic_memo = {}

    # ------------------------------------------------------------------
    # basic structure

    @property
    def is_sofic(self) -> bool:
        return self.factor_map is not None

    @property
    def image_alphabet_size(self) -> int:
        if self.factor_map is None:
            return self.alphabet_size
        return max(self.factor_map)

    def out_neighbors(self, s: int):
        return self._out[s]

    def in_neighbors(self, s: int):
        return self._in[s]

    def fibers(self) -> dict:
        """Map image symbol -> sorted tuple of cover symbols."""
        if self._fibers is None:
            fib = {}
            fm = self.factor_map or tuple(range(1, self.alphabet_size + 1))
            for s, img in enumerate(fm, start=1):
                fib.setdefault(img, []).append(s)
            self._fibers = {b: tuple(sorted(v)) for b, v in fib.items()}
        return self._fibers

    def cover(self) -> "ShiftSpace":
        """The underlying Markov shift, with the factor map dropped."""
        if self.factor_map is None:
            return self
        return ShiftSpace(self.alphabet_size, self.edges, ladder=self.ladder)

    def image_edges(self) -> frozenset:
        """Edges of the image symbol graph (pairs realized by some cover edge)."""
        if self._image_edges is None:
            fm = self.factor_map or tuple(range(1, self.alphabet_size + 1))
            self._image_edges = frozenset(
                (fm[i - 1], fm[j - 1]) for i, j in self.edges
            )
        return self._image_edges

    # ------------------------------------------------------------------
    # run-state machinery (subset construction on the cover)

    def initial_state(self, symbol: int, level: Optional[int] = None):
        """Subset state after reading one image symbol, or None if empty."""
        if self.factor_map is None:
            if level is not None and symbol > level:
                return None
            return symbol if 1 <= symbol <= self.alphabet_size else None
        fib = self.fibers().get(symbol)
        if fib is None:
            return None
        if level is not None:
            fib = tuple(s for s in fib if s <= level)
        return frozenset(fib) or None

    def step_state(self, state, symbol: int, level: Optional[int] = None):
        """Advance a run state by one image symbol; None when the run dies."""
        if self.factor_map is None:
            if level is not None and symbol > level:
                return None
            return symbol if (state, symbol) in self.edges else None
        key = (state, symbol, level)
        try:
            return self._dfa[key]
        except KeyError:
            pass
        fib = self.fibers().get(symbol, ())
        nxt = frozenset(
            t
            for t in fib
            if (level is None or t <= level) and any((s, t) in self.edges for s in state)
        )
        result = nxt or None
        self._dfa[key] = result
        return result

    def run(self, word: Word, level: Optional[int] = None):
        """Run state after reading ``word`` from scratch; None if not allowable."""
        if not word:
            return EPSILON  # sentinel start state; any symbol may follow
        state = self.initial_state(word[0], level)
        for sym in word[1:]:
            if state is None:
                return None
            state = self.step_state(state, sym, level)
        return state

    def continue_run(self, state, word: Word, level: Optional[int] = None):
        if state is EPSILON or state == EPSILON:
            return self.run(word, level)
        for sym in word:
            if state is None:
                return None
            state = self.step_state(state, sym, level)
        return state

    # ------------------------------------------------------------------
    # language queries

    def symbols(self, level: Optional[int] = None) -> range:
        """Image alphabet, optionally under a cover truncation level."""
        if self.factor_map is None:
            return range(1, (level or self.alphabet_size) + 1)
        if level is None:
            return range(1, self.image_alphabet_size + 1)
        fm = self.factor_map
        present = {fm[s - 1] for s in range(1, level + 1)}
        return sorted(present)

    def image_is_markov(self) -> bool:
        """True when the image language equals the walk language of its edges.

        Checked by exploring the determinized automaton: from every reachable
        (image symbol, subset) state, every image edge must stay alive.
        """
        if self.factor_map is None:
            return True
        if self._image_markov is not None:
            return self._image_markov
        succ = {}
        for b, c in self.image_edges():
            succ.setdefault(b, []).append(c)
        seen = set()
        stack = []
        for b in self.symbols():
            st = self.initial_state(b)
            if st is not None:
                stack.append((b, st))
        ok = True
        while stack and ok:
            b, st = stack.pop()
            if (b, st) in seen:
                continue
            seen.add((b, st))
            for c in succ.get(b, ()):
                nxt = self.step_state(st, c)
                if nxt is None:
                    ok = False
                    break
                if (c, nxt) not in seen:
                    stack.append((c, nxt))
        self._image_markov = ok
        return ok


# ----------------------------------------------------------------------
# built-in graphs

def _edges_full(k: int):
    return {(i, j) for i in range(1, k + 1) for j in range(1, k + 1)}


def _edges_golden():
    return {(1, 1), (1, 2), (2, 1)}


def _edges_hub(k: int):
    # symbol 2 is a hub: 1 -> 2, 2 -> everything, 3 loops and returns to 1,
    # every symbol >= 4 returns to the hub
    edges = {(1, 2), (3, 1), (3, 3)}
    for j in range(1, k + 1):
        edges.add((2, j))
    for j in range(4, k + 1):
        edges.add((j, 2))
    return edges


def _triangular_block(a: int) -> int:
    n = 1
    while n * (n + 1) // 2 < a:
        n += 1
    return n


def _triangular_map(k: int):
    return tuple(_triangular_block(a) for a in range(1, k + 1))


def _edges_block_chain(k: int):
    # blocks of 3 linked through symbol 1: 1 loops and reaches the last
    # element of each block, that element returns to 1
    edges = {(1, 1)}
    b = 1
    while 3 * b + 1 <= k:
        lo, hi = 3 * b - 1, 3 * b + 1
        block = [s for s in range(lo, hi + 1) if s <= k]
        for s in block:
            for t in block:
                edges.add((s, t))
        edges.add((1, hi))
        edges.add((hi, 1))
        b += 1
    # partially truncated trailing block, if any
    lo = 3 * b - 1
    if lo <= k:
        block = list(range(lo, k + 1))
        for s in block:
            for t in block:
                edges.add((s, t))
        edges.add((1, block[-1]))
        edges.add((block[-1], 1))
    return edges


def _blocks_of_growing_size(k: int):
    """Partition 1..k into blocks of sizes 1, 2, 3, ...; last may be partial."""
    blocks = []
    start, size = 1, 1
    while start <= k:
        blocks.append(tuple(range(start, min(start + size, k + 1))))
        start += size
        size += 1
    return blocks


def _edges_block_fans(k: int):
    # full shift inside each growing block; symbol 1 linked both ways with
    # the first element of every block
    edges = set()
    for blk in _blocks_of_growing_size(k):
        for s in blk:
            for t in blk:
                edges.add((s, t))
        edges.add((1, blk[0]))
        edges.add((blk[0], 1))
    return edges


def _block_fan_map(k: int):
    fm = [0] * k
    for idx, blk in enumerate(_blocks_of_growing_size(k), start=1):
        for s in blk:
            fm[s - 1] = idx
    return tuple(fm)


BUILTINS = ("full", "golden-mean", "example-e1", "example-dif", "example-nofinite")


def builtin_shift(name: str, alphabet_size: int, ladder=None, factor_map=None) -> ShiftSpace:
    """Construct one of the named fixture graphs truncated to ``alphabet_size``."""
    k = alphabet_size
    if name == "full":
        edges = _edges_full(k)
    elif name == "golden-mean":
        if k != 2:
            raise ShiftError("golden-mean is a 2-symbol graph")
        edges = _edges_golden()
    elif name == "example-e1":
        if k < 3:
            raise ShiftError("example-e1 needs alphabet_size >= 3")
        edges = _edges_hub(k)
        if factor_map is None:
            factor_map = _triangular_map(k)
    elif name == "example-dif":
        if k < 4:
            raise ShiftError("example-dif needs alphabet_size >= 4")
        edges = _edges_block_chain(k)
    elif name == "example-nofinite":
        if k < 3:
            raise ShiftError("example-nofinite needs alphabet_size >= 3")
        edges = _edges_block_fans(k)
        if factor_map is None:
            factor_map = _block_fan_map(k)
    else:
        raise ShiftError(f"unknown builtin {name!r}; expected one of {BUILTINS}")
    return ShiftSpace(k, edges, ladder=ladder, factor_map=factor_map)


def shift_from_dict(spec: dict) -> ShiftSpace:
    """Build a ShiftSpace from the JSON spec-file dictionary."""
    if not isinstance(spec, dict):
        raise ShiftError("shift spec must be a JSON object")
    try:
        k = int(spec["alphabet_size"])
    except KeyError:
        raise ShiftError("shift spec missing 'alphabet_size'") from None
    ladder = spec.get("ladder")
    factor_map = spec.get("factor_map")
    if "builtin" in spec:
        return builtin_shift(spec["builtin"], k, ladder=ladder, factor_map=factor_map)
    if spec.get("full"):
        edges = _edges_full(k)
    else:
        try:
            edges = {(int(i), int(j)) for i, j in spec["edges"]}
        except KeyError:
            raise ShiftError("shift spec needs 'edges', 'full' or 'builtin'") from None
        except (TypeError, ValueError):
            raise ShiftError("'edges' must be a list of [i, j] pairs") from None
    return ShiftSpace(k, edges, ladder=ladder, factor_map=factor_map)


# ----------------------------------------------------------------------
# enumeration and counting

def _resolve_level(shift: ShiftSpace, level) -> Optional[int]:
    """Translate a ladder index into a cover truncation level."""
    if level is None:
        return None
    ladder = shift.ladder or default_ladder(shift.alphabet_size)
    if not (1 <= level <= len(ladder)):
        raise ShiftError(f"ladder index {level} out of range 1..{len(ladder)}")
    return ladder[level - 1]


def count_words(shift: ShiftSpace, n: int, cover_level: Optional[int] = None) -> int:
    """|B_n| at the truncation, by integer DP (no enumeration)."""
    if n < 0:
        raise ShiftError("word length must be >= 0")
    if n == 0:
        return 1
    if shift.factor_map is None:
        syms = [s for s in range(1, shift.alphabet_size + 1)
                if cover_level is None or s <= cover_level]
        counts = {s: 1 for s in syms}
        for _ in range(n - 1):
            nxt = {s: 0 for s in syms}
            for s, c in counts.items():
                for t in shift.out_neighbors(s):
                    if cover_level is None or t <= cover_level:
                        nxt[t] += c
            counts = nxt
        return sum(counts.values())
    # sofic: count distinct image words via the determinized automaton
    counts = {}
    for b in shift.symbols(cover_level):
        st = shift.initial_state(b, cover_level)
        if st is not None:
            counts[st] = counts.get(st, 0) + 1
    for _ in range(n - 1):
        nxt = {}
        for st, c in counts.items():
            for b in shift.symbols(cover_level):
                st2 = shift.step_state(st, b, cover_level)
                if st2 is not None:
                    nxt[st2] = nxt.get(st2, 0) + c
        counts = nxt
    return sum(counts.values())


def iter_words(shift: ShiftSpace, n: int, cover_level: Optional[int] = None) -> Iterator[Word]:
    """Lexicographic generator over B_n at the truncation."""
    if n == 0:
        yield EPSILON
        return
    syms = list(shift.symbols(cover_level))
    word = [0] * n

    def rec(depth: int, state):
        if depth == n:
            yield tuple(word)
            return
        for b in syms:
            st = (shift.initial_state(b, cover_level) if depth == 0
                  else shift.step_state(state, b, cover_level))
            if st is None:
                continue
            word[depth] = b
            yield from rec(depth + 1, st)

    yield from rec(0, None)


def enumerate_words(shift: ShiftSpace, n: int, level=None) -> list:
    """All allowable words of length n, lexicographic, no duplicates.

    ``level`` is a 1-based index into the shift's ladder (or the default
    doubling ladder) and restricts the cover symbols to 1..l_level.
    """
    cover_level = _resolve_level(shift, level)
    total = count_words(shift, n, cover_level)
    if total > WORD_BUDGET:
        raise BudgetExceededError(
            f"B_{n} has {total} words; budget is {WORD_BUDGET}")
    return list(iter_words(shift, n, cover_level))


def is_allowable(shift: ShiftSpace, word: Word) -> bool:
    """Membership of ``word`` in the language of the (possibly sofic) shift."""
    if not word:
        return True
    for sym in word:
        if not (1 <= sym <= shift.image_alphabet_size):
            return False
    return shift.run(tuple(word)) is not None


# ----------------------------------------------------------------------
# connectors and specification certificates

def find_connector(shift: ShiftSpace, u: Word, v: Word, p_max: int) -> Optional[Word]:
    """Shortest w (ties lexicographic) with u w v allowable, or None.

    The empty word is tried first; absence within the length budget is a
    value, not an error.
    """
    u, v = tuple(u), tuple(v)
    state_u = shift.run(u)
    if state_u is None or shift.run(v) is None:
        raise ShiftError("find_connector requires allowable u and v")

    def v_survives(state) -> bool:
        return shift.continue_run(state, v) is not None

    if v_survives(state_u):
        return EPSILON
    syms = list(shift.symbols())
    frontier = [(EPSILON, state_u)]
    for _ in range(p_max):
        nxt = []
        for w, st in frontier:
            for b in syms:
                st2 = shift.continue_run(st, (b,))
                if st2 is None:
                    continue
                w2 = w + (b,)
                if v_survives(st2):
                    return w2
                nxt.append((w2, st2))
        frontier = nxt
    return None


@dataclass(frozen=True)
class SpecificationCertificate:
    """Finite-irreducibility evidence at a fixed truncation scale.

    Covers all pairs of allowable words up to the sampled length; it is not a
    statement about the untruncated graph.
    """

    p: int
    connectors: frozenset
    connector_table: dict
    n_max: int
    strong_p: Optional[int]  # all pairs glue with |w| == strong_p, if any

    @property
    def strong(self) -> bool:
        return self.strong_p is not None


@dataclass(frozen=True)
class IrreducibilityFailure:
    pair: tuple
    p_max: int
    n_max: int


def check_finite_irreducibility(shift: ShiftSpace, n_max: int, p_max: int,
                                max_pairs: int = 250_000):
    """Search connectors for every pair of words of length <= n_max.

    Returns a SpecificationCertificate on success, else an
    IrreducibilityFailure naming the first uncoverable pair.  Also decides
    whether a single exact connector length works for all pairs (the strong
    variant).
    """
    words = [EPSILON]
    for n in range(1, n_max + 1):
        words.extend(enumerate_words(shift, n))
    if len(words) ** 2 > max_pairs:
        raise BudgetExceededError(
            f"{len(words)**2} pairs exceed the cap of {max_pairs}")

    states = {w: shift.run(w) for w in words}
    table = {}
    feasible_lengths = {}
    candidates_by_len = {0: [EPSILON]}
    for k in range(1, p_max + 1):
        candidates_by_len[k] = enumerate_words(shift, k)

    for u in words:
        su = states[u]
        for v in words:
            chosen = None
            feas = set()
            for k in range(0, p_max + 1):
                for w in candidates_by_len[k]:
                    st = shift.continue_run(su, w)
                    if st is None:
                        continue
                    if shift.continue_run(st, v) is not None:
                        feas.add(k)
                        if chosen is None:
                            chosen = w
                        break  # lexicographically first within this length
            if chosen is None:
                return IrreducibilityFailure(pair=(u, v), p_max=p_max, n_max=n_max)
            table[(u, v)] = chosen
            feasible_lengths[(u, v)] = feas

    strong_p = None
    for k in range(0, p_max + 1):
        if all(k in feas for feas in feasible_lengths.values()):
            strong_p = k
            break
    connectors = frozenset(table.values())
    p = max((len(w) for w in connectors), default=0)
    return SpecificationCertificate(
        p=p, connectors=connectors, connector_table=table,
        n_max=n_max, strong_p=strong_p)


def check_bip(shift: ShiftSpace):
    """Big-images-and-preimages witnesses on the cover graph.

    Returns (True, witnesses) with a greedy minimal witness set: every symbol
    a gets some witness b with b a allowable and some b' with a b' allowable.
    Deterministic greedy set cover, smallest symbol on ties.
    """
    cover = shift.cover() if shift.is_sofic else shift
    k = cover.alphabet_size
    need = {("in", a) for a in range(1, k + 1)} | {("out", a) for a in range(1, k + 1)}
    covers = {}
    for b in range(1, k + 1):
        got = {("in", a) for a in cover.out_neighbors(b)}
        got |= {("out", a) for a in cover.in_neighbors(b)}
        covers[b] = got
    witnesses = []
    uncovered = set(need)
    while uncovered:
        best = max(range(1, k + 1),
                   key=lambda b: (len(covers[b] & uncovered), -b))
        gain = covers[best] & uncovered
        if not gain:
            return False, tuple(witnesses)
        witnesses.append(best)
        uncovered -= gain
    return True, tuple(sorted(witnesses))


# ----------------------------------------------------------------------
# periodic words

def _periodic_sofic(shift: ShiftSpace, word: Word) -> bool:
    """Whether word^infinity is a point of the sofic image.

    Every finite power must be allowable; by finiteness of the fibers this is
    equivalent to the subset run surviving one full cycle of subset states.
    """
    try:
        return shift._periodic_memo[word]
    except KeyError:
        pass
    state = shift.run(word)
    ok = state is not None
    seen = set()
    while ok and state not in seen:
        seen.add(state)
        state = shift.continue_run(state, word)
        ok = state is not None
    shift._periodic_memo[word] = ok
    return ok


def periodic_words(shift: ShiftSpace, n: int, a: int) -> list:
    """Length-n cycle words through symbol ``a`` (first-symbol anchored).

    For a Markov shift these are the words w with w[0] == a whose wraparound
    w w is allowable; for a sofic shift the stronger condition that the
    periodic sequence w w w ... is a point of the image.
    """
    if n < 1:
        raise ShiftError("period must be >= 1")
    if a not in set(shift.symbols()):
        return []
    out = []
    if shift.factor_map is None:
        word = [a] + [0] * (n - 1)

        def rec(depth: int):
            if depth == n:
                if (word[-1], a) in shift.edges:
                    out.append(tuple(word))
                return
            for b in shift.out_neighbors(word[depth - 1]):
                word[depth] = b
                rec(depth + 1)

        if n == 1:
            return [(a,)] if (a, a) in shift.edges else []
        rec(1)
        return out

    for w in iter_words(shift, n):
        if w[0] != a:
            if w[0] > a:
                break
            continue
        if _periodic_sofic(shift, w):
            out.append(w)
    return out
