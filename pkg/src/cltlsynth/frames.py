"""Gap functions, frames, partial frames, compatibility relations and realizers.

A frame abstracts a window of up to k+1 consecutive valuations: a total
preorder on the look-ahead terms visible through the window plus one gap
function per window position for the blind variables.  Preorders are stored
as contiguous rank vectors over a fixed term order (variable declaration
order, then depth), which makes frames hashable and O(1) to compare.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import (
    IncompatibleTarget,
    NotGapCompatible,
    SizeMismatch,
    TermOutOfRange,
    UnachievableGap,
    WindowTooLong,
)
from .formula import Atom, GameSpec, Rel, Term


@dataclass(frozen=True)
class Vars:
    """Variable layout of a game: fixed orders for look-ahead and blind vars."""

    lookahead: tuple[str, ...]
    blind: tuple[str, ...]
    env_lookahead: tuple[str, ...]
    env_blind: tuple[str, ...]

    @staticmethod
    def of(spec: GameSpec) -> "Vars":
        return Vars(
            lookahead=spec.env_ahead + spec.sys_ahead,
            blind=spec.env_blind + spec.sys_blind,
            env_lookahead=spec.env_ahead,
            env_blind=spec.env_blind,
        )

    @property
    def ceiling(self) -> int:
        # |V^b| - 1 over *all* blind variables, also for env-only gap functions
        return max(len(self.blind) - 1, 0)

    def frame_terms(self, size: int) -> tuple[Term, ...]:
        return tuple(Term(d, v) for v in self.lookahead for d in range(size))

    def partial_terms(self, size: int) -> tuple[Term, ...]:
        out = []
        for v in self.lookahead:
            for d in range(size - 1):
                out.append(Term(d, v))
            if v in self.env_lookahead:
                out.append(Term(size - 1, v))
        return tuple(out)


@dataclass(frozen=True)
class GapFunction:
    domain_vars: tuple[str, ...]
    values: tuple[int, ...]
    ceiling: int

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.domain_vars, self.values))


@dataclass(frozen=True)
class Frame:
    size: int
    ranks: tuple[int, ...]   # aligned with Vars.frame_terms(size)
    gaps: tuple[tuple[int, ...], ...]  # size entries, aligned with Vars.blind


@dataclass(frozen=True)
class PartialFrame:
    size: int
    ranks: tuple[int, ...]   # aligned with Vars.partial_terms(size)


BOT = Frame(0, (), ())


def _canon_ranks(values: Sequence) -> tuple[int, ...]:
    """Contiguous ranks 0..m induced by comparable values."""
    order = sorted(set(values))
    index = {v: i for i, v in enumerate(order)}
    return tuple(index[v] for v in values)


# --------------------------------------------------------------------------
# gap functions

def gap_function_values(m: Mapping[str, int], vars_order: Sequence[str],
                        ceiling: int) -> tuple[int, ...]:
    """Gap-function value tuple, aligned with vars_order."""
    if not vars_order:
        return ()
    by_value = sorted(vars_order, key=lambda v: (m[v], vars_order.index(v)))
    gp = {by_value[0]: 0}
    for prev, cur in zip(by_value, by_value[1:]):
        gp[cur] = gp[prev] + min(m[cur] - m[prev], ceiling)
    return tuple(gp[v] for v in vars_order)


def gap_function(m: Mapping[str, int], ceiling: int) -> GapFunction:
    """The Def.-1 abstraction of an integer valuation: relative order with
    consecutive gaps ceiled at `ceiling`.  Empty domain gives the empty
    gap function."""
    order = tuple(m)
    return GapFunction(order, gap_function_values(m, order, ceiling), ceiling)


def enumerate_gap_functions(vars_order: Sequence[str], ceiling: int) -> list[tuple[int, ...]]:
    """All gap-function value tuples over vars_order, sorted lexicographically.

    Every returned tuple is realized by some integer mapping (itself), and the
    gap function of any integer mapping is in the list.
    """
    vars_order = tuple(vars_order)
    if not vars_order:
        return [()]
    if ceiling == 0:
        return [tuple(0 for _ in vars_order)]
    out = set()
    for part in _insert_terms([], list(vars_order)):
        for diffs in _diff_choices(len(part) - 1, ceiling):
            value = 0
            val_by_var = {}
            for i, cls in enumerate(part):
                if i > 0:
                    value += diffs[i - 1]
                for v in cls:
                    val_by_var[v] = value
            out.add(tuple(val_by_var[v] for v in vars_order))
    return sorted(out)


def _diff_choices(n: int, ceiling: int):
    if n == 0:
        yield ()
        return
    for first in range(1, ceiling + 1):
        for rest in _diff_choices(n - 1, ceiling):
            yield (first,) + rest


def enumerate_env_gap_functions(spec: GameSpec) -> list[GapFunction]:
    """The set G: gap functions of env-blind valuations, ceiled at |V^b|-1."""
    v = Vars.of(spec)
    return [GapFunction(v.env_blind, t, v.ceiling)
            for t in enumerate_gap_functions(v.env_blind, v.ceiling)]


def gap_compatible(gp: GapFunction, g: Frame, v: Vars) -> bool:
    """True iff gp and g's last gap entry impose the same pairwise differences
    on env-blind variables."""
    if g.size < 1:
        return False
    last = g.gaps[g.size - 1]
    idx = {name: i for i, name in enumerate(v.blind)}
    gpd = gp.as_dict()
    offset = None
    for name in v.env_blind:
        d = gpd[name] - last[idx[name]]
        if offset is None:
            offset = d
        elif d != offset:
            return False
    return True


# --------------------------------------------------------------------------
# frames from concrete windows

def mu_step(window: Sequence[Mapping[str, int]], k: int, v: Vars) -> Frame:
    """Frame induced by the last min(i,k)+1 valuations of a concrete prefix."""
    s = len(window)
    if s > k + 1:
        raise WindowTooLong(f"window of length {s} with k={k}")
    if s == 0:
        return BOT
    values = [window[t.depth][t.var] for t in v.frame_terms(s)]
    gaps = tuple(
        gap_function_values({b: window[j][b] for b in v.blind}, v.blind, v.ceiling)
        for j in range(s)
    )
    return Frame(s, _canon_ranks(values), gaps)


def partial_frame_of(prev_window: Sequence[Mapping[str, Fraction]],
                     em: Mapping[str, Fraction], v: Vars) -> PartialFrame:
    """Partial frame induced by the history window plus the env move."""
    size = len(prev_window) + 1
    vals = []
    for t in v.partial_terms(size):
        if t.depth == size - 1:
            vals.append(em[t.var])
        else:
            vals.append(prev_window[t.depth][t.var])
    return PartialFrame(size, _canon_ranks(vals))


# --------------------------------------------------------------------------
# compatibility relations

def _restricted_preorder(frame: Frame, terms: Sequence[Term], v: Vars) -> tuple[int, ...]:
    all_terms = v.frame_terms(frame.size)
    pos = {t: i for i, t in enumerate(all_terms)}
    return _canon_ranks([frame.ranks[pos[t]] for t in terms])


def one_step_compatible(f: Frame, g: Frame, v: Vars) -> bool:
    """Def.-3 one-step compatibility, extended to (bot, 1-frame) and to the
    vacuous (1-frame, 1-frame) sliding case."""
    if f.size == 0 and g.size == 1:
        return True
    if g.size == f.size + 1 and f.size >= 1:
        shared = v.frame_terms(f.size)
        if _restricted_preorder(g, shared, v) != f.ranks:
            return False
        return g.gaps[: f.size] == f.gaps
    if g.size == f.size and f.size >= 2:
        s = f.size
        shifted = [Term(t.depth + 1, t.var) for t in v.frame_terms(s - 1)]
        if _restricted_preorder(f, shifted, v) != _restricted_preorder(
                g, v.frame_terms(s - 1), v):
            return False
        return f.gaps[1:] == g.gaps[: s - 1]
    if g.size == f.size == 1:
        return True  # windows share no position; all conditions vacuous
    raise SizeMismatch(f"sizes {f.size} -> {g.size}")


def partial_compatible_pre(f: Frame, pf: PartialFrame, v: Vars) -> bool:
    """(f, pf) clauses of the partial-frame definition: growing (sizes s, s+1)
    or sliding (both size s >= 2); bot pairs with any 1-partial-frame."""
    if pf.size == f.size + 1:
        if f.size == 0:
            return True
        shared = v.frame_terms(f.size)
        pos = {t: i for i, t in enumerate(v.partial_terms(pf.size))}
        restricted = _canon_ranks([pf.ranks[pos[t]] for t in shared])
        return restricted == f.ranks
    if pf.size == f.size:
        if f.size == 1:
            return True
        s = f.size
        shifted = [Term(t.depth + 1, t.var) for t in v.frame_terms(s - 1)]
        pos = {t: i for i, t in enumerate(v.partial_terms(pf.size))}
        restricted_pf = _canon_ranks([pf.ranks[pos[t]] for t in v.frame_terms(s - 1)])
        return _restricted_preorder(f, shifted, v) == restricted_pf
    raise SizeMismatch(f"frame size {f.size} with partial size {pf.size}")


def partial_compatible_post(pf: PartialFrame, f: Frame, v: Vars) -> bool:
    """(pf, f) clause: f's order restricted to pf's term set equals pf."""
    if pf.size != f.size or f.size < 1:
        raise SizeMismatch(f"partial size {pf.size} with frame size {f.size}")
    return _restricted_preorder(f, v.partial_terms(pf.size), v) == pf.ranks


# --------------------------------------------------------------------------
# symbolic atom evaluation

def atom_holds(f: Frame, atom: Atom, v: Vars) -> bool:
    """Symbolic truth of an atom on a frame: look-ahead atoms via the order,
    blind atoms via gap entry 0."""
    if atom.lhs.var in v.blind:
        if f.size < 1:
            raise TermOutOfRange("blind atom on the empty frame")
        idx = {name: i for i, name in enumerate(v.blind)}
        a = f.gaps[0][idx[atom.lhs.var]]
        b = f.gaps[0][idx[atom.rhs.var]]
    else:
        if max(atom.lhs.depth, atom.rhs.depth) > f.size - 1:
            raise TermOutOfRange(
                f"atom depth exceeds frame size {f.size}: {atom.lhs} / {atom.rhs}")
        pos = {t: i for i, t in enumerate(v.frame_terms(f.size))}
        a = f.ranks[pos[atom.lhs]]
        b = f.ranks[pos[atom.rhs]]
    return a < b if atom.rel is Rel.Lt else a == b


# --------------------------------------------------------------------------
# enumeration

def _ranks_to_classes(ranks: Sequence[int], items: Sequence) -> list[list]:
    classes: list[list] = [[] for _ in range(max(ranks) + 1)] if ranks else []
    for item, r in zip(items, ranks):
        classes[r].append(item)
    return classes


def _insert_terms(classes: list[list[Term]], new_terms: Sequence[Term]):
    """All preorders extending `classes` with the new terms inserted.

    Yields class lists; each extension is generated exactly once.
    """
    if not new_terms:
        yield classes
        return
    t, rest = new_terms[0], new_terms[1:]
    for i in range(len(classes)):
        joined = [list(c) for c in classes]
        joined[i].append(t)
        yield from _insert_terms(joined, rest)
    for i in range(len(classes) + 1):
        split = [list(c) for c in classes[:i]] + [[t]] + [list(c) for c in classes[i:]]
        yield from _insert_terms(split, rest)


def _classes_to_frame_ranks(classes: list[list[Term]], size: int, v: Vars) -> tuple[int, ...]:
    rank = {}
    for r, cls in enumerate(classes):
        for t in cls:
            rank[t] = r
    return tuple(rank[t] for t in v.frame_terms(size))


def enumerate_frames(size: int, v: Vars) -> list[Frame]:
    """All frames of the given size (alphabet material for the automata)."""
    if size == 0:
        return [BOT]
    orders = []
    for classes in _insert_terms([], list(v.frame_terms(size))):
        orders.append(_classes_to_frame_ranks(classes, size, v))
    gap_choices = enumerate_gap_functions(v.blind, v.ceiling)
    out = []
    for ranks in sorted(set(orders)):
        for gaps in _gap_products(gap_choices, size):
            out.append(Frame(size, ranks, gaps))
    return out


def _gap_products(choices, n):
    if n == 0:
        yield ()
        return
    for head in choices:
        for tail in _gap_products(choices, n - 1):
            yield (head,) + tail


def successor_frames(f: Frame, k: int, v: Vars) -> list[Frame]:
    """All g with (f, g) one-step compatible and size ceil(size+1, k+1).

    Growing keeps f's order and gaps and ranks the new position's terms in
    every consistent way; sliding shifts instead.  The final gap entry ranges
    over every gap function.
    """
    s = f.size
    t = min(s + 1, k + 1)
    new_terms = [Term(t - 1, name) for name in v.lookahead]
    if t == s + 1:
        base = _ranks_to_classes(
            [f.ranks[i] for i in range(len(f.ranks))], list(v.frame_terms(s)))
        gap_prefix = f.gaps
    else:
        old = [Term(d + 1, name) for name in v.lookahead for d in range(s - 1)]
        pos = {tm: i for i, tm in enumerate(v.frame_terms(s))}
        shifted_ranks = _canon_ranks([f.ranks[pos[tm]] for tm in old])
        base = _ranks_to_classes(
            shifted_ranks, [Term(d, name) for name in v.lookahead for d in range(s - 1)])
        gap_prefix = f.gaps[1:]
    out = []
    last_gaps = enumerate_gap_functions(v.blind, v.ceiling)
    seen = set()
    for classes in _insert_terms(base, new_terms):
        ranks = _classes_to_frame_ranks(classes, t, v)
        if ranks in seen:
            continue
        seen.add(ranks)
        for lg in last_gaps:
            out.append(Frame(t, ranks, gap_prefix + (lg,)))
    return out


def partial_frames_after(f: Frame, k: int, v: Vars) -> list[PartialFrame]:
    """All pf with (f, pf) one-step compatible, of size ceil(size+1, k+1)."""
    s = f.size
    t = min(s + 1, k + 1)
    new_terms = [Term(t - 1, name) for name in v.env_lookahead]
    if t == s + 1:
        base = _ranks_to_classes(list(f.ranks), list(v.frame_terms(s)))
    else:
        old = [Term(d + 1, name) for name in v.lookahead for d in range(s - 1)]
        pos = {tm: i for i, tm in enumerate(v.frame_terms(s))}
        shifted_ranks = _canon_ranks([f.ranks[pos[tm]] for tm in old])
        base = _ranks_to_classes(
            shifted_ranks, [Term(d, name) for name in v.lookahead for d in range(s - 1)])
    term_order = {tm: i for i, tm in enumerate(v.partial_terms(t))}
    out = []
    seen = set()
    for classes in _insert_terms(base, new_terms):
        rank = {}
        for r, cls in enumerate(classes):
            for tm in cls:
                rank[tm] = r
        ranks = tuple(rank[tm] for tm in sorted(term_order, key=term_order.get))
        if ranks not in seen:
            seen.add(ranks)
            out.append(PartialFrame(t, ranks))
    return out


def frames_matching_partial(pf: PartialFrame, f: Frame, k: int, v: Vars) -> list[Frame]:
    """Successors of f that are also post-compatible with pf.

    Equivalent to filtering successor_frames(f) by partial_compatible_post,
    but enumerates only the free system terms.
    """
    s = f.size
    t = min(s + 1, k + 1)
    assert pf.size == t
    base = _ranks_to_classes(list(pf.ranks), list(v.partial_terms(t)))
    sys_new = [Term(t - 1, name) for name in v.lookahead
               if name not in v.env_lookahead]
    if t == s + 1:
        gap_prefix = f.gaps
    else:
        gap_prefix = f.gaps[1:]
    last_gaps = enumerate_gap_functions(v.blind, v.ceiling)
    out = []
    seen = set()
    for classes in _insert_terms(base, sys_new):
        ranks = _classes_to_frame_ranks(classes, t, v)
        if ranks in seen:
            continue
        seen.add(ranks)
        for lg in last_gaps:
            out.append(Frame(t, ranks, gap_prefix + (lg,)))
    return out


# --------------------------------------------------------------------------
# realizers

def realize_rational(prev_window: Sequence[Mapping[str, Fraction]],
                     newest_given: Mapping[str, Fraction],
                     target: Frame, v: Vars) -> dict[str, Fraction]:
    """Concrete rational values for the newest position inducing `target`.

    Terms equivalent to an already-valued term copy its value; fresh classes
    get midpoints between neighbours, or min-1 / max+1 beyond the extremes,
    processed in ascending rank order.  Returns the full newest valuation
    (given env values included).
    """
    t = target.size
    if len(prev_window) != t - 1:
        raise IncompatibleTarget(
            f"history of length {len(prev_window)} cannot induce a {t}-frame")
    all_terms = v.frame_terms(t)
    pos = {tm: i for i, tm in enumerate(all_terms)}
    nclasses = max(target.ranks) + 1 if target.ranks else 0
    known: dict[int, Fraction] = {}
    for tm in all_terms:
        if tm.depth < t - 1:
            val = prev_window[tm.depth][tm.var]
        elif tm.var in newest_given:
            val = Fraction(newest_given[tm.var])
        else:
            continue
        r = target.ranks[pos[tm]]
        if r in known and known[r] != val:
            raise IncompatibleTarget(
                f"history values disagree inside rank class {r}")
        known[r] = val
    if known:
        ks = sorted(known)
        for a, b in zip(ks, ks[1:]):
            if known[a] >= known[b]:
                raise IncompatibleTarget("history values contradict the target order")
    value: dict[int, Fraction] = dict(known)
    if not known:
        for r in range(nclasses):
            value[r] = Fraction(r)
    else:
        lowest = min(known)
        below = [r for r in range(lowest) ]
        for i, r in enumerate(below):
            value[r] = known[lowest] - (len(below) - i)
        prev_r = lowest
        for r in range(lowest + 1, nclasses):
            if r in known:
                prev_r = r
                continue
            upper = next((u for u in range(r + 1, nclasses) if u in known), None)
            if upper is None:
                value[r] = value[prev_r] + 1
            else:
                value[r] = (value[prev_r] + known[upper]) / 2
            prev_r = r
    out = {}
    for name in v.lookahead:
        out[name] = value[target.ranks[pos[Term(t - 1, name)]]]
    for name, val in newest_given.items():
        assert out[name] == Fraction(val)
    return out


def realize_blind_int(em: Mapping[str, int], target: GapFunction,
                      v: Vars) -> dict[str, int]:
    """Extend an env-blind integer valuation so its gap function is exactly
    `target` (over all blind variables).

    Raises NotGapCompatible if the env differences disagree, and
    UnachievableGap when a system class sits strictly inside an env gap of
    actual width > ceiling (no integer placement reproduces the ceiled gaps
    then; see the gap-subadditivity note in the docs).
    """
    ceiling = target.ceiling
    tgt = target.as_dict()
    env = list(em)
    if set(env) - set(target.domain_vars):
        raise NotGapCompatible("env valuation names variables outside the target")
    em_gp = gap_function_values(em, env, ceiling)
    em_gp = dict(zip(env, em_gp))
    if env:
        offs = {x: tgt[x] - em_gp[x] for x in env}
        if len(set(offs.values())) > 1:
            raise NotGapCompatible(
                f"target differences on env vars disagree with the valuation: {offs}")
    result: dict[str, int] = dict(em)
    sys_vars = [x for x in target.domain_vars if x not in em]
    if not sys_vars:
        _check_roundtrip(result, target, ceiling)
        return result
    if not env:
        for x in sys_vars:
            result[x] = tgt[x]
        _check_roundtrip(result, target, ceiling)
        return result
    env_sorted = sorted(env, key=lambda x: (em[x], env.index(x)))
    env_classes: list[tuple[int, int]] = []  # (target value, em value), distinct
    for x in env_sorted:
        pair = (tgt[x], em[x])
        if not env_classes or env_classes[-1] != pair:
            env_classes.append(pair)
    for x in sys_vars:
        g = tgt[x]
        exact = next((emv for (t_, emv) in env_classes if t_ == g), None)
        if exact is not None:
            result[x] = exact
            continue
        below = [(t_, emv) for (t_, emv) in env_classes if t_ < g]
        above = [(t_, emv) for (t_, emv) in env_classes if t_ > g]
        if below and above:
            (tb, eb), (ta, ea) = below[-1], above[0]
            if ea - eb > ceiling:
                raise UnachievableGap(
                    f"{x}: target places it strictly inside an env gap of width "
                    f"{ea - eb} > ceiling {ceiling}")
            result[x] = eb + (g - tb)
        elif below:
            tb, eb = below[-1]
            result[x] = eb + (g - tb)
        else:
            ta, ea = above[0]
            result[x] = ea - (ta - g)
    _check_roundtrip(result, target, ceiling)
    return result


def _check_roundtrip(result: Mapping[str, int], target: GapFunction, ceiling: int):
    got = gap_function_values(result, target.domain_vars, ceiling)
    if got != target.values:
        raise UnachievableGap(
            f"no integer placement reproduces the target gaps: got {got}, "
            f"wanted {target.values}")


# --------------------------------------------------------------------------
# serialization

def frame_to_json(f: Frame, v: Vars) -> dict:
    return {
        "size": f.size,
        "ranks": {str(t): r for t, r in zip(v.frame_terms(f.size), f.ranks)},
        "gaps": [dict(zip(v.blind, g)) for g in f.gaps],
    }


def partial_frame_to_json(pf: PartialFrame, v: Vars) -> dict:
    return {
        "size": pf.size,
        "ranks": {str(t): r for t, r in zip(v.partial_terms(pf.size), pf.ranks)},
    }
