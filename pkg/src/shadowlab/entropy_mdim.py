"""Separated sets, Bowen-ball covers, entropy at a scale, Katok counts and
metric mean dimension profiles.

Separation is strict (``d_n > eps``) and balls are open (``d_n < eps``);
a pair at distance exactly ``eps`` is neither separated nor in the ball.
For 0/1-weighted shifts both relations reduce to prefix comparisons, which
gives exact answers without pairwise matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core_spaces import TOL, DynamicalSystem, FiniteSystem, SymbolicSystem, TentMap
from .errors import BudgetExceeded, Infeasible, InvalidArgument, ResolutionError

DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class SeparatedSet:
    points: tuple
    indices: tuple[int, ...]
    n: int
    eps: float
    mode: str  # "exact" | "greedy-lower-bound"

    def __len__(self) -> int:
        return len(self.points)


# --------------------------------------------------------------------------
# conflict structure
# --------------------------------------------------------------------------


def _is_prefix_shift(system) -> bool:
    return isinstance(system, SymbolicSystem) and system.ultrametric


def _prefix_classes(system: SymbolicSystem, sample: Sequence, depth: int) -> np.ndarray:
    """Class label of each sample point by its first ``depth`` symbols (labels in first-seen order)."""
    if depth <= 0 or len(sample) == 0:
        return np.zeros(len(sample), dtype=np.int64)
    W = system.windows(list(sample), depth)
    _, first, inv = np.unique(W, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    # relabel so that class ids follow the first occurrence in the sample
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inv]


def _groups(system, sample, n: int, eps: float) -> list[np.ndarray] | None:
    """Blocks of sample indices such that points in different blocks are always separated."""
    if isinstance(system, SymbolicSystem) and not system.ultrametric:
        wmin = min(
            (system.weight(a, b) for a in system.live for b in system.live if a != b), default=math.inf
        )
        # distinct n-prefixes already force d_n >= wmin > eps
        if wmin > eps:
            if not len(sample):
                return []
            labels = _prefix_classes(system, sample, n)
            order = np.argsort(labels, kind="stable")
            cuts = np.flatnonzero(np.diff(labels[order])) + 1
            return np.split(order, cuts)
    return None


def conflict_matrix(system: DynamicalSystem, points: Sequence, n: int, eps: float) -> np.ndarray:
    """``C[i, j]`` iff ``i != j`` and the pair is not ``(n, eps)``-separated."""
    D = system.bowen_matrix(list(points), n)
    C = D <= eps if system.exact else D <= eps + TOL
    np.fill_diagonal(C, False)
    return C


# --------------------------------------------------------------------------
# maximum independent set
# --------------------------------------------------------------------------


def _bits(C: np.ndarray) -> list[int]:
    out = []
    for row in C:
        b = 0
        for j in np.flatnonzero(row):
            b |= 1 << int(j)
        out.append(b)
    return out


def _lowest(b: int) -> int:
    return (b & -b).bit_length() - 1


def _iter_bits(b: int):
    while b:
        low = b & -b
        yield low.bit_length() - 1
        b ^= low


def _clique_cover_bound(adj: list[int], P: int) -> int:
    k = 0
    while P:
        v = _lowest(P)
        cand = P & adj[v]
        P &= ~(1 << v)
        while cand:
            u = _lowest(cand)
            P &= ~(1 << u)
            cand &= adj[u]
        k += 1
    return k


def max_independent_set(C: np.ndarray, node_budget: int = 100 * DEFAULT_BUDGET) -> list[int]:
    """Maximum independent set of the conflict graph ``C`` by branch and bound.

    Branching takes the vertex of maximum degree (lowest index on ties),
    including it first.  Raises :class:`BudgetExceeded` carrying the best set
    found when more than ``node_budget`` search nodes are expanded.
    """
    N = len(C)
    adj = _bits(C)
    best = greedy_independent_set(C)
    best_mask = sum(1 << i for i in best)
    state = {"best": len(best), "mask": best_mask, "nodes": 0}

    def solve(P: int, size: int, chosen: int):
        state["nodes"] += 1
        if state["nodes"] > node_budget:
            raise BudgetExceeded(
                "exact separated-set search exceeded its budget; use greedy mode",
                best=sorted(_iter_bits(state["mask"])),
            )
        # reductions: vertices of degree <= 1 inside P can always be taken
        changed = True
        while changed and P:
            changed = False
            for v in _iter_bits(P):
                if (adj[v] & P).bit_count() <= 1:
                    chosen |= 1 << v
                    size += 1
                    P &= ~((1 << v) | adj[v])
                    changed = True
                    break
        if not P:
            if size > state["best"]:
                state["best"], state["mask"] = size, chosen
            return
        if size + _clique_cover_bound(adj, P) <= state["best"]:
            return
        v = max(_iter_bits(P), key=lambda u: ((adj[u] & P).bit_count(), -u))
        solve(P & ~((1 << v) | adj[v]), size + 1, chosen | (1 << v))
        solve(P & ~(1 << v), size, chosen)

    if N:
        solve((1 << N) - 1, 0, 0)
    return sorted(_iter_bits(state["mask"]))


def greedy_independent_set(C: np.ndarray) -> list[int]:
    """First-fit maximal independent set in index order."""
    taken: list[int] = []
    blocked = np.zeros(len(C), dtype=bool)
    for i in range(len(C)):
        if not blocked[i]:
            taken.append(i)
            blocked |= C[i]
    return taken


def _solve_block(C: np.ndarray, mode: str, budget: int) -> list[int]:
    """Independent set of one block, splitting into connected components."""
    if mode == "greedy":
        return greedy_independent_set(C)
    ncomp, labels = connected_components(csr_matrix(C), directed=False)
    out: list[int] = []
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        sub = C[np.ix_(idx, idx)]
        k = len(idx)
        if k == 1 or sub.sum() == k * (k - 1):
            out.append(int(idx[0]))  # clique: any one vertex
            continue
        if k > budget:
            raise BudgetExceeded(
                f"conflict component with {k} nodes exceeds the exact budget; use greedy mode",
                best=None,
            )
        out.extend(int(idx[i]) for i in max_independent_set(sub, 100 * budget))
    return sorted(out)


def max_separated_set(
    system: DynamicalSystem,
    sample: Sequence,
    n: int,
    eps: float,
    mode: str = "exact",
    budget: int = DEFAULT_BUDGET,
) -> SeparatedSet:
    """Largest ``(n, eps)``-separated subset of ``sample``.

    ``mode="exact"`` solves maximum independent set on the conflict graph;
    ``mode="greedy"`` returns a first-fit maximal set (a lower bound).
    """
    if mode not in ("exact", "greedy"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    if n < 1 or not eps > 0:
        raise InvalidArgument("need n >= 1 and eps > 0")
    sample = list(sample)
    if not sample:
        raise InvalidArgument("sample must be nonempty")
    label = "exact" if mode == "exact" else "greedy-lower-bound"
    if _is_prefix_shift(system):
        # separation is "differ within the first c symbols": classes are cliques,
        # so one point per class is both the greedy and the optimal answer
        c = system.separation_prefix_length(n, eps)
        if c is None:
            idx = [0]
        else:
            labels = _prefix_classes(system, sample, c)
            _, first = np.unique(labels, return_index=True)
            idx = sorted(int(i) for i in first)
        return SeparatedSet(tuple(sample[i] for i in idx), tuple(idx), n, eps, "exact")
    groups = _groups(system, sample, n, eps)
    if groups is None:
        groups = [np.arange(len(sample))]
    idx: list[int] = []
    for g in groups:
        if len(g) == 1:
            idx.append(int(g[0]))
            continue
        C = conflict_matrix(system, [sample[i] for i in g], n, eps)
        idx.extend(int(g[i]) for i in _solve_block(C, mode, budget))
    idx.sort()
    return SeparatedSet(tuple(sample[i] for i in idx), tuple(idx), n, eps, label)


def is_separated(system: DynamicalSystem, points: Sequence, n: int, eps: float) -> bool:
    if len(points) < 2:
        return True
    return not conflict_matrix(system, points, n, eps).any()


# --------------------------------------------------------------------------
# entropy at a scale
# --------------------------------------------------------------------------


def default_sample(system: DynamicalSystem, n: int, eps: float) -> list:
    """A sample on which ``s(n, eps)`` and the ball cover count are resolved.

    0/1 shifts: one point per admissible word long enough to decide both
    separation and ball membership, so the counts are exact.  Box shifts:
    one point per ``n``-word (a lower bound).  Tent map: a uniform grid
    fine enough for ``n`` doublings.  Finite systems: every point.
    """
    if _is_prefix_shift(system):
        c = system.separation_prefix_length(n, eps) or 1
        return system.cylinder_sample(max(c, system.ball_prefix_length(n, eps), 1))
    if isinstance(system, SymbolicSystem):
        return system.cylinder_sample(n)
    if isinstance(system, FiniteSystem):
        return list(system.points)
    if isinstance(system, TentMap):
        return system.sample(min(eps, 0.5) * 2.0 ** -n)
    return list(system.sample(eps / 2))


def extrapolate(ns: Sequence[int], rates: Sequence[float]) -> float:
    """Desk surrogate for ``limsup_n``: the maximum rate over the top half of ``ns``."""
    if not len(ns):
        raise InvalidArgument("n_range must be nonempty")
    order = np.argsort(ns, kind="stable")
    top = order[len(order) // 2 :]
    return float(max(rates[i] for i in top))


def min_ball_cover(system: DynamicalSystem, sample: Sequence, n: int, eps: float) -> tuple[int, bool]:
    """Fewest ``(n, eps)``-balls centred at sample points covering the sample.

    Returns ``(count, exact)``; non-ultrametric instances use greedy set
    cover, an upper bound.
    """
    sample = list(sample)
    if not sample:
        return 0, True
    if _is_prefix_shift(system):
        b = system.ball_prefix_length(n, eps)
        return int(_prefix_classes(system, sample, b).max()) + 1, True
    groups = _groups(system, sample, n, eps) or [np.arange(len(sample))]
    total = 0
    exact = True
    for g in groups:
        if len(g) == 1:
            total += 1
            continue
        D = system.bowen_matrix([sample[i] for i in g], n)
        cov = D < eps if system.exact else D < eps - TOL
        total += len(_greedy_cover(cov, np.ones(len(g))))
        exact = False
    return total, exact


@dataclass(frozen=True)
class EntropyProfile:
    rows: tuple  # dicts with eps, n, separated, cover, rate, mode
    h: dict  # eps -> extrapolated h(f, eps)
    n_range: tuple

    def eps_values(self) -> list[float]:
        return sorted(self.h, reverse=True)

    def series(self, eps: float) -> list[dict]:
        return [r for r in self.rows if r["eps"] == eps]

    def table(self) -> list[dict]:
        """CSV-ready rows: eps,n,separated,cover,rate,ratio,mode."""
        out = []
        for r in self.rows:
            ratio = r["rate"] / -math.log(r["eps"]) if r["eps"] < 1 else float("nan")
            out.append({**r, "ratio": ratio})
        return out


def entropy_profile(
    system: DynamicalSystem,
    eps_list: Sequence[float],
    n_range: Sequence[int],
    mode: str = "exact",
    sample_fn: Callable[[DynamicalSystem, int, float], Sequence] | None = None,
    with_cover: bool = True,
    budget: int = DEFAULT_BUDGET,
) -> EntropyProfile:
    n_range = tuple(int(n) for n in n_range)
    if not n_range or list(n_range) != sorted(n_range) or n_range[0] < 1:
        raise InvalidArgument("n_range must be a nonempty ascending range of positive integers")
    sample_fn = sample_fn or default_sample
    rows, h = [], {}
    for eps in eps_list:
        rates = []
        for n in n_range:
            sample = sample_fn(system, n, eps)
            if not len(sample):
                raise ResolutionError("empty sample at the required resolution", eps=eps, n=n)
            sep = max_separated_set(system, sample, n, eps, mode, budget)
            cover, cover_exact = min_ball_cover(system, sample, n, eps) if with_cover else (0, True)
            rate = math.log(len(sep)) / n
            rates.append(rate)
            rows.append(
                {"eps": float(eps), "n": n, "separated": len(sep), "cover": cover, "rate": rate, "mode": sep.mode}
            )
        h[float(eps)] = extrapolate(n_range, rates)
    return EntropyProfile(tuple(rows), h, n_range)


def entropy_at_scale(
    system: DynamicalSystem,
    eps: float,
    n_range: Sequence[int],
    mode: str = "exact",
    sample_fn: Callable | None = None,
) -> float:
    """Extrapolated ``limsup (1/n) log s(n, eps)`` over ``n_range``."""
    return entropy_profile(system, [eps], n_range, mode, sample_fn, with_cover=False).h[float(eps)]


def matched_profile(
    system_at: Callable[[float], DynamicalSystem],
    eps_list: Sequence[float],
    n_range: Sequence[int],
    mode: str = "exact",
) -> EntropyProfile:
    """Profile where each scale uses its own system (e.g. box shifts with levels matched to eps)."""
    rows, h = [], {}
    for eps in eps_list:
        p = entropy_profile(system_at(eps), [eps], n_range, mode)
        rows.extend(p.rows)
        h.update(p.h)
    return EntropyProfile(tuple(rows), h, tuple(n_range))


def box_shift_for(eps: float):
    """Box shift whose level spacing ``1/(m-1)`` just exceeds ``eps = 2**-k`` (``m = 2**k``)."""
    from .core_spaces import BoxShift

    k = round(-math.log2(eps))
    if k < 1 or not math.isclose(eps, 2.0**-k):
        raise InvalidArgument("box-shift matching needs a dyadic eps <= 1/2")
    return BoxShift(2**k)


# --------------------------------------------------------------------------
# Bowen covers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BowenCoverValue:
    t: float
    n: int
    eps: float
    value: float
    cover: tuple  # (center, length v) pairs
    exact: bool = True


def _greedy_cover(cov: np.ndarray, weights: np.ndarray) -> list[int]:
    """Weighted greedy set cover; ``cov[c, i]`` iff candidate ``c`` covers point ``i``."""
    N = cov.shape[1]
    if not cov.any(axis=0).all():
        raise Infeasible("some point is covered by no candidate ball")
    covered = np.zeros(N, dtype=bool)
    chosen: list[int] = []
    while not covered.all():
        gain = (cov & ~covered).sum(axis=1)
        with np.errstate(divide="ignore"):
            price = np.where(gain > 0, weights / np.maximum(gain, 1), np.inf)
        c = int(np.argmin(price))
        chosen.append(c)
        covered |= cov[c]
    # drop balls made redundant by later choices, heaviest first
    for c in sorted(chosen, key=lambda c: -weights[c]):
        rest = [d for d in chosen if d != c]
        if rest and cov[rest].any(axis=0).all():
            chosen = rest
    return chosen


def bowen_cover_value(
    system: DynamicalSystem,
    sample: Sequence,
    t: float,
    n: int,
    eps: float,
    v_max: int | None = None,
) -> BowenCoverValue:
    """Smallest found ``sum exp(-t v)`` over covers by balls ``B_v(x, eps)``, ``n <= v <= v_max``.

    Centres are sample points.  On 0/1 shifts the balls are nested prefix
    classes and a dynamic programme over the prefix tree gives the exact
    optimum; otherwise weighted greedy cover plus pruning (an upper bound).
    """
    if t < 0:
        raise InvalidArgument("t must be nonnegative")
    v_max = n if v_max is None else int(v_max)
    if v_max < n:
        raise InvalidArgument("v_max must be at least n")
    sample = list(sample)
    if not sample:
        return BowenCoverValue(t, n, eps, 0.0, ())
    lengths = list(range(n, v_max + 1))
    if _is_prefix_shift(system):
        return _prefix_cover(system, sample, t, n, eps, lengths)
    cand, weights, rows = [], [], []
    for v in lengths:
        D = system.bowen_matrix(sample, v)
        cov = D < eps if system.exact else D < eps - TOL
        for i in range(len(sample)):
            cand.append((i, v))
            weights.append(math.exp(-t * v))
            rows.append(cov[i])
    chosen = _greedy_cover(np.array(rows), np.array(weights))
    chosen.sort(key=lambda c: cand[c])
    value = float(sum(weights[c] for c in chosen))
    cover = tuple((sample[cand[c][0]], cand[c][1]) for c in chosen)
    return BowenCoverValue(t, n, eps, value, cover, exact=False)


def _prefix_cover(system, sample, t, n, eps, lengths) -> BowenCoverValue:
    labels = [_prefix_classes(system, sample, system.ball_prefix_length(v, eps)) for v in lengths]
    first = [np.unique(lab, return_index=True)[1] for lab in labels]
    top = len(lengths) - 1
    cost = [None] * len(lengths)
    use_ball = [None] * len(lengths)
    k = int(labels[top].max()) + 1
    cost[top] = np.full(k, math.exp(-t * lengths[top]))
    use_ball[top] = np.ones(k, dtype=bool)
    for lvl in range(top - 1, -1, -1):
        parent_of_child = labels[lvl][first[lvl + 1]]
        sums = np.bincount(parent_of_child, weights=cost[lvl + 1], minlength=len(first[lvl]))
        w = math.exp(-t * lengths[lvl])
        use_ball[lvl] = w <= sums
        cost[lvl] = np.minimum(w, sums)
    cover = []

    def emit(lvl: int, cls: int):
        if use_ball[lvl][cls]:
            cover.append((int(first[lvl][cls]), lengths[lvl]))
            return
        for child in np.unique(labels[lvl + 1][labels[lvl] == cls]):
            emit(lvl + 1, int(child))

    for cls in range(len(first[0])):
        emit(0, cls)
    cover.sort()
    value = float(sum(math.exp(-t * v) for _, v in cover))
    return BowenCoverValue(t, n, eps, value, tuple((sample[i], v) for i, v in cover))


@dataclass(frozen=True)
class NoncompactEstimate:
    value: float
    n: int
    bracket: tuple[float, float]
    diagnostic: str = ""

    def __float__(self) -> float:
        return self.value


def bowen_entropy_noncompact(
    system: DynamicalSystem,
    sample: Sequence,
    eps: float,
    n: int,
    t_tolerance: float = 1e-6,
    v_max: int | None = None,
) -> NoncompactEstimate:
    """Critical ``t`` where the cover value at horizon ``n`` drops to 1 (bisection)."""

    def C(t):
        return bowen_cover_value(system, sample, t, n, eps, v_max).value

    if C(0.0) <= 1.0:
        return NoncompactEstimate(0.0, n, (0.0, 0.0))
    lo, hi = 0.0, 1.0
    while C(hi) > 1.0:
        lo, hi = hi, 2 * hi
        if hi > 1e3:
            return NoncompactEstimate(hi, n, (lo, hi), "cover value never drops to 1; not bracketed")
    while hi - lo > t_tolerance:
        mid = (lo + hi) / 2
        if C(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return NoncompactEstimate(hi, n, (lo, hi))


# --------------------------------------------------------------------------
# Katok
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KatokCover:
    count: int
    centers: tuple
    mass: float
    exact: bool


def katok_cover(
    system: DynamicalSystem,
    measure,
    n: int,
    eps: float,
    delta_mass: float,
    budget: int = 200_000,
) -> KatokCover:
    """Fewest ``(n, eps)``-balls (centred at atoms) carrying mass at least ``1 - delta_mass``."""
    if not 0 < delta_mass < 1:
        raise InvalidArgument("delta_mass must lie in (0, 1)")
    pts = list(measure.points)
    w = np.asarray(measure.weights, dtype=float)
    keep = w > 0
    pts = [p for p, k in zip(pts, keep) if k]
    w = w[keep]
    if not pts:
        raise InvalidArgument("measure support is empty")
    need = 1.0 - delta_mass - 1e-12
    if _is_prefix_shift(system):
        # balls are prefix classes: heaviest classes first is optimal
        lab = _prefix_classes(system, pts, system.ball_prefix_length(n, eps))
        mass = np.bincount(lab, weights=w)
        first = np.unique(lab, return_index=True)[1]
        order = sorted(range(len(mass)), key=lambda c: (-mass[c], c))
        total, chosen = 0.0, []
        for c in order:
            chosen.append(c)
            total += mass[c]
            if total >= need:
                break
        return KatokCover(len(chosen), tuple(pts[first[c]] for c in chosen), float(total), True)
    D = system.bowen_matrix(pts, n)
    cov = D < eps if system.exact else D < eps - TOL
    masses = cov.astype(float) @ w
    # exhaustive search by increasing size while the number of subsets fits the budget
    from itertools import combinations

    N = len(pts)
    for k in range(1, N + 1):
        if math.comb(N, k) > budget:
            break
        for combo in combinations(range(N), k):
            m = float(w[cov[list(combo)].any(axis=0)].sum())
            if m >= need:
                return KatokCover(k, tuple(pts[i] for i in combo), m, True)
    covered = np.zeros(N, dtype=bool)
    chosen = []
    while float(w[covered].sum()) < need:
        gain = (cov & ~covered).astype(float) @ w
        c = int(np.argmax(gain))
        chosen.append(c)
        covered |= cov[c]
    del masses
    return KatokCover(len(chosen), tuple(pts[i] for i in chosen), float(w[covered].sum()), False)


def katok_complexity(system: DynamicalSystem, measure, n: int, eps: float, delta_mass: float) -> int:
    return katok_cover(system, measure, n, eps, delta_mass).count


def katok_entropy(
    system: DynamicalSystem,
    measure,
    eps_list: Sequence[float],
    delta_mass: float,
    n_range: Sequence[int],
) -> list[tuple[float, float]]:
    out = []
    for eps in eps_list:
        rates = [math.log(katok_complexity(system, measure, n, eps, delta_mass)) / n for n in n_range]
        out.append((float(eps), extrapolate(list(n_range), rates)))
    return out


# --------------------------------------------------------------------------
# metric mean dimension
# --------------------------------------------------------------------------


def mdim_profile(profile: EntropyProfile) -> tuple[float, float, list[dict]]:
    """Upper/lower ratio ``h(f, eps) / -log eps`` over the finest half of the eps grid."""
    eps = sorted(profile.h, reverse=True)
    if len(eps) < 3:
        raise InvalidArgument("need at least three eps values")
    if any(e >= 1 for e in eps):
        raise InvalidArgument("eps must be below 1 (-log eps would vanish)")
    q = [eps[i + 1] / eps[i] for i in range(len(eps) - 1)]
    if not all(math.isclose(r, q[0], rel_tol=1e-9) for r in q):
        raise InvalidArgument("eps grid must be a geometric progression")
    table = [{"eps": e, "h": profile.h[e], "ratio": profile.h[e] / -math.log(e)} for e in eps]
    fine = [r["ratio"] for r in table[len(table) // 2 :]]
    return max(fine), min(fine), table
