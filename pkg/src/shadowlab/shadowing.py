"""Pseudo-orbits, delta-chains and shadowing.

A pseudo-orbit is a finite list of states.  For symbolic systems the states
may also be given as a 2-D integer array whose rows are the leading symbols
of each state (a window representation); every query made here only looks
at a bounded number of leading symbols, so windows of sufficient depth give
exact answers.

Shadowing backends:

* full shifts and SFTs -- exact.  A ``delta``-pseudo-orbit agrees on blocks
  of ``c`` symbols from one step to the next, so the sequence of leading
  symbols is a true orbit tracing it to within ``2**-(c+1)``.
* tent map -- nested preimage intervals in exact rational arithmetic.

Other numeric maps are rejected.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .core_spaces import (
    DynamicalSystem,
    ShiftPoint,
    SymbolicSystem,
    TentMap,
    periodic_point,
    shift_point,
)
from .errors import (
    BudgetExceeded,
    Infeasible,
    InvalidArgument,
    NotChainConnected,
    NotClosable,
    ShadowingUnsupported,
)


@dataclass(frozen=True)
class PseudoOrbit:
    points: Any  # tuple of states, or (N, D) symbol windows for shifts
    delta: float
    period: int | None = None
    system: Any = field(default=None, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    def to_json(self, system: DynamicalSystem) -> dict:
        if isinstance(self.points, np.ndarray):
            pts = ["".join(map(str, row)) for row in self.points.tolist()]
        else:
            pts = [system.point_to_json(p) for p in self.points]
        out = {"points": pts, "delta": self.delta}
        if self.period is not None:
            out["period"] = self.period
        return out

    @classmethod
    def from_json(cls, system: DynamicalSystem, doc: dict) -> "PseudoOrbit":
        pts = tuple(system.parse_point(p) for p in doc["points"])
        return cls(pts, float(doc["delta"]), doc.get("period"))


@dataclass(frozen=True)
class Region:
    """A labelled subset of the state space given by a membership test."""

    label: str
    contains: Callable[[Any], bool] = field(compare=False, repr=False)

    def __call__(self, x) -> bool:
        return self.contains(x)


def cylinder(word: Sequence[int]) -> Region:
    word = tuple(int(s) for s in word)

    def member(x):
        if isinstance(x, ShiftPoint):
            return x.symbols(len(word)) == word
        return tuple(int(s) for s in x[: len(word)]) == word

    return Region("[" + "".join(map(str, word)) + "]", member)


def point_set(points: Iterable, label: str | None = None) -> Region:
    pts = frozenset(points)
    return Region(label or "{" + ",".join(sorted(map(str, pts))) + "}", lambda x: x in pts)


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _is_shift(system) -> bool:
    return isinstance(system, SymbolicSystem) and system.ultrametric


def step_depth(system: SymbolicSystem, delta: float) -> int:
    """Symbols on which consecutive states must agree for a delta-step."""
    return system.ball_prefix_length(1, delta)


def windows_of(system: SymbolicSystem, points, depth: int) -> np.ndarray:
    if isinstance(points, np.ndarray):
        if points.shape[1] < depth:
            raise InvalidArgument(f"symbol windows of depth {points.shape[1]} cannot resolve depth {depth}")
        return points[:, :depth]
    return system.windows(list(points), depth)


def transition_matrix(system: DynamicalSystem, nodes: Sequence, delta: float) -> np.ndarray:
    """Boolean ``E[u, v] = d(f(u), v) < delta`` over ``nodes``."""
    images = [system.step(u) for u in nodes]
    D = system.metric_matrix(images, nodes)
    if system.exact:
        return D < delta
    return D < delta - 1e-12


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------


def step_errors(system: DynamicalSystem, points) -> np.ndarray:
    """``d(f(x_i), x_{i+1})`` for each consecutive pair (generic systems)."""
    pts = list(points)
    return np.array([system.metric(system.step(a), b) for a, b in zip(pts, pts[1:])])


def validate_pseudo_orbit(system: DynamicalSystem, points, delta: float, period: int | None = None) -> bool:
    """True iff ``d(f(x_i), x_{i+1}) < delta`` at every step (and across the wrap if periodic)."""
    if len(points) == 0:
        raise InvalidArgument("pseudo-orbit must be nonempty")
    if not delta > 0:
        raise InvalidArgument("delta must be positive")
    if _is_shift(system):
        if delta > 1:
            return True
        c = step_depth(system, delta)
        W = windows_of(system, points, c + 1)
        ok = bool(np.all(W[:-1, 1 : c + 1] == W[1:, :c]))
        if period is not None:
            ok = ok and bool(np.all(W[period - 1, 1 : c + 1] == W[0, :c]))
        return ok
    pts = list(points)
    if period is not None:
        pts = pts[:period] + [pts[0]]
    return all(system.lt(e, delta) for e in step_errors(system, pts))


def find_delta_chain(
    system: DynamicalSystem,
    source,
    target,
    delta: float,
    resolution: float,
    nodes: Sequence | None = None,
) -> PseudoOrbit:
    """Shortest delta-chain (at least one step) from ``source`` to ``target``.

    ``source``/``target`` are point collections or :class:`Region` objects.
    The search runs breadth-first over the delta-transition graph of
    ``system.sample(resolution)`` (plus any explicitly listed endpoints);
    ties go to the lowest node index.
    """
    if nodes is None:
        nodes = list(system.sample(resolution))
    nodes = list(nodes)
    seen = set(nodes)
    for group in (source, target):
        if not isinstance(group, Region):
            for p in group:
                if p not in seen:
                    nodes.append(p)
                    seen.add(p)
    src = _members(source, nodes)
    tgt = set(_members(target, nodes))
    if not src or not tgt:
        raise InvalidArgument("source and target must meet the sample")
    E = transition_matrix(system, nodes, delta)
    parent: dict[int, int] = {}
    depth = {s: 0 for s in src}
    queue = deque(src)
    hit = None
    # first layer is expanded from every source so that one-step chains are found
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(E[u]):
            v = int(v)
            if v in tgt:
                parent[("t", v)] = u
                hit = ("t", v)
                break
            if v not in depth:
                depth[v] = depth[u] + 1
                parent[v] = u
                queue.append(v)
        if hit is not None:
            break
    if hit is None:
        raise NotChainConnected(
            "no delta-chain between the sets at this delta", delta=delta, resolution=resolution
        )
    path = [hit[1]]
    cur = parent[hit]
    path.append(cur)
    while cur in parent:
        cur = parent[cur]
        path.append(cur)
    path.reverse()
    return PseudoOrbit(tuple(nodes[i] for i in path), delta, system=system)


def _members(group, nodes) -> list[int]:
    if isinstance(group, Region):
        return [i for i, p in enumerate(nodes) if group(p)]
    wanted = set(group)
    return [i for i, p in enumerate(nodes) if p in wanted]


# --------------------------------------------------------------------------
# shadowing
# --------------------------------------------------------------------------


def tracing_bound(system: DynamicalSystem, delta: float) -> float:
    """Guaranteed tracing error of the exact shift backend for delta-pseudo-orbits."""
    if not _is_shift(system):
        raise ShadowingUnsupported(f"no tracing bound for {system.kind}")
    if delta > 1:
        return 1.0
    return 2.0 ** -(step_depth(system, delta) + 1)


def shadowing_delta(system: DynamicalSystem, eps: float, safety: float = 1.0) -> float:
    """Largest dyadic delta with tracing bound at most ``eps / safety`` and below ``eps``.

    With ``safety=4`` every delta-pseudo-orbit stays within ``eps/4``; the
    tracing check itself is strict, hence the second condition.
    """
    target = eps / safety
    j = 0
    while tracing_bound(system, 2.0**-j) > target or tracing_bound(system, 2.0**-j) >= eps:
        j += 1
    return 2.0**-j


def tracing_errors(system: DynamicalSystem, y, points, horizon: int | None = None) -> np.ndarray:
    """``d(x_i, f^i y)`` along the pseudo-orbit (generic systems)."""
    pts = list(points)[: horizon or len(points)]
    out = []
    for p in pts:
        out.append(system.metric(p, y))
        y = system.step(y)
    return np.array(out)


def traces(system: DynamicalSystem, y, points, eps: float, period: int | None = None) -> bool:
    """True iff ``d(x_i, f^i y) < eps`` for every index of the pseudo-orbit."""
    if _is_shift(system):
        if eps > 1:
            return True
        c = system.ball_prefix_length(1, eps)
        W = windows_of(system, points, c)
        N = len(W)
        seq = np.array(y.symbols(N + c), dtype=W.dtype)
        orbit = np.lib.stride_tricks.sliding_window_view(seq, c)[:N]
        return bool(np.all(orbit == W))
    return all(system.lt(e, eps) for e in tracing_errors(system, y, points))


def _leading_symbols(system, points) -> list[int]:
    if isinstance(points, np.ndarray):
        return points[:, 0].tolist()
    return [p.symbol(0) for p in points]


def shadow_point(system: DynamicalSystem, pseudo_orbit: PseudoOrbit, eps: float):
    """A point whose orbit ``eps``-traces the pseudo-orbit at every index."""
    pts, delta = pseudo_orbit.points, pseudo_orbit.delta
    if not validate_pseudo_orbit(system, pts, delta, pseudo_orbit.period):
        raise InvalidArgument("input is not a delta-pseudo-orbit")
    if _is_exact_orbit(system, pts):
        return pts[0]
    if _is_shift(system):
        if not tracing_bound(system, delta) < eps:
            raise ShadowingUnsupported(
                "delta too coarse for the requested eps", delta=delta, eps=eps,
                bound=tracing_bound(system, delta),
            )
        lead = _leading_symbols(system, pts)
        if pseudo_orbit.period is not None:
            y = periodic_point(lead[: pseudo_orbit.period])
        else:
            last = pts[-1]
            if isinstance(last, ShiftPoint):
                y = shift_point(tuple(lead[:-1]) + last.word, last.tail)
            else:
                y = system.point(tuple(lead[:-1]) + tuple(int(s) for s in last))
        if not system.contains(y):
            raise Infeasible("concatenated leading symbols leave the subshift")
        if not traces(system, y, pts, eps):
            raise Infeasible("shadow point failed post-verification")
        return y
    if isinstance(system, TentMap):
        y = _tent_shadow(system, list(pts), eps)
        if not traces(system, y, pts, eps):
            raise ShadowingUnsupported("tent refinement failed post-verification", eps=eps)
        return y
    raise ShadowingUnsupported(f"no shadowing backend for {system.kind}")


def _is_exact_orbit(system, pts) -> bool:
    if isinstance(pts, np.ndarray):
        return False
    pts = list(pts)
    return all(system.metric(system.step(a), b) == 0 for a, b in zip(pts, pts[1:]))


def _tent_shadow(system: TentMap, pts: list, eps: float) -> Fraction:
    half = Fraction(eps) / 2
    xs = [Fraction(p) for p in pts]
    lo, hi = max(Fraction(0), xs[-1] - half), min(Fraction(1), xs[-1] + half)
    for x in reversed(xs[:-1]):
        # the two inverse branches of the tent map
        cands = [(lo / 2, hi / 2), (1 - hi / 2, 1 - lo / 2)]
        best = None
        for a, b in cands:
            a2, b2 = max(a, x - half), min(b, x + half)
            if a2 <= b2 and (best is None or b2 - a2 > best[1] - best[0]):
                best = (a2, b2)
        if best is None:
            raise ShadowingUnsupported("nested preimage intervals became empty", eps=eps)
        lo, hi = best
    return (lo + hi) / 2


def periodic_extension(prefix: PseudoOrbit, period_length: int, system: DynamicalSystem | None = None) -> PseudoOrbit:
    """Close ``prefix`` into a periodic pseudo-orbit of the given period.

    ``system`` defaults to the one recorded on ``prefix``.
    """
    system = system or prefix.system
    if system is None:
        raise InvalidArgument("periodic_extension needs the underlying system")
    if len(prefix) != period_length:
        raise InvalidArgument("prefix length must equal the period")
    pts = prefix.points
    if not validate_pseudo_orbit(system, pts, prefix.delta):
        raise InvalidArgument("prefix is not a delta-pseudo-orbit")
    if not validate_pseudo_orbit(system, pts, prefix.delta, period=period_length):
        raise NotClosable("wrap-around step violates delta", delta=prefix.delta)
    return PseudoOrbit(pts, prefix.delta, period_length, system)


def unroll(pseudo_orbit: PseudoOrbit, length: int):
    """The first ``length`` states of a periodic pseudo-orbit."""
    s = pseudo_orbit.period
    idx = [i % s for i in range(length)]
    if isinstance(pseudo_orbit.points, np.ndarray):
        return pseudo_orbit.points[idx]
    return tuple(pseudo_orbit.points[i] for i in idx)


def minimal_shadow(system: DynamicalSystem, periodic: PseudoOrbit, eps: float, budget: int = 10_000):
    """A minimal (periodic) point tracing a periodic pseudo-orbit within ``eps``."""
    s = periodic.period
    if s is None:
        raise InvalidArgument("minimal_shadow needs a periodic pseudo-orbit")
    pts = periodic.points
    if _is_shift(system):
        y = shadow_point(system, periodic, eps)
        return y
    if isinstance(system, TentMap):
        q = _tent_periodic(system, [Fraction(p) for p in list(pts)[:s]])
        if q is not None and traces(system, q, unroll(periodic, 2 * s), eps):
            return q
        # fall back to iterating f^s from a shadow point until an exact cycle appears
        y = shadow_point(system, PseudoOrbit(unroll(periodic, 3 * s), periodic.delta), eps)
        seen = {}
        best = y
        for j in range(budget):
            if y in seen:
                if traces(system, y, unroll(periodic, s), eps):
                    return y
                break
            seen[y] = j
            best = y
            y = system.iterate(y, s)
        err = float(max(tracing_errors(system, best, unroll(periodic, s))))
        raise BudgetExceeded("no tracing cycle found within budget", best=best, tracing_error=err)
    if _is_exact_orbit(system, list(pts) + [pts[0]]):
        return pts[0]
    raise ShadowingUnsupported(f"no shadowing backend for {system.kind}")


def _tent_periodic(system: TentMap, xs: list[Fraction]) -> Fraction | None:
    # compose affine branches a*x + b along the itinerary, then solve g(q) = q
    a, b = Fraction(1), Fraction(0)
    for x in xs:
        if x <= Fraction(1, 2):
            a, b = 2 * a, 2 * b
        else:
            a, b = -2 * a, 2 - 2 * b
    if a == 1:
        return None
    q = b / (1 - a)
    if not 0 <= q <= 1 or system.iterate(q, len(xs)) != q:
        return None
    return q


# --------------------------------------------------------------------------
# chain atlas
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainAtlas:
    cover: tuple[Region, ...]
    chains: dict
    omega: dict
    omega_max: int
    delta: float

    def chain(self, i: int, j: int) -> PseudoOrbit:
        return self.chains[(i, j)]

    def index(self, label: str) -> int:
        for k, r in enumerate(self.cover):
            if r.label == label:
                return k
        raise KeyError(label)

    def to_json(self, system) -> dict:
        return {
            "cover": [r.label for r in self.cover],
            "delta": self.delta,
            "omega_max": self.omega_max,
            "chains": {
                f"{self.cover[i].label}->{self.cover[j].label}": po.to_json(system)
                for (i, j), po in sorted(self.chains.items())
            },
        }


def build_chain_atlas(
    system: DynamicalSystem,
    cover: Sequence[Region],
    delta: float,
    resolution: float,
    pairs: Iterable[tuple[int, int]] | None = None,
) -> ChainAtlas:
    """Fix one BFS-minimal delta-chain for every requested ordered pair of cover sets."""
    cover = tuple(cover)
    nodes = list(system.sample(resolution))
    if pairs is None:
        pairs = [(i, j) for i in range(len(cover)) for j in range(len(cover))]
    chains, omega = {}, {}
    for i, j in pairs:
        po = find_delta_chain(system, cover[i], cover[j], delta, resolution, nodes=nodes)
        chains[(i, j)] = po
        omega[(i, j)] = po.steps
    return ChainAtlas(cover, chains, omega, max(omega.values(), default=0), delta)
