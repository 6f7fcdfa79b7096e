"""State spaces, maps, Bowen distances and Bowen balls.

Four kinds of systems are supported:

* symbolic shifts (full shift, subshift of finite type) with the metric
  ``d(x, y) = 2**-min{i : x_i != y_i}``;
* the box shift over ``m`` equally spaced levels of [0, 1] with
  ``d(x, y) = sup_i 2**-i |x_i - y_i|``;
* the tent map on [0, 1] with the usual distance;
* finite point systems given by a map table and a distance matrix.

Shift points are eventually periodic sequences (finite word plus repeating
tail) kept in a canonical form, so equality is decidable and every metric
query is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Any, Hashable, Sequence

import numpy as np

from .errors import ConfigError, DomainError, InvalidArgument

TOL = 1e-12
HORIZON_CAP = 4096


# --------------------------------------------------------------------------
# points
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ShiftPoint:
    """Eventually periodic sequence ``word + tail + tail + ...``.

    Always build through :func:`shift_point`, which canonicalises the pair.
    """

    word: tuple[int, ...]
    tail: tuple[int, ...]

    def symbol(self, i: int) -> int:
        if i < len(self.word):
            return self.word[i]
        return self.tail[(i - len(self.word)) % len(self.tail)]

    def symbols(self, n: int) -> tuple[int, ...]:
        w = self.word
        if n <= len(w):
            return w[:n]
        rest = n - len(w)
        reps = rest // len(self.tail) + 1
        return w + (self.tail * reps)[:rest]

    def shifted(self, k: int = 1) -> "ShiftPoint":
        if k <= len(self.word):
            return shift_point(self.word[k:], self.tail)
        k -= len(self.word)
        k %= len(self.tail)
        return shift_point((), self.tail[k:] + self.tail[:k])

    @property
    def horizon(self) -> int:
        return len(self.word) + len(self.tail)

    def to_json(self) -> dict:
        return {"word": list(self.word), "tail": list(self.tail)}

    def __str__(self) -> str:
        w = "".join(map(str, self.word)) if max(self.word + self.tail) < 10 else ",".join(map(str, self.word))
        t = "".join(map(str, self.tail)) if max(self.word + self.tail) < 10 else ",".join(map(str, self.tail))
        return f"{w}({t})"


def _primitive(tail: tuple[int, ...]) -> tuple[int, ...]:
    n = len(tail)
    for p in range(1, n + 1):
        if n % p == 0 and tail[:p] * (n // p) == tail:
            return tail[:p]
    return tail


def shift_point(word: Sequence[int] = (), tail: Sequence[int] = (0,)) -> ShiftPoint:
    word = tuple(int(s) for s in word)
    tail = tuple(int(s) for s in tail)
    if not tail:
        raise InvalidArgument("a shift point needs a nonempty periodic tail")
    tail = _primitive(tail)
    while word and word[-1] == tail[-1]:
        word = word[:-1]
        tail = (tail[-1],) + tail[:-1]
    return ShiftPoint(word, tail)


def periodic_point(block: Sequence[int]) -> ShiftPoint:
    return shift_point((), block)


def parse_shift_point(spec: Any) -> ShiftPoint:
    """Accept ``"0101(01)"``, ``{"word": [...], "tail": [...]}`` or a ShiftPoint."""
    if isinstance(spec, ShiftPoint):
        return spec
    if isinstance(spec, dict):
        return shift_point(spec.get("word", ()), spec.get("tail", (0,)))
    if isinstance(spec, str):
        s = spec.strip()
        if "(" in s:
            head, _, rest = s.partition("(")
            tail = rest.rstrip(")")
        else:
            head, tail = s, "0"
        return shift_point([int(c) for c in head], [int(c) for c in tail])
    raise InvalidArgument(f"cannot parse shift point from {spec!r}")


def _lcm(values) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
        if out > HORIZON_CAP:
            return HORIZON_CAP
    return out


# --------------------------------------------------------------------------
# systems
# --------------------------------------------------------------------------


class DynamicalSystem:
    """A compact metric space with a continuous self-map.

    ``exact`` systems compare distances exactly; numeric ones use ``TOL``
    so that ties within floating-point noise count as ties.
    """

    kind = "abstract"
    exact = True

    def metric(self, x, y) -> float:
        raise NotImplementedError

    def step(self, x):
        raise NotImplementedError

    def sample(self, resolution: float) -> list:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return True

    def parse_point(self, spec):
        return spec

    def point_to_json(self, x):
        return x

    # strict comparisons used by every definition with "<" or ">"
    def lt(self, a: float, b: float) -> bool:
        return a < b if self.exact else a < b - TOL

    def gt(self, a: float, b: float) -> bool:
        return a > b if self.exact else a > b + TOL

    def iterate(self, x, k: int):
        for _ in range(k):
            x = self.step(x)
        return x

    def bowen(self, x, y, n: int) -> float:
        best = 0.0
        for _ in range(n):
            best = max(best, self.metric(x, y))
            x, y = self.step(x), self.step(y)
        return best

    def bowen_matrix(self, points: Sequence, n: int) -> np.ndarray:
        """Pairwise ``d_n`` over ``points``."""
        orbits = [orbit_points(self, p, n) for p in points]
        N = len(points)
        out = np.zeros((N, N))
        for i in range(N):
            for j in range(i + 1, N):
                out[i, j] = out[j, i] = max(self.metric(a, b) for a, b in zip(orbits[i], orbits[j]))
        return out

    def metric_matrix(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        """``out[i, j] = d(xs[i], ys[j])``."""
        return np.array([[self.metric(x, y) for y in ys] for x in xs], dtype=float).reshape(len(xs), len(ys))

    @property
    def diameter(self) -> float:
        return 1.0

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.descriptor()})"


def orbit_points(system: DynamicalSystem, x, n: int) -> list:
    pts = [x]
    for _ in range(n - 1):
        pts.append(system.step(pts[-1]))
    return pts


class SymbolicSystem(DynamicalSystem):
    """One-sided shift over ``m`` symbols restricted by a 0/1 transition matrix."""

    ultrametric = True

    def __init__(self, matrix: Sequence[Sequence[int]]):
        A = np.asarray(matrix, dtype=np.int64)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise ConfigError("transition matrix must be square and nonempty", path="/matrix")
        if not np.isin(A, (0, 1)).all():
            raise ConfigError("transition matrix must be 0/1", path="/matrix")
        self.A = A
        self.m = A.shape[0]
        live = set(range(self.m))
        # drop symbols that cannot be continued forever
        while True:
            dead = {s for s in live if not any(A[s, t] for t in live)}
            if not dead:
                break
            live -= dead
        if not live:
            raise ConfigError("subshift has no admissible infinite sequences", path="/matrix")
        self.live = tuple(sorted(live))

    # -- symbol-level helpers ------------------------------------------------
    def weight(self, a: int, b: int) -> float:
        return 0.0 if a == b else 1.0

    @cached_property
    def weight_table(self) -> np.ndarray:
        return np.array([[self.weight(a, b) for b in range(self.m)] for a in range(self.m)])

    def allowed(self, a: int, b: int) -> bool:
        return bool(self.A[a, b])

    def admissible_word(self, word: Sequence[int]) -> bool:
        if any(s not in self.live for s in word):
            return False
        return all(self.A[a, b] for a, b in zip(word, word[1:]))

    def continuation(self, s: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Deterministic admissible ``(path, cycle)`` continuing after symbol ``s``."""
        seen: dict[int, int] = {}
        seq: list[int] = []
        cur = s
        while cur not in seen:
            seen[cur] = len(seq)
            seq.append(cur)
            cur = next(t for t in self.live if self.A[cur, t])
        start = seen[cur]
        return tuple(seq[1:start]), tuple(seq[start:])

    def point(self, word: Sequence[int], tail: Sequence[int] | None = None) -> ShiftPoint:
        """Build a point; without a tail the word is continued admissibly."""
        word = tuple(word)
        if tail is None:
            if not word:
                word = (self.live[0],)
            path, cyc = self.continuation(word[-1])
            return shift_point(word + path, cyc)
        return shift_point(word, tail)

    def contains(self, x: ShiftPoint) -> bool:
        seq = x.symbols(x.horizon + len(x.tail))
        return self.admissible_word(seq)

    def parse_point(self, spec) -> ShiftPoint:
        return parse_shift_point(spec)

    def point_to_json(self, x: ShiftPoint):
        return str(x)

    def step(self, x: ShiftPoint) -> ShiftPoint:
        return x.shifted(1)

    def iterate(self, x: ShiftPoint, k: int) -> ShiftPoint:
        return x.shifted(k)

    def _horizon(self, xs: Sequence[ShiftPoint]) -> int:
        return max(len(x.word) for x in xs) + _lcm(len(x.tail) for x in xs)

    def bowen(self, x: ShiftPoint, y: ShiftPoint, n: int) -> float:
        if x == y:
            return 0.0
        H = self._horizon((x, y)) + n
        sx, sy = x.symbols(H), y.symbols(H)
        best = 0.0
        for t in range(H):
            scale = 2.0 ** -max(0, t - n + 1)
            if scale <= best:
                break
            if sx[t] != sy[t]:
                best = max(best, self.weight(sx[t], sy[t]) * scale)
        return best

    def metric(self, x: ShiftPoint, y: ShiftPoint) -> float:
        return self.bowen(x, y, 1)

    def windows(self, points: Sequence[ShiftPoint], depth: int) -> np.ndarray:
        return np.array([p.symbols(depth) for p in points], dtype=np.int16).reshape(len(points), depth)

    def bowen_matrix(self, points: Sequence[ShiftPoint], n: int) -> np.ndarray:
        N = len(points)
        if N == 0:
            return np.zeros((0, 0))
        H = self._horizon(points) + n
        S = self.windows(points, H)
        W = self.weight_table
        out = np.zeros((N, N))
        for t in range(H):
            scale = 2.0 ** -max(0, t - n + 1)
            col = S[:, t]
            out = np.maximum(out, W[col[:, None], col[None, :]] * scale)
        return out

    def metric_matrix(self, xs, ys):
        if not len(xs) or not len(ys):
            return np.zeros((len(xs), len(ys)))
        H = self._horizon(list(xs) + list(ys))
        X, Y = self.windows(xs, H), self.windows(ys, H)
        W = self.weight_table
        out = np.zeros((len(xs), len(ys)))
        for t in range(H):
            out = np.maximum(out, W[X[:, t][:, None], Y[:, t][None, :]] * 2.0**-t)
        return out

    def separation_prefix_length(self, n: int, eps: float) -> int | None:
        """Length ``c`` with ``d_n(x, y) > eps`` iff x, y differ in the first c symbols.

        Only meaningful for the 0/1-weighted shift metric; ``None`` when no
        pair can be separated (``eps >= 1``).
        """
        if eps >= 1:
            return None
        return n - 1 + math.ceil(math.log2(1.0 / eps) - 1e-15)

    def ball_prefix_length(self, n: int, eps: float) -> int:
        """Length ``c`` with ``d_n(x, y) < eps`` iff x, y agree on the first c symbols."""
        if eps > 1:
            return 0
        # d_n = 2**-max(0, j-n+1) < eps  <=>  j - n + 1 > log2(1/eps)
        return n + math.floor(math.log2(1.0 / eps) + 1e-15)

    def words(self, length: int) -> list[tuple[int, ...]]:
        out: list[tuple[int, ...]] = [()]
        for _ in range(length):
            out = [w + (s,) for w in out for s in self.live if not w or self.A[w[-1], s]]
        return out

    def sample(self, resolution: float) -> list[ShiftPoint]:
        if resolution <= 0:
            raise InvalidArgument("resolution must be positive")
        w = max(1, math.ceil(math.log2(1.0 / resolution) - 1e-12)) if resolution < 1 else 1
        return self.cylinder_sample(w)

    def cylinder_sample(self, length: int) -> list[ShiftPoint]:
        """One point per admissible word of ``length``, with the fixed admissible tail."""
        return [self.point(w) for w in self.words(length)]

    @cached_property
    def perron_eigenvalue(self) -> float:
        sub = self.A[np.ix_(self.live, self.live)]
        return float(max(abs(np.linalg.eigvals(sub))))


class FullShift(SymbolicSystem):
    kind = "full_shift"

    def __init__(self, symbols: int = 2):
        if int(symbols) < 1:
            raise ConfigError("full shift needs at least one symbol", path="/symbols")
        super().__init__(np.ones((int(symbols), int(symbols)), dtype=int))

    def descriptor(self) -> dict:
        return {"kind": "full_shift", "symbols": self.m}


class SFT(SymbolicSystem):
    kind = "sft"

    def descriptor(self) -> dict:
        return {"kind": "sft", "matrix": self.A.tolist()}


class BoxShift(SymbolicSystem):
    """Shift on ``levels``-point grids of [0, 1] with ``sup_i 2**-i |x_i - y_i|``."""

    kind = "box_shift"
    ultrametric = False

    def __init__(self, levels: int = 2):
        levels = int(levels)
        if levels < 2:
            raise ConfigError("box shift needs at least two levels", path="/levels")
        super().__init__(np.ones((levels, levels), dtype=int))

    def weight(self, a: int, b: int) -> float:
        return abs(a - b) / (self.m - 1)

    def value(self, s: int) -> float:
        return s / (self.m - 1)

    def separation_prefix_length(self, n, eps):
        raise NotImplementedError("box shift metric is not 0/1 weighted")

    def ball_prefix_length(self, n, eps):
        raise NotImplementedError("box shift metric is not 0/1 weighted")

    def descriptor(self) -> dict:
        return {"kind": "box_shift", "levels": self.m}


class TentMap(DynamicalSystem):
    kind = "tent"
    exact = False

    def step(self, x):
        # exact for floats and Fractions: 2x and 2 - 2x introduce no rounding
        if x < -TOL or x > 1 + TOL:
            raise DomainError(f"tent map point {x!r} outside [0, 1]")
        y = 2 * x if x <= 0.5 else 2 - 2 * x
        if y < 0:
            return type(y)(0)
        return min(y, type(y)(1))

    def metric(self, x, y) -> float:
        return float(abs(x - y))

    def metric_matrix(self, xs, ys):
        X = np.asarray([float(x) for x in xs])
        Y = np.asarray([float(y) for y in ys])
        return np.abs(X[:, None] - Y[None, :])

    def contains(self, x) -> bool:
        return -TOL <= x <= 1 + TOL

    def parse_point(self, spec) -> float:
        return float(spec)

    def sample(self, resolution: float) -> list[float]:
        if resolution <= 0:
            raise InvalidArgument("resolution must be positive")
        k = int(math.floor(1.0 / resolution + 1e-9))
        return [i * resolution for i in range(k + 1)]

    def bowen_matrix(self, points, n):
        X = np.array([orbit_points(self, p, n) for p in points], dtype=float)
        D = np.abs(X[:, None, :] - X[None, :, :])
        return D.max(axis=2) if n else np.zeros((len(points),) * 2)

    def descriptor(self) -> dict:
        return {"kind": "tent"}


class FiniteSystem(DynamicalSystem):
    """Finite metric space ``points`` with ``f(points[i]) = points[map[i]]``."""

    kind = "finite"

    def __init__(self, points: Sequence[Hashable], fmap: Sequence, dist: Sequence[Sequence[float]]):
        self.points = list(points)
        if not self.points:
            raise ConfigError("finite system needs points", path="/points")
        if len(set(self.points)) != len(self.points):
            raise ConfigError("point labels must be distinct", path="/points")
        self.index = {p: i for i, p in enumerate(self.points)}
        N = len(self.points)
        if isinstance(fmap, dict):
            missing = [p for p in self.points if p not in fmap]
            if missing:
                raise ConfigError(f"map has no image for {missing[0]!r}", path="/map")
            fmap = [fmap[p] for p in self.points]
        if len(fmap) != N:
            raise ConfigError("map must list one image per point", path="/map")
        img = []
        for k, v in enumerate(fmap):
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v not in self.index:
                if not 0 <= v < N:
                    raise ConfigError("map index out of range", path=f"/map/{k}")
                img.append(int(v))
            elif v in self.index:
                img.append(self.index[v])
            else:
                raise ConfigError(f"unknown map target {v!r}", path=f"/map/{k}")
        self.image = img
        D = np.asarray(dist, dtype=float)
        if D.shape != (N, N):
            raise ConfigError("dist must be an N x N matrix", path="/dist")
        if not np.allclose(D, D.T) or np.any(np.diag(D) != 0) or np.any(D < 0):
            raise ConfigError("dist must be symmetric, nonnegative, zero on the diagonal", path="/dist")
        off = D + np.eye(N)
        if np.any(off <= 0):
            raise ConfigError("distinct points must have positive distance", path="/dist")
        self.D = D

    @classmethod
    def discrete(cls, points: Sequence[Hashable], fmap: Sequence) -> "FiniteSystem":
        N = len(points)
        return cls(points, fmap, 1.0 - np.eye(N))

    def step(self, x):
        return self.points[self.image[self.index[x]]]

    def metric(self, x, y) -> float:
        return float(self.D[self.index[x], self.index[y]])

    def contains(self, x) -> bool:
        return x in self.index

    def sample(self, resolution: float) -> list:
        return list(self.points)

    def metric_matrix(self, xs, ys):
        return self.D[np.ix_([self.index[x] for x in xs], [self.index[y] for y in ys])]

    def bowen_matrix(self, points, n):
        idx = np.array([self.index[p] for p in points], dtype=int)
        out = np.zeros((len(idx), len(idx)))
        for _ in range(n):
            out = np.maximum(out, self.D[np.ix_(idx, idx)])
            idx = np.array([self.image[i] for i in idx], dtype=int)
        return out

    @property
    def diameter(self) -> float:
        return float(self.D.max())

    def descriptor(self) -> dict:
        return {"kind": "finite", "points": self.points, "map": self.image, "dist": self.D.tolist()}


# --------------------------------------------------------------------------
# orbit segments and Bowen geometry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitSegment:
    base: Any
    length: int
    points: tuple = field(repr=False)


def _check_n(n) -> int:
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise InvalidArgument(f"horizon n must be a positive integer, got {n!r}")
    return int(n)


def bowen_distance(system: DynamicalSystem, x, y, n: int) -> float:
    """``d_n(x, y) = max_{0 <= i < n} d(f^i x, f^i y)``."""
    n = _check_n(n)
    return system.bowen(x, y, n)


def in_bowen_ball(system: DynamicalSystem, center, y, n: int, eps: float) -> bool:
    n = _check_n(n)
    if not eps > 0:
        raise InvalidArgument("eps must be positive")
    return system.lt(system.bowen(center, y, n), eps)


def orbit_segment(system: DynamicalSystem, x, n: int) -> OrbitSegment:
    n = _check_n(n)
    if not system.contains(x):
        raise DomainError(f"{x!r} is not a point of {system.kind}")
    return OrbitSegment(x, n, tuple(orbit_points(system, x, n)))


# --------------------------------------------------------------------------
# descriptors
# --------------------------------------------------------------------------

BUILTINS = {
    "full_shift2": {"kind": "full_shift", "symbols": 2},
    "full_shift3": {"kind": "full_shift", "symbols": 3},
    "golden_mean": {"kind": "sft", "matrix": [[1, 1], [1, 0]]},
    "tent": {"kind": "tent"},
    "box_shift4": {"kind": "box_shift", "levels": 4},
}


def load_system(descriptor: Any) -> DynamicalSystem:
    """Build a system from a JSON descriptor or a ``builtin:<name>`` string."""
    if isinstance(descriptor, DynamicalSystem):
        return descriptor
    if isinstance(descriptor, str):
        name = descriptor.split(":", 1)[1] if descriptor.startswith("builtin:") else descriptor
        if name not in BUILTINS:
            raise ConfigError(f"unknown builtin system {descriptor!r}", path="")
        descriptor = BUILTINS[name]
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise ConfigError("system descriptor must be an object with a 'kind'", path="/kind")
    kind = descriptor["kind"]
    try:
        if kind == "full_shift":
            return FullShift(_int_field(descriptor, "symbols", 2))
        if kind == "sft":
            if "matrix" not in descriptor:
                raise ConfigError("sft needs a matrix", path="/matrix")
            return SFT(descriptor["matrix"])
        if kind == "box_shift":
            return BoxShift(_int_field(descriptor, "levels", 2))
        if kind == "tent":
            return TentMap()
        if kind == "finite":
            for key in ("points", "map"):
                if key not in descriptor:
                    raise ConfigError(f"finite system needs '{key}'", path=f"/{key}")
            pts = descriptor["points"]
            dist = descriptor.get("dist")
            if dist is None:
                return FiniteSystem.discrete(pts, descriptor["map"])
            return FiniteSystem(pts, descriptor["map"], dist)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), path="") from exc
    raise ConfigError(f"unknown system kind {kind!r}", path="/kind")


def _int_field(d: dict, key: str, default: int) -> int:
    v = d.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"'{key}' must be an integer", path=f"/{key}")
    return v


def all_words(m: int, length: int):
    return product(range(m), repeat=length)
