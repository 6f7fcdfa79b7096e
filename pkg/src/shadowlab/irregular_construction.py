"""The irregular-set construction on symbolic systems, executed and audited.

Ingredient sets are too large to list (their cardinalities grow like
``e^{L h}`` with ``L`` in the hundreds), so they are handled as *word
classes*: all admissible words of a given length that start with the
start-region word, may be followed by the end-region word, and whose
observable sum lies in the generic band.  Counting, ranking and prefix
statistics of a class come from one dynamic programme over
(position, last symbol, partial sum), in exact integer arithmetic.

Every family member is then determined by a vector of ranks (one per
block slot), pseudo-orbits are assembled as symbol-window arrays, and
shadows are the periodic points of their leading symbols.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .core_spaces import ShiftPoint, SymbolicSystem, periodic_point, shift_point
from .errors import (
    AssemblyError,
    AuditRefused,
    ConstantsInfeasible,
    FamilyIncomplete,
    HorizonTooShort,
    InvalidArgument,
    InvalidChoices,
    RegionIncompatibility,
)

# --------------------------------------------------------------------------
# word classes
# --------------------------------------------------------------------------


class WordClass:
    """Admissible ``length``-words with a fixed prefix, an allowed successor and a sum band.

    ``phi[s]`` is the integer observable value of symbol ``s``; the band is
    the open interval ``(lo, hi)`` for the total sum.
    """

    def __init__(
        self,
        system: SymbolicSystem,
        length: int,
        prefix: Sequence[int],
        successor: int | None,
        phi: Sequence[int],
        lo: float,
        hi: float,
    ):
        self.system = system
        self.length = int(length)
        self.prefix = tuple(int(s) for s in prefix)
        self.successor = successor
        self.phi = tuple(int(v) for v in phi)
        self.lo, self.hi = lo, hi
        if len(self.prefix) > self.length:
            raise InvalidArgument("prefix longer than the words")
        if min(self.phi) < 0:
            raise InvalidArgument("observable values must be nonnegative integers here")
        self._build()

    # the DP -----------------------------------------------------------------
    def _build(self):
        A = self.system.A
        k = self.system.m
        m = self.length
        S = m * max(self.phi) + 1
        self.S = S
        sums = np.arange(S)
        ok_sum = (sums > self.lo) & (sums < self.hi)
        ok_end = np.array([self.successor is None or bool(A[a, self.successor]) for a in range(k)])
        live = np.zeros(k, dtype=bool)
        live[list(self.system.live)] = True
        # N[t][a, s]: completions of positions t..m-1 after symbol a with partial sum s
        N = [None] * (m + 1)
        N[m] = np.zeros((k, S), dtype=object)
        N[m][np.ix_(ok_end & live, ok_sum)] = 1
        p = len(self.prefix)
        for t in range(m - 1, max(p, 1) - 1, -1):
            cur = np.zeros((k, S), dtype=object)
            for b in range(k):
                if not live[b]:
                    continue
                f = self.phi[b]
                shifted = np.zeros(S, dtype=object)
                shifted[: S - f] = N[t + 1][b, f:]
                for a in range(k):
                    if A[a, b]:
                        cur[a] = cur[a] + shifted
            N[t] = cur
        self.N = N
        s0 = sum(self.phi[x] for x in self.prefix)
        if p and not self.system.admissible_word(self.prefix):
            self.count = 0
        elif p == m:
            self.count = int(bool(ok_sum[s0] and ok_end[self.prefix[-1]])) if p else int(ok_sum[0])
        elif p:
            self.count = int(N[p][self.prefix[-1], s0])
        else:
            self.count = sum(int(N[1][b, self.phi[b]]) for b in self.system.live)

    # queries ----------------------------------------------------------------
    def completions(self, word_prefix: Sequence[int]) -> int:
        """Number of class words extending ``word_prefix``."""
        w = tuple(word_prefix)
        p = len(self.prefix)
        if len(w) < p:
            return self.count if self.prefix[: len(w)] == w else 0
        if w[:p] != self.prefix or not self.system.admissible_word(w):
            return 0
        if len(w) > self.length:
            return 0
        s = sum(self.phi[x] for x in w)
        if s >= self.S:
            return 0
        return int(self.N[len(w)][w[-1], s]) if len(w) else self.count

    def unrank(self, r: int) -> tuple[int, ...]:
        """The ``r``-th class word in lexicographic order."""
        if not 0 <= r < self.count:
            raise InvalidChoices(f"rank {r} outside class of size {self.count}")
        cache = self.__dict__.setdefault("_unrank_cache", {})
        if r not in cache:
            if len(cache) > 4096:
                cache.clear()
            cache[r] = self._unrank(r)
        return cache[r]

    def _unrank(self, r: int) -> tuple[int, ...]:
        w = list(self.prefix)
        s = sum(self.phi[x] for x in w)
        for t in range(len(w), self.length):
            for b in self.system.live:
                if w and not self.system.A[w[-1], b]:
                    continue
                nxt = s + self.phi[b]
                c = int(self.N[t + 1][b, nxt]) if nxt < self.S else 0
                if r < c:
                    w.append(b)
                    s = nxt
                    break
                r -= c
        return tuple(w)

    def rank(self, word: Sequence[int]) -> int:
        word = tuple(word)
        if not self.contains(word):
            raise InvalidArgument("word is not in the class")
        r = 0
        s = sum(self.phi[x] for x in self.prefix)
        for t in range(len(self.prefix), self.length):
            for b in self.system.live:
                if b == word[t]:
                    break
                if not self.system.A[word[t - 1], b]:
                    continue
                nxt = s + self.phi[b]
                r += int(self.N[t + 1][b, nxt]) if nxt < self.S else 0
            s += self.phi[word[t]]
        return r

    def contains(self, word: Sequence[int]) -> bool:
        word = tuple(word)
        return len(word) == self.length and self.completions(word) == 1

    def log_max_completions(self) -> np.ndarray:
        """``log max_p #completions(p)`` over class-compatible prefixes ``p`` of each length ``t``."""
        out = np.empty(self.length + 1)
        p = len(self.prefix)
        k = self.system.m
        out[: p + 1] = math.log(self.count)
        reach = np.zeros((k, self.S), dtype=bool)
        if p:
            reach[self.prefix[-1], sum(self.phi[x] for x in self.prefix)] = True
        t0 = p
        if not p:
            for b in self.system.live:
                reach[b, self.phi[b]] = True
            t0 = 1
            out[1] = math.log(max(int(self.N[1][b, self.phi[b]]) for b in self.system.live))
        for t in range(t0, self.length + 1):
            if t > t0:
                nxt = np.zeros_like(reach)
                for a in range(k):
                    for b in range(k):
                        if self.system.A[a, b]:
                            f = self.phi[b]
                            nxt[b, f:] |= reach[a, : self.S - f]
                reach = nxt
            vals = self.N[t][reach]
            best = max((int(v) for v in vals), default=0)
            out[t] = math.log(best) if best > 0 else -math.inf
        return out


@dataclass
class OptionSet:
    """Options for one kind of block slot: a word class, optionally truncated to a few ranks."""

    words: WordClass
    ranks: tuple[int, ...] | None = None

    @property
    def size(self) -> int:
        return self.words.count if self.ranks is None else len(self.ranks)

    def __bool__(self) -> bool:
        return self.size > 0

    @property
    def length(self) -> int:
        return self.words.length

    def word(self, i: int) -> tuple[int, ...]:
        if not 0 <= i < self.size:
            raise InvalidChoices(f"option index {i} out of range (size {self.size})")
        return self.words.unrank(i if self.ranks is None else self.ranks[i])

    def truncated(self, size: int) -> "OptionSet":
        size = min(size, self.size)
        return OptionSet(self.words, tuple(range(size)) if self.ranks is None else self.ranks[:size])

    def log_size(self) -> float:
        return math.log(self.size) if self.size else -math.inf

    def log_max_completions(self) -> np.ndarray:
        if self.ranks is None:
            return self.words.log_max_completions()
        ws = [self.words.unrank(r) for r in self.ranks]
        out = np.empty(self.length + 1)
        for t in range(self.length + 1):
            counts: dict = {}
            for w in ws:
                counts[w[:t]] = counts.get(w[:t], 0) + 1
            out[t] = math.log(max(counts.values()))
        return out

    def completions(self, prefix: Sequence[int]) -> int:
        if self.ranks is None:
            return self.words.completions(prefix)
        t = len(prefix)
        return sum(1 for r in self.ranks if self.words.unrank(r)[:t] == tuple(prefix))


# --------------------------------------------------------------------------
# constants
# --------------------------------------------------------------------------


def linear_schedule(n: int) -> int:
    return n


# name -> (l_n, l'_n).  "dominant" makes every segment 8 times longer than the one before it,
# so each segment outweighs the whole history preceding it.
SCHEDULES: dict[str, tuple[Callable[[int], int], Callable[[int], int]]] = {
    "linear": (linear_schedule, linear_schedule),
    "doubling": (lambda n: 2 ** (n - 1), lambda n: 2 ** (n - 1)),
    "dominant": (lambda n: 8 ** (2 * n - 2), lambda n: 8 ** (2 * n - 1)),
}


@dataclass
class ConstructionConfig:
    gamma: float
    eta: float
    xi0: float
    xi: Fraction
    eps: float
    delta: float
    tau: float
    L: int
    J: int
    K: int
    P: int
    Q: int
    W: int
    m_k2: int
    lambda_w: int
    kappa_w: int
    omega_max: int
    M_bound: float
    alpha: float
    beta: float
    schedule: str = "linear"
    h_target: float | None = None
    # filled in by prepare()
    system: Any = field(default=None, repr=False)
    regions: dict = field(default_factory=dict)
    atlas: Any = field(default=None, repr=False)
    ingredients: Any = field(default=None, repr=False)

    # derived quantities ------------------------------------------------------
    @property
    def zeta(self) -> float:
        return float(self.xi) * self.alpha + (1 - float(self.xi)) * self.beta

    @property
    def xiJ(self) -> int:
        return self.m_k2

    @property
    def rest_J(self) -> int:
        return self.J - self.m_k2

    @property
    def c1_len(self) -> int:
        return self.L + self.Q

    @property
    def c2_len(self) -> int:
        return self.K + self.P

    def l(self, n: int) -> int:
        return SCHEDULES[self.schedule][0](n)

    def lp(self, n: int) -> int:
        return SCHEDULES[self.schedule][1](n)

    def M(self, n: int) -> int:
        return self.l(n) * self.lambda_w * self.c1_len

    def Mp(self, n: int) -> int:
        return self.lp(n) * self.kappa_w * self.c2_len

    def a(self, n: int) -> int:
        return sum(self.M(i) + self.Mp(i) for i in range(1, n))

    def b(self, n: int) -> int:
        return self.a(n) + self.M(n)

    def orientation(self) -> int:
        """+1 when alpha < beta, else -1 (claims are checked for the sign-flipped observable)."""
        return 1 if self.alpha < self.beta else -1

    def invariants(self) -> dict:
        """Every structural inequality, evaluated."""
        s = self.orientation()
        al, be = s * self.alpha, s * self.beta
        xi = self.xi
        zeta = float(xi) * al + (1 - float(xi)) * be
        checks = {
            "9eta < (1-xi0)(beta-alpha)": 9 * self.eta < (1 - self.xi0) * (be - al),
            "xi < xi0": float(xi) < self.xi0,
            "xiJ and (1-xi)J integers": (xi * self.J).denominator == 1 and ((1 - xi) * self.J).denominator == 1,
            "J > L > omega_max*M/eta": self.J > self.L > self.omega_max * self.M_bound / self.eta,
            "K = J + W": self.K == self.J + self.W,
            "P, Q, W <= omega_max": max(self.P, self.Q, self.W) <= self.omega_max,
            "lambda(L+Q) = kappa(K+P)": self.lambda_w * self.c1_len == self.kappa_w * self.c2_len,
            "lambda Q >= kappa P": self.lambda_w * self.Q >= self.kappa_w * self.P,
            "lambda L <= kappa K": self.lambda_w * self.L <= self.kappa_w * self.K,
            "L >= (1-tau)(L+Q)": self.L >= (1 - self.tau) * self.c1_len,
            "J >= (1-tau)(K+P)": self.J >= (1 - self.tau) * self.c2_len,
            "zeta - alpha - 9eta > 0": zeta - al - 9 * self.eta > 0,
            "schedule identities": all(
                self.b(n) - self.a(n) == self.M(n) and self.a(n + 1) - self.b(n) == self.Mp(n) for n in range(1, 6)
            )
            and self.a(1) == 0,
        }
        return {k: bool(v) for k, v in checks.items()}

    def constants(self) -> dict:
        return {
            "gamma": self.gamma, "eta": self.eta, "xi0": self.xi0, "xi": str(self.xi), "eps": self.eps,
            "delta": self.delta, "tau": self.tau, "L": self.L, "J": self.J, "K": self.K, "P": self.P,
            "Q": self.Q, "W": self.W, "m_k2": self.m_k2, "lambda": self.lambda_w, "kappa": self.kappa_w,
            "omega_max": self.omega_max, "M": self.M_bound, "alpha": self.alpha, "beta": self.beta,
            "zeta": self.zeta, "schedule": self.schedule,
            "a": [self.a(n) for n in range(1, 7)], "b": [self.b(n) for n in range(1, 6)],
        }


def derive_constants(
    gamma: float,
    eta: float,
    xi0: float,
    tau: float,
    eps: float,
    atlas: dict,
    alpha: float,
    beta: float,
    M_bound: float,
    delta: float | None = None,
    schedule: str = "linear",
    size_cap: int = 100_000,
    max_multiplier: int = 8,
    h_target: float | None = None,
) -> ConstructionConfig:
    """Smallest ``L``, then smallest ``J``, meeting every invariant.

    ``atlas`` supplies ``omega_max`` and the chain lengths ``P``, ``Q``, ``W``
    (a :class:`ChainAtlas`-derived dict).
    """
    if alpha == beta:
        raise ConstantsInfeasible("the two integrals coincide", binding="alpha != beta")
    if not 0 < xi0 < 1 or not 0 < tau < 1 or eta <= 0:
        raise InvalidArgument("need 0 < xi0 < 1, 0 < tau < 1 and eta > 0")
    gap = abs(beta - alpha)
    if not 9 * eta < (1 - xi0) * gap:
        raise ConstantsInfeasible("eta too large for xi0", binding="9*eta < (1-xi0)(beta-alpha)")
    w_max, P, Q, W = (int(atlas[k]) for k in ("omega_max", "P", "Q", "W"))
    if schedule not in SCHEDULES:
        raise InvalidArgument(f"unknown schedule {schedule!r}")
    L0 = max(
        math.floor(w_max * M_bound / eta) + 1,
        math.ceil((1 - tau) / tau * w_max - 1e-12),
        math.ceil((1 - tau) * Q / tau - 1e-12),
        1,
    )
    need_mk2 = (1 - tau) / tau * 2 * w_max
    for L in range(L0, size_cap + 1):
        best = None
        for kappa in range(1, max_multiplier + 1):
            for lam in range(1, max_multiplier + 1):
                if lam * (L + Q) % kappa:
                    continue
                KP = lam * (L + Q) // kappa
                J = KP - P - W
                if J <= L or J < (1 - tau) * KP or lam * Q < kappa * P:
                    continue
                xiJ = math.ceil(xi0 * J) - 1
                if xiJ < 1 or J - xiJ < 1 or xiJ < need_mk2:
                    continue
                if best is None or J < best[0]:
                    best = (J, lam, kappa, xiJ)
        if best is None:
            continue
        J, lam, kappa, xiJ = best
        cfg = ConstructionConfig(
            gamma=gamma, eta=eta, xi0=xi0, xi=Fraction(xiJ, J), eps=eps,
            delta=delta if delta is not None else eps, tau=tau, L=L, J=J, K=J + W, P=P, Q=Q, W=W,
            m_k2=xiJ, lambda_w=lam, kappa_w=kappa, omega_max=w_max, M_bound=M_bound,
            alpha=alpha, beta=beta, schedule=schedule, h_target=h_target,
        )
        bad = [k for k, ok in cfg.invariants().items() if not ok]
        if bad:
            raise ConstantsInfeasible("derived constants violate an invariant", binding=bad[0])
        return cfg
    raise ConstantsInfeasible("no admissible (L, J) under the size cap", binding="size_cap", size_cap=size_cap)


# --------------------------------------------------------------------------
# ingredients: regions, chains, word classes, Gamma blocks
# --------------------------------------------------------------------------


def _rows(symbols: Sequence[int], count: int, depth: int) -> np.ndarray:
    """First ``count`` sliding windows of width ``depth`` over ``symbols``."""
    arr = np.asarray(symbols, dtype=np.int8)
    if len(arr) < count + depth - 1:
        raise AssemblyError("not enough symbols for the requested windows")
    return np.lib.stride_tricks.sliding_window_view(arr, depth)[:count]


@dataclass
class GammaBlockSet:
    """Blocks ``[x_{[0, xiJ)} | w_0..w_{W-1} | y_{[0, (1-xi)J)}]`` indexed by the options for ``x``."""

    options: OptionSet
    w_rows: np.ndarray
    y_rows: np.ndarray
    follow: tuple[int, ...]  # symbols after each x-word (the end-region word)
    depth: int
    delta: float

    @property
    def cardinality(self) -> int:
        return self.options.size

    @property
    def offsets(self) -> tuple[int, int]:
        return self.options.length, self.options.length + len(self.w_rows)

    @property
    def block_length(self) -> int:
        return self.options.length + len(self.w_rows) + len(self.y_rows)

    def rows(self, i: int) -> np.ndarray:
        word = self.options.word(i)
        x = _rows(word + self.follow, len(word), self.depth)
        return np.concatenate([x, self.w_rows, self.y_rows])

    def symbols(self, i: int) -> np.ndarray:
        return np.concatenate([self.options.word(i), self.w_rows[:, 0], self.y_rows[:, 0]]).astype(np.int8)

    def block(self, i: int):
        from .shadowing import PseudoOrbit

        return PseudoOrbit(self.rows(i), self.delta)

    def bound_report(self, J: int, h: float, gamma: float) -> dict:
        lhs = self.options.log_size()
        return {"log_cardinality": lhs, "target": J * (h - 3 * gamma), "satisfied": lhs >= J * (h - 3 * gamma)}


def build_gamma_blocks(config: ConstructionConfig, E_family: OptionSet, y_point: ShiftPoint, atlas=None) -> GammaBlockSet:
    """One block per option of ``E_family`` (words of length ``xi J``)."""
    ing = config.ingredients
    if E_family.length != config.xiJ:
        raise AssemblyError("E-family words must have length xi*J", expected=config.xiJ, got=E_family.length)
    depth = ing.depth
    y_rows = _rows(y_point.symbols(config.rest_J + depth), config.rest_J, depth)
    gb = GammaBlockSet(E_family, ing.w_rows, y_rows, ing.v_word, depth, config.delta)
    if gb.options:
        # w starts in V, ends in U' where y starts; check both seams at delta
        rows = gb.rows(0)
        c = depth - 1
        if not np.all(rows[:-1, 1:] == rows[1:, :c]):
            raise AssemblyError("w-chain endpoints misaligned with segment endpoints", delta=config.delta)
    return gb


@dataclass
class Ingredients:
    depth: int  # window width (agreement depth + 1)
    u_word: tuple
    v_word: tuple
    u2_word: tuple  # U'
    v2_word: tuple  # V'
    E_L: OptionSet
    E_xiJ: OptionSet
    q_rows: np.ndarray
    w_rows: np.ndarray
    p_rows: np.ndarray
    y_point: ShiftPoint
    gamma_blocks: GammaBlockSet | None = None

    def truncated(self, e_size: int, g_size: int) -> "Ingredients":
        """Miniature: keep the first few options of each slot kind."""
        out = replace(self, E_L=self.E_L.truncated(e_size), E_xiJ=self.E_xiJ.truncated(g_size))
        out.gamma_blocks = replace(self.gamma_blocks, options=out.E_xiJ)
        return out

    def summary(self) -> dict:
        return {
            "U": "".join(map(str, self.u_word)),
            "V": "".join(map(str, self.v_word)),
            "U_prime": "".join(map(str, self.u2_word)),
            "V_prime": "".join(map(str, self.v2_word)),
            "log_E_L": self.E_L.log_size(),
            "log_Gamma": self.E_xiJ.log_size(),
            "E_L_size": str(self.E_L.size),
            "Gamma_size": str(self.E_xiJ.size),
            "truncated": self.E_L.ranks is not None,
            "y": str(self.y_point),
        }


def _band(config_like_alpha: float, eta: float, m: int) -> tuple[float, float]:
    return m * (config_like_alpha - eta / 4), m * (config_like_alpha + eta / 4)


def setup_construction(
    system: SymbolicSystem,
    phi: Sequence[int],
    alpha: float,
    beta: float,
    y_point: ShiftPoint,
    eps: float,
    gamma: float,
    eta: float,
    xi0: float,
    tau: float,
    M_bound: float,
    schedule: str = "linear",
    safety: float = 4.0,
    h_target: float | None = None,
) -> ConstructionConfig:
    """Regions, chains, constants and ingredient classes for one scale ``eps``."""
    from .shadowing import build_chain_atlas, cylinder, shadowing_delta, step_depth

    if not isinstance(system, SymbolicSystem) or not system.ultrametric:
        raise InvalidArgument("the construction runs on full shifts and SFTs")
    delta = shadowing_delta(system, eps, safety)
    c = step_depth(system, delta)
    words = system.words(c)
    cover = [cylinder(w) for w in words]
    atlas = build_chain_atlas(system, cover, delta, 2.0 ** -(c + 1))
    idx = {w: i for i, w in enumerate(words)}
    u2 = y_point.symbols(c)
    if u2 not in idx:
        raise RegionIncompatibility("y does not lie in the cover")
    w_max = atlas.omega_max
    L0 = max(math.floor(w_max * M_bound / eta) + 1, 16)
    m_ref = min(L0, 2000)

    # rank (U, V) by class size at a reference length, then chain cost, then words
    size_cache: dict = {}

    def class_size(u, v0):
        key = (u, v0)
        if key not in size_cache:
            lo, hi = _band(alpha, eta, m_ref)
            size_cache[key] = WordClass(system, m_ref, u, v0, phi, lo, hi).count
        return size_cache[key]

    v2 = u2
    for _ in range(6):
        best = None
        for u in words:
            for v in words:
                size = class_size(u, v[0])
                if size == 0:
                    continue
                cost = (
                    atlas.omega[(idx[v], idx[u])] + atlas.omega[(idx[v], idx[u2])] + atlas.omega[(idx[v2], idx[u])]
                )
                key = (-size, cost, u, v)
                if best is None or key < best[0]:
                    best = (key, u, v)
        if best is None:
            raise RegionIncompatibility("no region pair admits generic words")
        _, u, v = best
        P = atlas.omega[(idx[v2], idx[u])]
        Q = atlas.omega[(idx[v], idx[u])]
        W = atlas.omega[(idx[v], idx[u2])]
        cfg = derive_constants(
            gamma, eta, xi0, tau, eps, {"omega_max": w_max, "P": P, "Q": Q, "W": W},
            alpha, beta, M_bound, delta=delta, schedule=schedule, h_target=h_target,
        )
        new_v2 = y_point.shifted(cfg.rest_J).symbols(c)
        if new_v2 == v2:
            break
        v2 = new_v2
    else:
        raise RegionIncompatibility("could not settle the end region of y")

    def chain_rows(i, j):
        po = atlas.chain(i, j)
        return system.windows(list(po.points[:-1]), c + 1).astype(np.int8)

    def word_class(m):
        lo, hi = _band(alpha, eta, m)
        return OptionSet(WordClass(system, m, u, v[0], phi, lo, hi))

    E_L, E_xiJ = word_class(cfg.L), word_class(cfg.xiJ)
    if not E_L or not E_xiJ:
        raise RegionIncompatibility("empty ingredient class", L=E_L.size, xiJ=E_xiJ.size)
    ing = Ingredients(
        depth=c + 1, u_word=u, v_word=v, u2_word=u2, v2_word=v2, E_L=E_L, E_xiJ=E_xiJ,
        q_rows=chain_rows(idx[v], idx[u]), w_rows=chain_rows(idx[v], idx[u2]),
        p_rows=chain_rows(idx[v2], idx[u]), y_point=y_point,
    )
    cfg.system, cfg.atlas, cfg.ingredients = system, atlas, ing
    cfg.regions = {"U": u, "V": v, "U_prime": u2, "V_prime": v2}
    ing.gamma_blocks = build_gamma_blocks(cfg, E_xiJ, y_point, atlas)
    return cfg


def miniature(config: ConstructionConfig, e_size: int = 2, g_size: int = 3) -> ConstructionConfig:
    """The same configuration with truncated option sets (for exhaustive checks)."""
    return replace(config, ingredients=config.ingredients.truncated(e_size, g_size))


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


def _int_repr(n: int) -> str:
    """Exact decimal for moderate integers, ``exp(<log>)`` for huge ones."""
    if n.bit_length() < 1000:
        return str(n)
    return f"exp({math.log(n):.6f})"


@dataclass(frozen=True)
class Slot:
    kind: str  # "E" (C1 word) or "G" (C2 Gamma block)
    level: int
    start: int  # first symbol index of the free word
    length: int  # length of the free word


def slot_counts(config: ConstructionConfig, n: int) -> tuple[int, int]:
    return config.l(n) * config.lambda_w, config.lp(n) * config.kappa_w


def layout(config: ConstructionConfig, k: int) -> list[Slot]:
    """Free-word slots of a depth-``k`` prefix, in order."""
    out, pos = [], 0
    for n in range(1, k + 1):
        c1, c2 = slot_counts(config, n)
        for _ in range(c1):
            out.append(Slot("E", n, pos, config.L))
            pos += config.c1_len
        for _ in range(c2):
            out.append(Slot("G", n, pos, config.xiJ))
            pos += config.c2_len
    assert pos == config.a(k + 1)
    return out


def _check_choices(config: ConstructionConfig, choices, k: int | None = None):
    ing = config.ingredients
    k = len(choices) if k is None else k
    if len(choices) < k or k < 1:
        raise InvalidChoices("need choices for every level", levels=len(choices), depth=k)
    for n in range(1, k + 1):
        c1, c2 = choices[n - 1]
        e1, e2 = slot_counts(config, n)
        if len(c1) != e1 or len(c2) != e2:
            raise InvalidChoices(f"level {n} expects {e1} C1 and {e2} C2 indices", got=(len(c1), len(c2)))
        for i in c1:
            if not 0 <= i < ing.E_L.size:
                raise InvalidChoices(f"C1 index {i} out of range", level=n)
        for i in c2:
            if not 0 <= i < ing.E_xiJ.size:
                raise InvalidChoices(f"C2 index {i} out of range", level=n)
    return k


def assembled_symbols(config: ConstructionConfig, choices, k: int | None = None) -> np.ndarray:
    """Leading symbols of the depth-``k`` prefix (length ``a_{k+1}``)."""
    k = _check_choices(config, choices, k)
    ing = config.ingredients
    q, p = ing.q_rows[:, 0], ing.p_rows[:, 0]
    parts = []
    for n in range(1, k + 1):
        c1, c2 = choices[n - 1]
        for i in c1:
            parts += [np.asarray(ing.E_L.word(i), dtype=np.int8), q]
        for i in c2:
            parts += [ing.gamma_blocks.symbols(i), p]
    return np.concatenate(parts).astype(np.int8)


def assembled_rows(config: ConstructionConfig, choices, k: int | None = None) -> np.ndarray:
    """Window rows of the depth-``k`` prefix; the wrap to the start is a delta-step."""
    sym = assembled_symbols(config, choices, k)
    d = config.ingredients.depth
    ext = np.concatenate([sym, sym[: d - 1]])
    return np.lib.stride_tricks.sliding_window_view(ext, d).copy()


def assemble_pseudo_orbit(config: ConstructionConfig, choices, depth: int | None = None):
    """Periodic delta-pseudo-orbit realising the choices through level ``depth``."""
    from .shadowing import PseudoOrbit, validate_pseudo_orbit

    rows = assembled_rows(config, choices, depth)
    if not validate_pseudo_orbit(config.system, rows, config.delta, period=len(rows)):
        raise AssemblyError("assembled sequence is not a delta-pseudo-orbit", delta=config.delta)
    return PseudoOrbit(rows, config.delta, period=len(rows), system=config.system)


def analytic_sizes(config: ConstructionConfig, k_max: int) -> list[int]:
    """``|Z_k|`` for ``k = 1..k_max`` via the product recurrence (index 0 is 1)."""
    e, g = config.ingredients.E_L.size, config.ingredients.E_xiJ.size
    out = [1]
    for n in range(1, k_max + 1):
        c1, c2 = slot_counts(config, n)
        out.append(out[-1] * e**c1 * g**c2)
    return out


# --------------------------------------------------------------------------
# families of shadows
# --------------------------------------------------------------------------


@dataclass
class FamilyLevel:
    k: int
    period: int  # a_{k+1}
    analytic_size: int
    choices: list
    symbols: np.ndarray  # (members, period) int8; member i shadows with periodic_point(symbols[i])
    exhaustive: bool

    def __len__(self) -> int:
        return len(self.choices)

    def shadow(self, i: int) -> ShiftPoint:
        return periodic_point(self.symbols[i].tolist())

    def shadows(self) -> list[ShiftPoint]:
        return [self.shadow(i) for i in range(len(self))]


@dataclass
class AssembledFamily:
    config: ConstructionConfig
    levels: dict
    mode: str
    seed: int | None
    ledger: dict

    @property
    def depth(self) -> int:
        return max(self.levels)

    def level(self, k: int) -> FamilyLevel:
        if k not in self.levels:
            raise InvalidArgument(f"family has no level {k}", depths=sorted(self.levels))
        return self.levels[k]

    def measure(self, k: int):
        """Uniform probability on the depth-``k`` shadows."""
        from .measures_birkhoff import EmpiricalMeasure

        lv = self.level(k)
        return EmpiricalMeasure.from_atoms([(q, Fraction(1)) for q in lv.shadows()])

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "levels": {
                str(k): {
                    "period": lv.period,
                    "analytic_size": _int_repr(lv.analytic_size),
                    "members": len(lv),
                    "exhaustive": lv.exhaustive,
                }
                for k, lv in sorted(self.levels.items())
            },
            "ledger": self.ledger,
        }


def _all_choices(config: ConstructionConfig, k: int):
    import itertools

    sizes, shape = [], []
    for n in range(1, k + 1):
        c1, c2 = slot_counts(config, n)
        sizes += [config.ingredients.E_L.size] * c1 + [config.ingredients.E_xiJ.size] * c2
        shape.append((c1, c2))
    for flat in itertools.product(*(range(s) for s in sizes)):
        yield _reshape(flat, shape)


def _reshape(flat, shape):
    out, pos = [], 0
    for c1, c2 in shape:
        out.append((tuple(flat[pos : pos + c1]), tuple(flat[pos + c1 : pos + c1 + c2])))
        pos += c1 + c2
    return out


def _random_choices(config: ConstructionConfig, k: int, rng: random.Random):
    e, g = config.ingredients.E_L.size, config.ingredients.E_xiJ.size
    out = []
    for n in range(1, k + 1):
        c1, c2 = slot_counts(config, n)
        out.append((tuple(rng.randrange(e) for _ in range(c1)), tuple(rng.randrange(g) for _ in range(c2))))
    return out


def _level_checks(config: ConstructionConfig, lv: FamilyLevel, verify_tracing: bool) -> dict:
    from .shadowing import traces, validate_pseudo_orbit

    system, eps = config.system, config.eps
    sep_len = system.separation_prefix_length(lv.period, 2 * eps)
    reps = -(-sep_len // lv.period)
    keys = {np.tile(row, reps)[:sep_len].tobytes() for row in lv.symbols}
    distinct_choices = len({tuple(map(tuple, (c for pair in ch for c in pair))) for ch in lv.choices})
    out = {
        "members": len(lv),
        "distinct_choice_vectors": distinct_choices,
        "pairwise_separated": len(keys) == distinct_choices,
        "separation_prefix": sep_len,
    }
    if verify_tracing:
        d = config.ingredients.depth
        ok_po = ok_tr = True
        for row in lv.symbols:
            ext = np.concatenate([row, row[: d - 1]])
            rows = np.lib.stride_tricks.sliding_window_view(ext, d)
            ok_po &= validate_pseudo_orbit(system, rows, config.delta, period=len(rows))
            ok_tr &= traces(system, periodic_point(row.tolist()), rows, eps)
        out["pseudo_orbits_valid"] = bool(ok_po)
        out["shadows_trace"] = bool(ok_tr)
    return out


def build_family(
    config: ConstructionConfig,
    k_max: int,
    mode: str = "auto",
    cap: int = 100_000,
    sample_size: int = 32,
    seed: int = 0,
    verify_tracing: bool = True,
) -> AssembledFamily:
    """Shadows ``Z_k`` (``k = 1..k_max``) of all, or of sampled, depth-``k`` prefixes.

    ``Z_k`` collects periodic shadows of prefixes of length ``a_{k+1}``.
    Exhaustive mode enumerates every choice vector and needs
    ``|Z_{k_max}| <= cap``; sampled mode draws ``sample_size`` vectors per
    level with a seeded generator.
    """
    if k_max < 1:
        raise InvalidArgument("k_max must be at least 1")
    if mode not in ("auto", "exhaustive", "sampled"):
        raise InvalidArgument(f"unknown family mode {mode!r}")
    sizes = analytic_sizes(config, k_max)
    if mode == "auto":
        mode = "exhaustive" if sizes[k_max] <= cap else "sampled"
    if mode == "exhaustive" and sizes[k_max] > cap:
        raise FamilyIncomplete("exhaustive family exceeds the cap", size=_int_repr(sizes[k_max]), cap=cap)
    rng = random.Random(seed)
    levels, ledger = {}, {"recurrence": [], "levels": {}}
    for k in range(1, k_max + 1):
        if mode == "exhaustive":
            choices = list(_all_choices(config, k))
        else:
            choices = [_random_choices(config, k, rng) for _ in range(sample_size)]
        try:
            syms = np.stack([assembled_symbols(config, ch, k) for ch in choices])
        except (InvalidChoices, AssemblyError) as exc:
            raise FamilyIncomplete(f"level {k} could not be assembled: {exc}") from exc
        lv = FamilyLevel(k, config.a(k + 1), sizes[k], choices, syms, mode == "exhaustive")
        checks = _level_checks(config, lv, verify_tracing)
        if mode == "exhaustive":
            checks["count_matches_recurrence"] = len(choices) == sizes[k]
        if not checks["pairwise_separated"] or not checks.get("shadows_trace", True):
            raise FamilyIncomplete(f"level {k} failed its checks", **checks)
        levels[k] = lv
        ledger["levels"][str(k)] = checks
        c1, c2 = slot_counts(config, k)
        ledger["recurrence"].append(
            {"k": k, "factor_C1": c1, "factor_C2": c2, "size": _int_repr(sizes[k]), "log_size": math.log(sizes[k])}
        )
    return AssembledFamily(config, levels, mode, seed if mode == "sampled" else None, ledger)


# --------------------------------------------------------------------------
# Birkhoff claims
# --------------------------------------------------------------------------


def symbol_values(system: SymbolicSystem, observable) -> tuple:
    """Values of an observable depending on ``x_0`` only, one per symbol."""
    if isinstance(observable, (tuple, list)):
        return tuple(observable)
    if getattr(observable, "coordinate", None) != 0:
        raise InvalidArgument("the construction needs an observable of the zeroth coordinate")
    return tuple(observable(periodic_point((s,))) for s in range(system.m))


def _averages(symbols: np.ndarray, phi: Sequence[float], horizon: int) -> np.ndarray:
    """``A_n`` for ``n = 1..horizon`` along the periodic point with the given period word."""
    reps = -(-horizon // len(symbols))
    vals = np.asarray(phi, dtype=float)[np.tile(symbols, reps)[:horizon]]
    return np.cumsum(vals) / np.arange(1, horizon + 1)


def verify_claims_BC(family: AssembledFamily, observable=None, config: ConstructionConfig | None = None,
                     horizon: int | None = None, tol: float = 0.05) -> dict:
    """Windowed Birkhoff extremes of every family member against the two claim bounds.

    The window is ``[a_2, horizon]``; values are oriented so that the lower
    target comes first (a negative orientation flips the observable).
    """
    cfg = family.config if config is None else config
    phi = cfg.ingredients.E_L.words.phi if observable is None else symbol_values(cfg.system, observable)
    k_max = family.depth
    if horizon is None:
        horizon = max(cfg.a(3), cfg.a(k_max + 1))
    start = cfg.a(2)
    if horizon <= start:
        raise HorizonTooShort("horizon shorter than one full (C1)+(C2) cycle", horizon=horizon, needed=start + 1)
    if horizon < cfg.a(k_max):
        raise HorizonTooShort("horizon must reach a_{k_max}", horizon=horizon, needed=cfg.a(k_max))
    sign = cfg.orientation()
    alpha, beta = sign * cfg.alpha, sign * cfg.beta
    xi = float(cfg.xi)
    zeta = xi * alpha + (1 - xi) * beta
    lower, upper = alpha + 4 * cfg.eta + tol, zeta - 5 * cfg.eta - tol
    gap = zeta - alpha - 9 * cfg.eta
    points, all_b, all_c = [], True, True
    for k, lv in sorted(family.levels.items()):
        for i in range(len(lv)):
            A = sign * _averages(lv.symbols[i], phi, horizon)[start - 1 :]
            lo, hi = int(np.argmin(A)), int(np.argmax(A))
            ok_b, ok_c = bool(A[lo] <= lower), bool(A[hi] >= upper)
            all_b &= ok_b
            all_c &= ok_c
            points.append({
                "level": k, "member": i,
                "min": float(A[lo]), "argmin": start + lo, "max": float(A[hi]), "argmax": start + hi,
                "claim_B": ok_b, "claim_C": ok_c,
            })
    return {
        "window": [start, horizon],
        "orientation": sign,
        "alpha": alpha, "beta": beta, "zeta": zeta, "eta": cfg.eta, "tol": tol,
        "bound_B": lower, "bound_C": upper,
        "gap": gap,
        "points": points,
        "all_B": all_b, "all_C": all_c,
        "irregular": bool(all_b and all_c and gap > 0),
    }


# --------------------------------------------------------------------------
# mass distribution check
# --------------------------------------------------------------------------


def _slot_tables(config: ConstructionConfig, k: int):
    ing = config.ingredients
    slots = layout(config, k)
    starts = np.array([s.start for s in slots], dtype=np.int64)
    ends = starts + np.array([s.length for s in slots], dtype=np.int64)
    kinds = np.array([s.kind == "G" for s in slots])
    logsz = np.where(kinds, ing.E_xiJ.log_size(), ing.E_L.log_size())
    return slots, starts, ends, kinds, logsz


def _log_sup_mass(config: ConstructionConfig, k: int, prefix_lengths: np.ndarray) -> np.ndarray:
    """``log max_q mu_k([q_0..q_{P-1}])`` for each prefix length ``P``, exactly per slot."""
    ing = config.ingredients
    _, starts, ends, kinds, logsz = _slot_tables(config, k)
    lmc = {False: ing.E_L.log_max_completions(), True: ing.E_xiJ.log_max_completions()}
    cum = np.concatenate([[0.0], np.cumsum(logsz)])
    P = np.asarray(prefix_lengths, dtype=np.int64)
    idx = np.searchsorted(starts, P, side="left") - 1  # last slot starting before P
    out = np.zeros(len(P))
    for j, (p, i) in enumerate(zip(P, idx)):
        if i < 0:
            continue
        if p >= ends[i]:
            out[j] = -cum[i + 1]
        else:
            out[j] = -cum[i] + lmc[bool(kinds[i])][p - starts[i]] - logsz[i]
    return out


def _probe_log_mass(config: ConstructionConfig, k: int, choices, P: int) -> float:
    ing = config.ingredients
    total = 0.0
    flat = [(kind, i) for c1, c2 in choices[:k] for kind, i in [("E", x) for x in c1] + [("G", x) for x in c2]]
    for slot, (kind, i) in zip(layout(config, k), flat):
        if slot.start >= P:
            break
        opts = ing.E_L if kind == "E" else ing.E_xiJ
        t = P - slot.start
        if t >= slot.length:
            total -= opts.log_size()
        else:
            total += math.log(opts.completions(opts.word(i)[:t])) - opts.log_size()
    return total


def _case(config: ConstructionConfig, n: int) -> int:
    j = 1
    while config.a(j + 1) < n:
        j += 1
    return 1 if n <= config.b(j) else 2


def default_n_range(config: ConstructionConfig, eps: float) -> tuple[int, int]:
    r = config.system.ball_prefix_length(1, eps) - 1
    lo = math.ceil(config.lambda_w * config.c1_len / config.tau)
    k = 1
    while config.a(k + 1) - r < lo + config.c1_len:
        k += 1
    return lo, config.a(k + 1) - r


def pressure_distribution_check(
    family: AssembledFamily,
    eps: float,
    s_cert: float,
    K_cert: float = 1.0,
    n_range: tuple[int, int] | None = None,
    probe_count: int = 8,
    probe_points: int = 64,
) -> dict:
    """Check ``mu_k(B_n(q, eps)) <= K_cert * exp(-n s_cert)`` over an n-window.

    The supremum over all centres is computed exactly from the slot layout
    (a Bowen ball on a shift is a cylinder); seeded probe points drawn from
    the family's prefixes are checked independently at ``probe_points`` values
    of ``n``. Every ``k`` whose ``mu_k`` can resolve the ball is checked.
    """
    cfg = family.config
    if not K_cert > 0:
        raise InvalidArgument("K_cert must be positive")
    r = cfg.system.ball_prefix_length(1, eps) - 1
    lo, hi = default_n_range(cfg, eps) if n_range is None else n_range
    if not 1 <= lo <= hi:
        raise InvalidArgument("bad n-range", n_range=[lo, hi])
    ns = np.arange(lo, hi + 1)
    logK = math.log(K_cert)
    k_of = {}
    for n in (lo, hi):
        k = 1
        while cfg.a(k + 1) < n + r:
            k += 1
        k_of[n] = k
    ks = list(range(k_of[lo], k_of[hi] + 2))
    violations, margins = [], []
    for k in ks:
        valid = ns + r <= cfg.a(k + 1)
        if not valid.any():
            continue
        nk = ns[valid]
        lm = _log_sup_mass(cfg, k, nk + r)
        margin = logK - nk * s_cert - lm
        margins.append(margin)
        for j in np.flatnonzero(margin < -1e-12)[:20]:
            violations.append({"k": k, "n": int(nk[j]), "log_mass": float(lm[j]), "log_bound": float(logK - nk[j] * s_cert)})
        if k == ks[0]:
            best = (logK - lm) / nk
    all_margin = np.concatenate(margins)
    # independent probes: exact masses of cylinders around seeded members
    rng = random.Random(0 if family.seed is None else family.seed + 1)
    k_top = ks[-1]
    probe_ns = np.unique(np.linspace(lo, hi, num=min(probe_points, hi - lo + 1)).astype(int))
    probe_viol, probes_checked = [], 0
    for q in range(probe_count):
        ch = _random_choices(cfg, k_top, rng)
        for n in probe_ns:
            if n + r > cfg.a(k_top + 1):
                continue
            probes_checked += 1
            lm = _probe_log_mass(cfg, k_top, ch, int(n + r))
            if lm > logK - n * s_cert + 1e-12:
                probe_viol.append({"probe": q, "k": k_top, "n": int(n), "log_mass": lm})
    cases = {"1": 0, "2": 0}
    for n in probe_ns:
        cases[str(_case(cfg, int(n)))] += 1
    certified = not violations and not probe_viol
    return {
        "verdict": "certificate" if certified else "refutation",
        "certified": certified,
        "eps": eps,
        "s_cert": s_cert,
        "K_cert": K_cert,
        "ball_extra_symbols": r,
        "n_range": [int(lo), int(hi)],
        "levels": ks,
        "min_log_margin": float(all_margin.min()),
        "best_rate": float(best.min()),
        "violations": violations[:20],
        "probe_violations": probe_viol[:20],
        "probes": probe_count,
        "probe_checks": probes_checked,
        "cases": cases,
        "warning": None if probes_checked else "vacuous certificate: no probe intersects the shadow set",
    }


# --------------------------------------------------------------------------
# end-to-end audit
# --------------------------------------------------------------------------


def child_seed(master: int, component: str) -> int:
    """Stable 64-bit seed for a named component."""
    h = hashlib.sha256(f"{int(master)}:{component}".encode()).digest()
    return int.from_bytes(h[:8], "big")


PRESETS = {
    "toy_full_shift2": {
        "system": "builtin:full_shift2",
        "mu1": {"kind": "bernoulli", "probs": [0.5, 0.5]},
        "mu2": {"kind": "point", "point": "(1)"},
        "eps_profile": [0.125],
        "gamma": 0.125, "eta": 0.02, "xi0": 0.5, "tau": 0.05,
    },
    "toy_golden_mean": {
        "system": "builtin:golden_mean",
        "mu1": {"kind": "parry"},
        "mu2": {"kind": "point", "point": "(0)"},
        "eps_profile": [0.125],
        "gamma": 0.1, "eta": 0.015, "xi0": 0.5, "tau": 0.05,
    },
}

AUDIT_DEFAULTS = {
    "gamma": 0.125, "eta": 0.02, "xi0": 0.5, "tau": 0.05, "schedule": "linear",
    "k_max": 2, "sample_size": 4, "seed": 0, "tol": 0.05, "n_range": [1, 12],
    "probe_count": 8, "K_cert": 1.0,
}


def theorem_audit(system, Y, observable, mu1, mu2, eps_profile, config_overrides: dict | None = None) -> dict:
    """Run the construction at each scale and compare it with the entropy of ``Y``.

    ``Y`` is ``None`` (the whole system, whose chain classes are checked) or
    a list of sample points standing for one chain class.  ``mu2`` must be a
    point mass; its point plays the role of the generic point ``y``.
    """
    from .chain_recurrence import build_chain_graph, chain_classes
    from .entropy_mdim import entropy_at_scale
    from .measures_birkhoff import PointMassGenerator, default_dictionary, point_mass, weak_star_distance
    from .shadowing import shadowing_delta, step_depth

    opts = dict(AUDIT_DEFAULTS)
    opts.update(config_overrides or {})
    if observable is None:
        from .measures_birkhoff import coordinate

        observable = coordinate(0, system)
    alpha, beta = float(mu1.integral(observable)), float(mu2.integral(observable))
    if abs(alpha - beta) <= 1e-12:
        raise AuditRefused("the two measures give the same integral", alpha=alpha, beta=beta)
    if not isinstance(mu2, PointMassGenerator):
        raise InvalidArgument("the second measure must be a point mass at a periodic point")
    eps_profile = [float(e) for e in eps_profile]
    if not eps_profile or any(not 0 < e < 0.25 for e in eps_profile):
        raise InvalidArgument("eps values must lie in (0, 1/4)")
    phi = symbol_values(system, observable)
    M_bound = float(observable.bound) + abs(beta)
    tol = float(opts["tol"])
    gamma = float(opts["gamma"])
    n_range = list(range(int(opts["n_range"][0]), int(opts["n_range"][1]) + 1))
    sample_fn = None if Y is None else (lambda s, n, e: list(Y))

    report = {"config": {"system": system.kind, "alpha": alpha, "beta": beta, "eps_profile": eps_profile,
                         "observable": observable.name, **{k: opts[k] for k in sorted(AUDIT_DEFAULTS)}},
              "ingredients": {}, "family": {}, "claims_bc": {}, "pressure_check": {},
              "entropy_profiles": {"Y": [], "family": []}, "verdicts": {}}
    per_scale = []
    for eps in eps_profile:
        key = repr(eps)
        c = step_depth(system, shadowing_delta(system, eps, 4.0))
        graph = build_chain_graph(system, 2.0 ** -(c + 1), eps)
        n_classes = len(chain_classes(graph))
        h_est = entropy_at_scale(system, 4 * eps, n_range, sample_fn=sample_fn)
        cfg = setup_construction(
            system, phi, alpha, beta, mu2.x, eps, gamma, float(opts["eta"]), float(opts["xi0"]),
            float(opts["tau"]), M_bound, schedule=opts["schedule"], h_target=h_est,
        )
        fam = build_family(cfg, int(opts["k_max"]), mode="sampled", sample_size=int(opts["sample_size"]),
                           seed=child_seed(int(opts["seed"]), f"family:{key}"))
        claims = verify_claims_BC(fam, tol=tol)
        s_cert = (1 - cfg.tau) ** 2 * (h_est - 3 * gamma)
        press = pressure_distribution_check(fam, eps / 2, s_cert, float(opts["K_cert"]),
                                            probe_count=int(opts["probe_count"]))
        refute = pressure_distribution_check(fam, eps / 2, 10.0, float(opts["K_cert"]), probe_count=1)
        certified = s_cert if press["certified"] else 0.0
        shadows = [q for lv in fam.levels.values() for q in lv.shadows()]
        u_point = shift_point(cfg.ingredients.u_word, (0,))
        dict_obs = default_dictionary(system, len(cfg.ingredients.u_word))
        mu_dist = max(weak_star_distance(fam.measure(k), point_mass(u_point), dict_obs) for k in fam.levels)
        report["ingredients"][key] = {**cfg.ingredients.summary(), "constants": cfg.constants(),
                                      "invariants": cfg.invariants(),
                                      "gamma_bound": cfg.ingredients.gamma_blocks.bound_report(cfg.J, h_est, gamma)}
        report["family"][key] = fam.to_json()
        report["claims_bc"][key] = {k: v for k, v in claims.items() if k != "points"} | {
            "min_of_min": min(p["min"] for p in claims["points"]),
            "max_of_max": max(p["max"] for p in claims["points"]),
            "min_of_max": min(p["max"] for p in claims["points"]),
            "max_of_min": max(p["min"] for p in claims["points"]),
            "members": len(claims["points"]),
        }
        report["pressure_check"][key] = {"target": press, "refutation_probe_s10": refute["verdict"]}
        report["entropy_profiles"]["Y"].append({"eps": 4 * eps, "h": h_est, "ratio": h_est / -math.log(4 * eps)})
        report["entropy_profiles"]["family"].append(
            {"eps": eps / 2, "h_certified": certified, "ratio": certified / -math.log(eps / 2)})
        per_scale.append({
            "eps": eps, "h_est_Y_4eps": h_est, "certified_family_eps_over_2": certified,
            "a": bool(certified >= h_est - 3 * gamma - tol),
            "slack": certified - (h_est - 3 * gamma),
            "unique_chain_class": n_classes == 1,
            "shadows_in_system": all(system.contains(q) for q in shadows),
            "shadows_nonwandering": all(not q.word for q in shadows),  # periodic points
            "irregular": claims["irregular"],
            "mu_k_coordinate_distance": mu_dist,
            "refutes_s10": refute["verdict"] == "refutation",
        })
    ratio_f = [p["certified_family_eps_over_2"] / -math.log(p["eps"] / 2) for p in per_scale]
    ratio_t = [(p["h_est_Y_4eps"] - 3 * gamma - tol) / -math.log(p["eps"] / 2) for p in per_scale]
    report["verdicts"] = {
        "per_scale": per_scale,
        "a": all(p["a"] for p in per_scale),
        "b": max(ratio_f) >= max(ratio_t),
        "c": min(ratio_f) >= min(ratio_t),
        "unique_chain_class": all(p["unique_chain_class"] for p in per_scale),
        "label": "desk-scale analogue at the listed scales",
    }
    return report


def audit_preset(name: str, overrides: dict | None = None) -> dict:
    """Run one of :data:`PRESETS` by name."""
    from .core_spaces import load_system, parse_shift_point
    from .measures_birkhoff import PointMassGenerator, bernoulli, coordinate, parry

    if name not in PRESETS:
        raise InvalidArgument(f"unknown preset {name!r}", known=sorted(PRESETS))
    p = {**PRESETS[name], **(overrides or {})}
    system = load_system(p["system"])

    def gen(spec):
        if spec["kind"] == "bernoulli":
            return bernoulli(system, spec.get("probs"))
        if spec["kind"] == "parry":
            return parry(system)
        if spec["kind"] == "point":
            return PointMassGenerator(system, parse_shift_point(spec["point"]))
        raise InvalidArgument(f"unknown measure kind {spec['kind']!r}")

    keys = set(AUDIT_DEFAULTS) | {"gamma", "eta", "xi0", "tau"}
    cfg = {k: v for k, v in p.items() if k in keys}
    return theorem_audit(system, None, coordinate(0, system), gen(p["mu1"]), gen(p["mu2"]), p["eps_profile"], cfg)
