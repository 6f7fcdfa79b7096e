"""Finite measures, observables, Birkhoff averages and generic points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .core_spaces import DynamicalSystem, OrbitSegment, ShiftPoint, SymbolicSystem, TentMap, shift_point
from .entropy_mdim import SeparatedSet, max_separated_set
from .errors import GeneratorMismatch, InvalidArgument, RegionIncompatibility

# --------------------------------------------------------------------------
# measures and observables
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalMeasure:
    points: tuple
    weights: tuple  # Fractions when built from counts, floats otherwise

    def __post_init__(self):
        if len(self.points) != len(self.weights):
            raise InvalidArgument("points and weights differ in length")
        if any(w < 0 for w in self.weights):
            raise InvalidArgument("weights must be nonnegative")
        if self.points and abs(float(sum(self.weights)) - 1.0) > 1e-12:
            raise InvalidArgument("weights must sum to 1")

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[Any, Any]], normalize: bool = True) -> "EmpiricalMeasure":
        """Merge duplicate atoms (first-seen order) and optionally normalize."""
        acc: dict = {}
        for p, w in atoms:
            acc[p] = acc.get(p, 0) + w
        total = sum(acc.values())
        if normalize:
            if total <= 0:
                raise InvalidArgument("total mass must be positive")
            acc = {p: _div(w, total) for p, w in acc.items()}
        return cls(tuple(acc), tuple(acc.values()))

    @property
    def atoms(self) -> list[tuple[Any, Any]]:
        return list(zip(self.points, self.weights))

    def mix(self, other: "EmpiricalMeasure", alpha) -> "EmpiricalMeasure":
        """``alpha * self + (1 - alpha) * other``."""
        return EmpiricalMeasure.from_atoms(
            [(p, alpha * w) for p, w in self.atoms] + [(p, (1 - alpha) * w) for p, w in other.atoms],
            normalize=False,
        )

    def to_json(self, system: DynamicalSystem) -> dict:
        return {"atoms": [{"point": system.point_to_json(p), "weight": float(w)} for p, w in self.atoms]}


def _div(w, total):
    if isinstance(w, (int, Fraction)) and isinstance(total, (int, Fraction)):
        return Fraction(w) / total
    return float(w) / float(total)


def point_mass(x) -> EmpiricalMeasure:
    return EmpiricalMeasure((x,), (Fraction(1),))


def empirical_measure(orbit_segments: Sequence) -> EmpiricalMeasure:
    """Uniform weights over every visited point; repeated points accumulate."""
    pts: list = []
    for seg in orbit_segments:
        pts.extend(seg.points if isinstance(seg, OrbitSegment) else seg)
    if not pts:
        raise InvalidArgument("no points in the orbit segments")
    w = Fraction(1, len(pts))
    return EmpiricalMeasure.from_atoms([(p, w) for p in pts], normalize=False)


@dataclass(frozen=True)
class Observable:
    name: str
    evaluator: Callable[[Any], float] = field(compare=False, repr=False)
    bound: float
    coordinate: int | None = None  # set for x -> x_k on symbolic systems

    def __call__(self, x) -> float:
        return self.evaluator(x)


def coordinate(k: int = 0, system: SymbolicSystem | None = None) -> Observable:
    """``x -> x_k``; on a box shift the grid value of the symbol is used."""
    if system is not None and system.kind == "box_shift":
        m = system.m
        return Observable(f"x_{k}", lambda x: x.symbol(k) / (m - 1), 1.0, None)
    bound = (system.m - 1) if system is not None else 1.0
    return Observable(f"x_{k}", lambda x: x.symbol(k), float(bound), k)


def default_dictionary(system: DynamicalSystem, k: int = 4) -> list[Observable]:
    """Fixed test dictionary: ``x_0..x_{k-1}`` on shifts, four moments on intervals."""
    if isinstance(system, SymbolicSystem):
        return [coordinate(i, system) for i in range(k)]
    if isinstance(system, TentMap):
        moments = [
            Observable("x", lambda x: float(x), 1.0),
            Observable("x^2", lambda x: float(x) ** 2, 1.0),
            Observable("sin", lambda x: math.sin(2 * math.pi * float(x)), 1.0),
            Observable("cos", lambda x: math.cos(2 * math.pi * float(x)), 1.0),
        ]
        return moments[:k]
    raise InvalidArgument(f"no default dictionary for {system.kind}")


def integrate(measure: EmpiricalMeasure, observable: Observable):
    """Weighted sum; exact (a Fraction) when weights and values are exact."""
    terms = [w * observable(p) for p, w in measure.atoms]
    if all(isinstance(t, (int, Fraction)) for t in terms):
        return sum(terms, Fraction(0))
    return math.fsum(float(t) for t in terms)


def weak_star_distance(mu: EmpiricalMeasure, nu: EmpiricalMeasure, test_dictionary: Sequence[Observable]) -> float:
    if not test_dictionary:
        raise InvalidArgument("test dictionary must be nonempty")
    return max(abs(float(integrate(mu, f)) - float(integrate(nu, f))) for f in test_dictionary)


# --------------------------------------------------------------------------
# Birkhoff averages
# --------------------------------------------------------------------------


def orbit_values(system: DynamicalSystem, x, observable: Observable, N: int) -> np.ndarray:
    """``Phi(f^i x)`` for ``i < N``."""
    if observable.coordinate is not None and isinstance(x, ShiftPoint):
        k = observable.coordinate
        return np.asarray(x.symbols(N + k)[k:], dtype=float)
    vals = np.empty(N)
    for i in range(N):
        vals[i] = observable(x)
        x = system.step(x)
    return vals


def birkhoff_sequence(system: DynamicalSystem, x, observable: Observable, N: int) -> np.ndarray:
    """``A_n = (1/n) sum_{i<n} Phi(f^i x)`` for ``n = 1..N``."""
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    vals = orbit_values(system, x, observable, N)
    return np.cumsum(vals) / np.arange(1, N + 1)


class Gap(NamedTuple):
    lim_inf_est: float
    lim_sup_est: float
    gap: float


def irregularity_gap(sequence: Sequence[float], window_fraction: float = 0.5) -> Gap:
    """Min, max and spread of ``A_n`` over the final ``window_fraction`` of indices."""
    if not 0 < window_fraction <= 1:
        raise InvalidArgument("window_fraction must lie in (0, 1]")
    seq = np.asarray(sequence, dtype=float)
    if len(seq) < 4 / window_fraction:
        raise InvalidArgument("sequence too short for this window")
    tail = seq[len(seq) - max(1, int(round(window_fraction * len(seq)))) :]
    lo, hi = float(tail.min()), float(tail.max())
    return Gap(lo, hi, hi - lo)


def is_irregular(gap: Gap, threshold: float) -> bool:
    return gap.gap > threshold


# --------------------------------------------------------------------------
# measure generators
# --------------------------------------------------------------------------


class MeasureGenerator:
    """Emits sample points distributed by a known invariant measure."""

    name = "measure"

    def sample(self, rng: np.random.Generator, length: int):
        raise NotImplementedError

    def integral(self, observable: Observable) -> float:
        raise NotImplementedError

    def cylinder_measure(self, depth: int) -> EmpiricalMeasure:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name}


class MarkovGenerator(MeasureGenerator):
    """Stationary Markov measure on a symbolic system (Bernoulli and Parry are special cases)."""

    def __init__(self, system: SymbolicSystem, P, pi, name: str):
        self.system = system
        self.P = np.asarray(P, dtype=float)
        self.pi = np.asarray(pi, dtype=float)
        self.name = name
        if np.any(self.P[~system.A.astype(bool)] > 0):
            raise InvalidArgument("transition probabilities charge forbidden transitions")

    def sample(self, rng: np.random.Generator, length: int) -> ShiftPoint:
        m = len(self.pi)
        word = [int(rng.choice(m, p=self.pi))]
        # vectorized draw via inverse CDF on uniforms
        u = rng.random(length - 1)
        cdf = np.cumsum(self.P, axis=1)
        for r in u:
            word.append(int(np.searchsorted(cdf[word[-1]], r, side="right")))
            word[-1] = min(word[-1], m - 1)
        return self.system.point(tuple(word))

    def integral(self, observable: Observable) -> float:
        if observable.coordinate is None:
            raise InvalidArgument("analytic integral only for coordinate observables")
        return float(np.dot(self.pi, np.arange(len(self.pi))))

    def word_mass(self, word: Sequence[int]) -> float:
        m = self.pi[word[0]]
        for a, b in zip(word, word[1:]):
            m *= self.P[a, b]
        return float(m)

    def cylinder_measure(self, depth: int) -> EmpiricalMeasure:
        """One atom per ``depth``-word carrying the cylinder mass."""
        atoms = [(self.system.point(w), self.word_mass(w)) for w in self.system.words(depth)]
        atoms = [(p, w) for p, w in atoms if w > 0]
        return EmpiricalMeasure.from_atoms(atoms)

    def describe(self) -> dict:
        return {"name": self.name, "stationary": self.pi.tolist()}


def bernoulli(system: SymbolicSystem, probs: Sequence[float] | None = None) -> MarkovGenerator:
    m = system.m
    p = np.full(m, 1.0 / m) if probs is None else np.asarray(probs, dtype=float)
    if len(p) != m or abs(p.sum() - 1) > 1e-12 or np.any(p < 0):
        raise InvalidArgument("Bernoulli weights must be a probability vector over the symbols")
    if not np.all(system.A == 1):
        raise InvalidArgument("Bernoulli measures need a full shift")
    return MarkovGenerator(system, np.tile(p, (m, 1)), p, "bernoulli")


def parry(system: SymbolicSystem) -> MarkovGenerator:
    """Measure of maximal entropy of an irreducible SFT."""
    A = system.A.astype(float)
    vals, right = np.linalg.eig(A)
    k = int(np.argmax(vals.real))
    lam = vals[k].real
    v = np.abs(right[:, k].real)
    valsT, left = np.linalg.eig(A.T)
    u = np.abs(left[:, int(np.argmax(valsT.real))].real)
    P = A * v[None, :] / (lam * v[:, None])
    pi = u * v / np.dot(u, v)
    return MarkovGenerator(system, P, pi, "parry")


class PointMassGenerator(MeasureGenerator):
    name = "point_mass"

    def __init__(self, system: DynamicalSystem, x):
        self.system = system
        self.x = x

    def sample(self, rng, length):
        return self.x

    def integral(self, observable: Observable):
        return float(observable(self.x))

    def cylinder_measure(self, depth: int) -> EmpiricalMeasure:
        return point_mass(self.x)

    def describe(self) -> dict:
        return {"name": self.name, "point": self.system.point_to_json(self.x)}


# --------------------------------------------------------------------------
# generic sets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GenericSet:
    points: tuple
    target_mean: float
    eta: float
    n0: int
    n_max: int
    acceptance_rate: float
    candidates: int
    seed: int | None = None

    def validate(self, system: DynamicalSystem, observable: Observable) -> bool:
        return all(in_band(system, x, observable, self.target_mean, self.eta, self.n0, self.n_max) for x in self.points)

    def to_json(self, system: DynamicalSystem) -> dict:
        return {
            "points": [system.point_to_json(p) for p in self.points],
            "target_mean": self.target_mean,
            "eta": self.eta,
            "n0": self.n0,
            "n_max": self.n_max,
            "acceptance_rate": self.acceptance_rate,
            "candidates": self.candidates,
            "seed": self.seed,
        }


def in_band(system, x, observable, target, eta, n0, n_max) -> bool:
    """Every ``A_n``, ``n0 <= n <= n_max``, lies strictly within ``eta/4`` of ``target``."""
    A = birkhoff_sequence(system, x, observable, n_max)[n0 - 1 :]
    return bool(np.all(np.abs(A - target) < eta / 4))


def select_generic_set(
    system: DynamicalSystem,
    measure_generator: MeasureGenerator,
    observable: Observable,
    eta: float,
    n0: int,
    count: int,
    n_max: int | None = None,
    seed: int = 0,
    max_candidates: int | None = None,
) -> GenericSet:
    """Rejection-sample ``count`` points whose averages stay in the ``eta/4`` band on ``[n0, n_max]``."""
    if n0 < 1 or count < 1:
        raise InvalidArgument("need n0 >= 1 and count >= 1")
    n_max = n_max or 4 * n0
    if n_max < n0:
        raise InvalidArgument("n_max must be at least n0")
    target = float(measure_generator.integral(observable))
    rng = np.random.default_rng(seed)
    budget = max_candidates or max(100 * count, 1000)
    accepted: list = []
    tried = 0
    while len(accepted) < count and tried < budget:
        x = measure_generator.sample(rng, n_max + 1)
        tried += 1
        if in_band(system, x, observable, target, eta, n0, n_max):
            accepted.append(x)
    rate = len(accepted) / tried
    if len(accepted) < count and rate < 0.01:
        raise GeneratorMismatch(
            "acceptance rate below 1%: the generator does not match the target mean",
            accepted=len(accepted),
            tried=tried,
        )
    return GenericSet(tuple(accepted), target, eta, n0, n_max, rate, tried, seed)


@dataclass(frozen=True)
class SeparatedGenericFamily:
    sets: dict  # m -> SeparatedSet
    targets: dict  # m -> Katok-style cardinality target (or None)
    four_eps: float
    regions: tuple[str, str]

    def satisfied(self, m: int) -> bool | None:
        t = self.targets.get(m)
        return None if t is None else len(self.sets[m]) >= t


def build_separated_generic_family(
    system: DynamicalSystem,
    generic_set: GenericSet,
    m_list: Sequence[int],
    four_eps: float,
    start_region,
    end_region,
    h: float | None = None,
    gamma: float | None = None,
) -> SeparatedGenericFamily:
    """Per ``m``: a maximal ``(m, four_eps)``-separated set of generic points in ``U`` landing in ``V``."""
    if not generic_set.points:
        raise InvalidArgument("generic set is empty")
    sets, targets = {}, {}
    for m in m_list:
        pool = [x for x in generic_set.points if start_region(x) and end_region(system.iterate(x, m))]
        if not pool:
            raise RegionIncompatibility(
                "no generic point starts in U and lands in V", m=m,
                U=getattr(start_region, "label", "U"), V=getattr(end_region, "label", "V"),
            )
        mode = "exact" if getattr(system, "ultrametric", False) else "greedy"
        sets[m] = max_separated_set(system, pool, m, four_eps, mode)
        targets[m] = math.exp(m * (h - 2.5 * gamma)) if h is not None and gamma is not None else None
    labels = (getattr(start_region, "label", "U"), getattr(end_region, "label", "V"))
    return SeparatedGenericFamily(sets, targets, four_eps, labels)
