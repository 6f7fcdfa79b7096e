from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowlab.core_spaces import (
    FiniteSystem,
    bowen_distance,
    in_bowen_ball,
    load_system,
    orbit_segment,
    parse_shift_point,
    periodic_point,
    shift_point,
)
from shadowlab.errors import ConfigError, DomainError, InvalidArgument

words = st.lists(st.integers(0, 1), max_size=8)
tails = st.lists(st.integers(0, 1), min_size=1, max_size=4)
points = st.builds(shift_point, words, tails)


def test_bowen_distance_examples(shift2):
    x, y = periodic_point((0,)), shift_point((0, 0, 1), (0,))
    assert bowen_distance(shift2, x, y, 1) == 0.25
    assert bowen_distance(shift2, x, y, 3) == 1.0
    assert bowen_distance(shift2, x, x, 7) == 0.0


def test_bowen_distance_rejects_zero_horizon(shift2):
    with pytest.raises(InvalidArgument):
        bowen_distance(shift2, periodic_point((0,)), periodic_point((1,)), 0)


def test_bowen_ball_is_strict(shift2):
    z = periodic_point((0,))
    assert in_bowen_ball(shift2, z, z, 5, 0.1)
    assert not in_bowen_ball(shift2, z, shift_point((1,), (0,)), 1, 1.0)
    # first difference at index 3: d_3 = 1/2, which is not < 1/2
    assert not in_bowen_ball(shift2, periodic_point((0, 1)), shift_point((0, 1, 0), (0,)), 3, 0.5)


def test_orbit_segments(shift2, tent):
    assert orbit_segment(tent, Fraction(1, 3), 3).points == (Fraction(1, 3), Fraction(2, 3), Fraction(2, 3))
    seg = orbit_segment(shift2, periodic_point((0, 1)), 2).points
    assert seg == (periodic_point((0, 1)), periodic_point((1, 0)))
    assert orbit_segment(tent, 0.3, 1).points == (0.3,)


def test_tent_domain_error(tent):
    with pytest.raises(DomainError):
        orbit_segment(tent, 1.5, 3)


def test_shift_point_canonical_form():
    assert shift_point((0, 1, 0, 1), (0, 1)) == periodic_point((0, 1))
    assert periodic_point((1, 1, 1)) == periodic_point((1,))
    assert parse_shift_point("0101(01)") == periodic_point((0, 1))
    with pytest.raises(InvalidArgument):
        shift_point((0,), ())


@pytest.mark.parametrize(
    "desc,kind",
    [({"kind": "full_shift", "symbols": 2}, "full_shift"), ({"kind": "sft", "matrix": [[1, 1], [1, 0]]}, "sft")],
)
def test_load_system_descriptors(desc, kind):
    assert load_system(desc).kind == kind


def test_load_system_rejects_empty_sft():
    with pytest.raises(ConfigError):
        load_system({"kind": "sft", "matrix": [[0]]})


def test_load_system_unknown_builtin():
    with pytest.raises(ConfigError):
        load_system("builtin:nonexistent")


def test_prefix_lengths(shift2):
    # B_2(x, 1/2) is a 3-cylinder
    assert shift2.ball_prefix_length(2, 0.5) == 3
    assert shift2.separation_prefix_length(3, 0.5) == 3
    assert shift2.separation_prefix_length(3, 1.0) is None


def test_golden_mean_words_and_eigenvalue(golden):
    assert len(golden.words(5)) == 13
    assert golden.perron_eigenvalue == pytest.approx((1 + 5**0.5) / 2, abs=1e-12)
    assert not golden.contains(shift_point((1, 1), (0,)))


def test_finite_system_discrete():
    fs = FiniteSystem.discrete(["a", "b", "c"], {"a": "b", "b": "a", "c": "c"})
    assert fs.step("a") == "b"
    assert fs.metric("a", "c") == 1.0
    assert FiniteSystem.discrete(["a", "b"], [1, 0]).step("a") == "b"


@settings(max_examples=60, deadline=None)
@given(points, points, points, st.integers(1, 6))
def test_bowen_metric_axioms(x, y, z, n):
    s = load_system("builtin:full_shift2")
    dxy = bowen_distance(s, x, y, n)
    assert dxy == bowen_distance(s, y, x, n)
    assert (dxy == 0) == (x.symbols(n + 40) == y.symbols(n + 40))
    assert dxy <= max(bowen_distance(s, x, z, n), bowen_distance(s, z, y, n))  # ultrametric


@settings(max_examples=60, deadline=None)
@given(points, points, st.integers(1, 6))
def test_bowen_distance_monotone_in_n(x, y, n):
    s = load_system("builtin:full_shift2")
    assert bowen_distance(s, x, y, n) <= bowen_distance(s, x, y, n + 1)


@settings(max_examples=40, deadline=None)
@given(st.lists(points, min_size=1, max_size=6), st.integers(1, 4))
def test_bowen_matrix_matches_pairwise(pts, n):
    s = load_system("builtin:full_shift2")
    M = s.bowen_matrix(pts, n)
    expect = np.array([[bowen_distance(s, a, b, n) for b in pts] for a in pts])
    assert np.array_equal(M, expect)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False), st.integers(1, 4))
def test_tent_bowen_symmetric(x, y, n):
    t = load_system("builtin:tent")
    assert bowen_distance(t, x, y, n) == pytest.approx(bowen_distance(t, y, x, n))
    assert bowen_distance(t, x, y, n) >= abs(x - y) - 1e-12
