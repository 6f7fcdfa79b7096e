import itertools
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shadowlab.core_spaces import load_system, periodic_point, shift_point
from shadowlab.errors import (
    AuditRefused,
    ConstantsInfeasible,
    HorizonTooShort,
    InvalidChoices,
    RegionIncompatibility,
)
from shadowlab.irregular_construction import (
    OptionSet,
    WordClass,
    analytic_sizes,
    assemble_pseudo_orbit,
    assembled_symbols,
    audit_preset,
    build_family,
    build_gamma_blocks,
    derive_constants,
    layout,
    miniature,
    pressure_distribution_check,
    setup_construction,
    slot_counts,
    verify_claims_BC,
)
from shadowlab.shadowing import traces, validate_pseudo_orbit

ATLAS = {"omega_max": 4, "P": 2, "Q": 2, "W": 1}


@pytest.fixture(scope="module")
def toy():
    s = load_system("builtin:full_shift2")
    return setup_construction(s, (0, 1), 0.5, 1.0, periodic_point((1,)), 1 / 8, 0.125, 0.02, 0.5, 0.05, 2.0)


@pytest.fixture(scope="module")
def mini(toy):
    return miniature(toy, 2, 3)


@pytest.fixture(scope="module")
def mini11(mini):
    # one C1 and one C2 slot per schedule step
    return replace(mini, lambda_w=1, kappa_w=1)


def _brute_class(system, length, prefix, succ, phi, lo, hi):
    out = []
    for w in itertools.product(range(system.m), repeat=length):
        if w[: len(prefix)] != tuple(prefix) or not system.admissible_word(w + (succ,)):
            continue
        if lo < sum(phi[x] for x in w) < hi:
            out.append(w)
    return out


@pytest.mark.parametrize("name", ["builtin:full_shift2", "builtin:golden_mean"])
def test_word_class_against_brute_force(name):
    s = load_system(name)
    for length, prefix, succ, lo, hi in [(6, (0,), 0, 1.5, 3.5), (7, (0, 1), 0, 0.5, 4.5), (5, (), 1, -1, 2.5)]:
        wc = WordClass(s, length, prefix, succ, (0, 1), lo, hi)
        brute = _brute_class(s, length, prefix, succ, (0, 1), lo, hi)
        assert wc.count == len(brute)
        assert [wc.unrank(r) for r in range(wc.count)] == brute
        assert all(wc.rank(w) == i for i, w in enumerate(brute))


def test_constants_toy_example():
    cfg = derive_constants(0.125, 0.02, 0.5, 0.05, 1 / 8, ATLAS, 0.5, 1.0, 2.0)
    assert (cfg.L, cfg.J, cfg.K, cfg.lambda_w, cfg.kappa_w) == (401, 803, 804, 2, 1)
    assert cfg.xi == Fraction(401, 803)
    assert all(cfg.invariants().values())
    assert cfg.zeta == pytest.approx(float(cfg.xi) * 0.5 + (1 - float(cfg.xi)) * 1.0)


def test_constants_tau_bound():
    atlas = {"omega_max": 2, "P": 2, "Q": 2, "W": 2}
    cfg = derive_constants(0.125, 0.02, 0.5, 0.1, 1 / 8, atlas, 0.5, 1.0, 2.0)
    assert cfg.L >= 18
    assert cfg.L >= (1 - 0.1) * (cfg.L + cfg.Q)
    assert cfg.J >= (1 - 0.1) * (cfg.K + cfg.P)


def test_constants_reject_equal_means():
    with pytest.raises(ConstantsInfeasible):
        derive_constants(0.125, 0.02, 0.5, 0.05, 1 / 8, ATLAS, 0.5, 0.5, 2.0)


def test_constants_reject_large_eta():
    # 9 eta >= (1 - xi0)(beta - alpha)
    with pytest.raises(ConstantsInfeasible):
        derive_constants(0.125, 0.03, 0.5, 0.05, 1 / 8, ATLAS, 0.5, 1.0, 2.0)


def test_schedule_identities(toy):
    c = toy
    assert c.a(1) == 0
    for n in range(1, 6):
        assert c.b(n) - c.a(n) == c.M(n)
        assert c.a(n + 1) - c.b(n) == c.Mp(n)
    assert c.lambda_w * (c.L + c.Q) == c.kappa_w * (c.K + c.P)
    assert c.lambda_w * c.Q >= c.kappa_w * c.P


def test_ingredients_toy(toy):
    ing = toy.ingredients
    assert ing.u2_word == ing.v2_word == (1, 1, 1, 1)
    assert ing.E_L.log_size() > 0 and ing.E_xiJ.log_size() > 0
    gb = ing.gamma_blocks
    assert gb.offsets == (toy.xiJ, toy.xiJ + toy.W)
    assert gb.block_length == toy.K
    assert validate_pseudo_orbit(toy.system, gb.rows(0), toy.delta)
    assert gb.bound_report(toy.J, math.log(2), 0.125)["satisfied"]


def test_gamma_blocks_small(toy):
    four = OptionSet(toy.ingredients.E_xiJ.words).truncated(4)
    gb = build_gamma_blocks(toy, four, toy.ingredients.y_point)
    assert gb.cardinality == 4
    for i in range(4):
        po = gb.block(i)
        assert len(po) == toy.xiJ + toy.W + toy.rest_J
        assert validate_pseudo_orbit(toy.system, po.points, toy.delta)


def test_assembly_depth_one(toy, mini11):
    po = assemble_pseudo_orbit(mini11, [((0,), (1,))], 1)
    assert len(po) == (toy.L + toy.Q) + (toy.K + toy.P)
    sym = assembled_symbols(mini11, [((0,), (1,))], 1)
    # block boundaries carry the chain symbols
    q = toy.ingredients.q_rows[:, 0]
    assert np.array_equal(sym[toy.L : toy.L + toy.Q], q)
    assert tuple(sym[: len(toy.ingredients.u_word)]) == toy.ingredients.u_word


def test_assembly_rejects_bad_choices(mini):
    with pytest.raises(InvalidChoices):
        assemble_pseudo_orbit(mini, [((0,), (0,))], 1)
    with pytest.raises(InvalidChoices):
        assemble_pseudo_orbit(mini, [((0, 5), (0,))], 1)


def test_distinct_choices_separate(mini):
    s = mini.system
    a = periodic_point(assembled_symbols(mini, [((0, 0), (0,))]).tolist())
    b = periodic_point(assembled_symbols(mini, [((0, 1), (0,))]).tolist())
    assert s.bowen(a, b, mini.a(2)) > 4 * mini.eps


def test_recurrence_small_schedule(mini11):
    assert analytic_sizes(mini11, 2) == [1, 6, 216]
    fam = build_family(mini11, 2, mode="exhaustive")
    assert [len(fam.level(k)) for k in (1, 2)] == [6, 216]
    assert all(fam.ledger["levels"][k]["count_matches_recurrence"] for k in ("1", "2"))


def test_family_exhaustive_ledger(mini):
    fam = build_family(mini, 1, mode="exhaustive")
    lv = fam.level(1)
    assert len(lv) == analytic_sizes(mini, 1)[1] == 12
    led = fam.ledger["levels"]["1"]
    assert led["pairwise_separated"] and led["shadows_trace"] and led["pseudo_orbits_valid"]
    for i in range(len(lv)):
        rows = assemble_pseudo_orbit(mini, lv.choices[i]).points
        assert traces(mini.system, lv.shadow(i), rows, mini.eps)
    mu = fam.measure(1)
    assert sum(mu.weights) == 1 and set(mu.points) == set(lv.shadows())


def test_family_sampled_is_seeded(toy):
    a = build_family(toy, 2, mode="sampled", sample_size=3, seed=11)
    b = build_family(toy, 2, mode="sampled", sample_size=3, seed=11)
    assert np.array_equal(a.level(2).symbols, b.level(2).symbols)
    assert a.to_json() == b.to_json()


def test_claims_toy(toy):
    fam = build_family(toy, 2, mode="sampled", sample_size=3, seed=1)
    rep = verify_claims_BC(fam)
    assert rep["irregular"] and rep["gap"] == pytest.approx(rep["zeta"] - 0.5 - 9 * 0.02)
    with pytest.raises(HorizonTooShort):
        verify_claims_BC(fam, horizon=toy.a(2))


def test_claims_point_mass_pair():
    # alpha = 0, beta = 1: needs a schedule whose segments outweigh their history
    s = load_system("builtin:full_shift2")
    cfg = setup_construction(s, (0, 1), 0.0, 1.0, periodic_point((1,)), 1 / 8, 0.125, 0.02, 0.5, 0.05, 2.0,
                             schedule="dominant")
    fam = build_family(cfg, 2, mode="sampled", sample_size=2, seed=0)
    rep = verify_claims_BC(fam)
    deep = [p for p in rep["points"] if p["level"] == 2]
    assert all(p["claim_B"] and p["claim_C"] for p in deep)
    assert all(p["max"] - p["min"] > 0.2 for p in deep)


def test_linear_schedule_blends_segments():
    # with l_n = l'_n = n each level is a fixed fraction of the history, so the
    # averages at a_{k+1} sit near (alpha + zeta)/2 instead of reaching zeta
    s = load_system("builtin:full_shift2")
    cfg = setup_construction(s, (0, 1), 0.0, 1.0, periodic_point((1,)), 1 / 8, 0.125, 0.02, 0.5, 0.05, 2.0)
    rep = verify_claims_BC(build_family(cfg, 2, mode="sampled", sample_size=1, seed=0))
    assert not rep["all_C"]


def test_pressure_check(toy):
    fam = build_family(toy, 1, mode="sampled", sample_size=2, seed=3)
    s = (1 - toy.tau) ** 2 * (math.log(2) - 3 * toy.gamma)
    assert pressure_distribution_check(fam, toy.eps / 2, 0.0, 1.0)["certified"]
    assert pressure_distribution_check(fam, toy.eps / 2, s)["certified"]
    ref = pressure_distribution_check(fam, toy.eps / 2, 10.0)
    assert ref["verdict"] == "refutation" and ref["violations"]


@settings(max_examples=12, deadline=None)
@given(st.floats(0.0, 0.6), st.floats(0.2, 5.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_certificate_monotone(toy, s, K, shrink, grow):
    fam = build_family(toy, 1, mode="sampled", sample_size=1, seed=0)
    window = (16120, 17000)
    here = pressure_distribution_check(fam, toy.eps / 2, s, K, n_range=window, probe_count=1, probe_points=4)
    if here["certified"]:
        there = pressure_distribution_check(fam, toy.eps / 2, s * shrink, K * (1 + grow), n_range=window,
                                            probe_count=1, probe_points=4)
        assert there["certified"]


def test_region_incompatibility():
    # 1^infinity is not a point of the golden-mean shift
    g = load_system("builtin:golden_mean")
    with pytest.raises(RegionIncompatibility):
        setup_construction(g, (0, 1), 0.2764, 1.0, periodic_point((1,)), 1 / 8, 0.1, 0.015, 0.5, 0.05, 2.0)


def test_audit_refuses_equal_means():
    with pytest.raises(AuditRefused):
        audit_preset("toy_full_shift2", {"mu1": {"kind": "point", "point": "(1)"}})


def test_audit_golden_mean():
    rep = audit_preset("toy_golden_mean")
    v = rep["verdicts"]
    assert v["a"] and v["unique_chain_class"]
    target = math.log((1 + 5**0.5) / 2)
    cert = v["per_scale"][0]["certified_family_eps_over_2"]
    assert cert >= target - 3 * 0.1 - 0.05
    assert set(rep) == {"config", "ingredients", "family", "claims_bc", "pressure_check", "entropy_profiles", "verdicts"}


def test_layout_covers_prefix(toy):
    slots = layout(toy, 3)
    assert len(slots) == sum(sum(slot_counts(toy, n)) for n in range(1, 4))
    assert slots[0].start == 0 and slots[-1].start + toy.c2_len == toy.a(4)
