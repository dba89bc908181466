import random
from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from conftest import BANK, cfg, convex_combination, dof, vertices_of
from ychannel.planner import (
    PlanError,
    Relabeling,
    classify,
    feasibility_report,
    integerize,
    plan,
)
from ychannel.region import DIRECTIONS, DofTuple, build_region


def excesses(d):
    return (d[(1, 2)] - d[(2, 1)], d[(2, 3)] - d[(3, 2)], d[(3, 1)] - d[(1, 3)])


class TestIntegerize:
    @pytest.mark.parametrize("text,t,ext", [
        ("2,0,0,2,2,0", 1, "2,0,0,2,2,0"),
        ("1/2,0,0,1/2,1/2,0", 2, "1,0,0,1,1,0"),
        ("1/2,1/3,0,0,0,0", 6, "3,2,0,0,0,0"),
    ])
    def test_examples(self, text, t, ext):
        assert integerize(dof(text)) == (t, dof(ext))

    @given(st.lists(st.fractions(0, 5, max_denominator=12), min_size=6, max_size=6))
    def test_minimal(self, xs):
        t, ext = integerize(DofTuple.of(*xs))
        assert all(x.denominator == 1 for x in ext)
        for s in range(1, t):
            assert any((s * x).denominator != 1 for x in xs)


class TestClassify:
    def test_anchor(self):
        rel, case = classify(dof("2,0,0,2,2,0"))
        assert rel.is_identity and case == "I"

    def test_case_two(self):
        rel, case = classify(dof("1,1,0,1,0,0"))
        assert rel.is_identity and case == "II"

    @pytest.mark.parametrize("text", ["0,1,1,0,0,1", "0,1,2,0,0,2"])
    def test_swap_two_three(self, text):
        d = dof(text)
        assert d[(1, 2)] < d[(2, 1)] and d[(3, 1)] < d[(1, 3)] and d[(2, 3)] < d[(3, 2)]
        rel, case = classify(d)
        assert rel.perm == (1, 3, 2) and case == "I"

    def test_rotation_puts_min_excess_first(self):
        # excesses (3, 1, 2) in identity labels: min sits at 2->3
        rel, case = classify(dof("3,0,0,1,2,0"))
        assert case == "I"
        dd = rel.apply(dof("3,0,0,1,2,0"))
        assert excesses(dd)[0] == 1 == min(excesses(dd))

    @given(st.lists(st.integers(0, 4), min_size=6, max_size=6))
    def test_total_and_correct(self, xs):
        d = DofTuple.of(*xs)
        rel, case = classify(d)
        dd = rel.apply(d)
        ok12, ok23 = dd[(1, 2)] >= dd[(2, 1)], dd[(2, 3)] >= dd[(3, 2)]
        if case == "I":
            assert ok12 and ok23 and dd[(3, 1)] >= dd[(1, 3)]
            assert excesses(dd)[0] == min(excesses(dd))
        else:
            assert ok12 and ok23 and dd[(1, 3)] > dd[(3, 1)]
            # Case I was impossible for every labeling
            for p in permutations((1, 2, 3)):
                e = Relabeling(p).apply(d)
                assert not all(x >= 0 for x in excesses(e))


class TestRelabeling:
    @pytest.mark.parametrize("perm", list(permutations((1, 2, 3))))
    def test_round_trip(self, perm):
        rel = Relabeling(perm)
        for dirn in DIRECTIONS:
            assert rel.direction_to_relabeled(rel.direction_to_original(dirn)) == dirn
            assert rel.direction_to_original(rel.direction_to_relabeled(dirn)) == dirn
        d = dof("1,2,3,4,5,6")
        assert rel.inverse.apply(rel.apply(d)) == d

    def test_apply_semantics(self):
        # relabeled user a is original user perm[a-1]
        rel = Relabeling((2, 3, 1))
        d = dof("1,2,3,4,5,6")  # d12..d32
        dd = rel.apply(d)
        for a, b in DIRECTIONS:
            assert dd[(a, b)] == d[(rel.perm[a - 1], rel.perm[b - 1])]


class TestPlan:
    def test_anchor(self):
        p = plan(dof("2,0,0,2,2,0"), cfg("3,2,2,4"))
        assert (p.case, p.gamma, p.J, p.t) == ("I", 2, 4, 1)
        assert dict(p.residuals) == {(2, 3): 0, (3, 1): 0}
        assert p.block_sizes == [0, 0, 0, 2, 2, 0, 0]

    def test_case_two(self, case2):
        config, d = case2
        p = plan(d, config)
        assert (p.case, p.J) == ("II", 3)
        assert p.block_sizes == [0, 0, 0, 1, 1, 1]

    def test_case_two_unit_user3_config_is_outside(self):
        with pytest.raises(PlanError, match=r"not in D\*.*sink\(3\)"):
            plan(dof("1,1,0,1,0,0"), cfg("2,1,1,3"))

    def test_all_ones(self):
        p = plan(dof("1,1,1,1,1,1"), cfg("2,2,2,3"))
        assert (p.case, p.gamma, p.J) == ("I", 0, 3)
        assert dict(p.residuals) == {(2, 3): 0, (3, 1): 0}
        assert p.block_sizes[:3] == [1, 1, 1]

    def test_out_of_region(self):
        with pytest.raises(PlanError, match=r"not in D\*.*source\(1\)"):
            plan(dof("2,0,0,0,0,0"), cfg("1,1,1,1"))

    def test_zero(self):
        p = plan(DofTuple.zero(), cfg("1,1,1,1"))
        assert p.J == 0 and sum(p.block_sizes) == 0

    def test_fractional_extension(self):
        p = plan(dof("1/2,0,0,1/2,1/2,0"), cfg("1,1,1,1"))
        assert p.t == 2 and p.J == 2 and p.relay_dims_per_use == 1

    def test_stream_sizes_cover_tuple(self):
        p = plan(dof("1,2,0,1,2,1"), cfg("3,3,3,5"))
        sizes = p.stream_sizes()
        for dirn in DIRECTIONS:
            assert sum(sizes[dirn].values()) == p.d_int[dirn]


class TestFeasibility:
    def test_anchor_tight(self):
        r = feasibility_report(plan(dof("2,0,0,2,2,0"), cfg("3,2,2,4")))
        assert r.ok
        assert r["relay: N >= J"].lhs == r["relay: N >= J"].rhs == 4

    def test_pairwise_margins(self):
        r = feasibility_report(plan(dof("1,1,1,1,1,1"), cfg("2,2,2,3")))
        assert r.ok
        for c in r.checks:
            if c.name.startswith("pairwise"):
                assert c.lhs == 1 and c.rhs == 1

    def test_gamma_zero(self):
        r = feasibility_report(plan(dof("1,1,1,1,1,1"), cfg("2,2,2,3")))
        cyc = next(c for c in r.checks if c.name.startswith("cyclic"))
        assert cyc.rhs == 0 and cyc.ok

    def test_failure_is_named(self):
        # a plan judged against a smaller config than it was built for
        p = plan(dof("2,0,0,2,2,0"), cfg("3,2,2,4"))
        r = feasibility_report(p, cfg("3,2,2,3"))
        assert not r.ok
        assert any("relay" in c.name for c in r.failures)
        with pytest.raises(PlanError):
            r.raise_for_failures()


def _bank_tuples(c, n_random=100, seed=3):
    pts = list(vertices_of(c))
    rng = random.Random(seed)
    for _ in range(n_random):
        pts.append(convex_combination(rng, rng.sample(pts[: len(vertices_of(c))], min(3, len(vertices_of(c))))))
    return pts


@pytest.mark.parametrize("c", BANK)
def test_accounting_and_relay_budget(c):
    config = cfg(c)
    for d in _bank_tuples(c):
        p = plan(d, config)
        x = p.d_int
        total = sum(x.coords)
        if p.case == "I":
            assert p.J == total - (x[(2, 1)] + x[(1, 3)] + x[(3, 2)] + p.gamma)
            # the relay row d21+d23+d31 <= N in relabeled coordinates
            assert p.J == x[(2, 1)] + x[(2, 3)] + x[(3, 1)]
        else:
            assert p.J == total - (x[(2, 1)] + x[(3, 1)] + x[(3, 2)])
            assert p.J == x[(1, 2)] + x[(1, 3)] + x[(2, 3)]
        assert p.J <= config.N * p.t
        assert feasibility_report(p).ok


@pytest.mark.parametrize("c", BANK)
def test_stream_round_trip(c):
    config = cfg(c)
    for d in _bank_tuples(c, n_random=20):
        p = plan(d, config)
        sizes = p.stream_sizes()
        back = {p.relabeling.direction_to_original(k): sum(v.values()) for k, v in sizes.items()}
        t, ext = integerize(d)
        assert back == {k: int(ext[k]) for k in DIRECTIONS}


def test_plan_json():
    obj = plan(dof("2,0,0,2,2,0"), cfg("3,2,2,4")).to_json()
    assert obj["case"] == "I" and obj["J"] == 4 and obj["gamma"] == 2
    assert [b["size"] for b in obj["blockLayout"]] == [0, 0, 0, 2, 2, 0, 0]
