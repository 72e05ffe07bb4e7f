from fractions import Fraction

import pytest

from ripslab.forest import Edge, MetricForest, Subforest
from ripslab.isometry import BandSystem, arc_band
from ripslab.rips import (
    Inconclusive,
    SurfaceType,
    classify,
    is_reduced,
    lineage,
    overlap_set,
    rips_step,
    run,
    valence,
)
from ripslab.scalar import rational as Q


def line(length):
    return MetricForest(["u", "v"], [Edge("e0", "u", "v", Q(length))])


def shift(host, name, lo, hi, by):
    return arc_band(host, name,
                    host.point("e0", lo), host.point("e0", hi),
                    host.point("e0", lo + by), host.point("e0", hi + by))


@pytest.fixture()
def e_surf():
    host = line(3)
    return BandSystem(host, (shift(host, "a", 0, 2, 1),
                             shift(host, "b", 0, 1, 2)))


@pytest.fixture()
def e_trim():
    host = line(1)
    return BandSystem(host, (shift(host, "a", 0, Q(1, 2), Q(1, 2)),
                             shift(host, "b", 0, Q(3, 10), Q(6, 10))))


def seg(host, lo, hi):
    return host.segment(host.point("e0", lo), host.point("e0", hi))


# -- valence ---------------------------------------------------------------

def test_valence_e_surf(e_surf):
    host = e_surf.forest
    v = valence(e_surf)
    for x, expected in ((Q(1, 2), 2), (Q(3, 2), 2), (Q(5, 2), 2),
                        (Q(1), 3), (Q(2), 3), (Q(0), 2), (Q(3), 2)):
        assert v.value(host.point("e0", x)) == expected
    ge3 = v.stratum_ge(3)
    assert ge3.volume() == Q(0)
    assert ge3.points == frozenset({host.point("e0", 1), host.point("e0", 2)})


def test_valence_single_band():
    host = line(3)
    sys = BandSystem(host, (shift(host, "a", 0, 1, 2),))
    v = valence(sys)
    assert v.value(host.point("e0", Q(1, 2))) == 1
    assert v.value(host.point("e0", Q(3, 2))) == 0
    assert v.value(host.point("e0", Q(5, 2))) == 1
    assert v.stratum_ge(2).is_empty


def test_valence_empty_bands():
    host = line(3)
    sys = BandSystem(host, ())
    v = valence(sys)
    assert v.stratum_ge(1).is_empty
    assert v.stratum_ge(0) == host.whole()


def test_strata_nested(e_surf):
    v = valence(e_surf)
    for i in range(4):
        assert v.stratum_ge(i + 1).issubset(v.stratum_ge(i))
        assert v.vol_ge(i + 1) <= v.vol_ge(i)


# -- one step --------------------------------------------------------------

def test_step_e_trim(e_trim):
    host = e_trim.forest
    s1 = rips_step(e_trim)
    assert s1.support == seg(host, 0, Q(3, 10)).union(seg(host, Q(6, 10), Q(9, 10)))
    got = sorted([(b.domain, b.range) for b in s1.bands],
                 key=lambda dr: float(dr[0].volume().as_fraction()))
    assert got == [
        (seg(host, Q(1, 10), Q(3, 10)), seg(host, Q(6, 10), Q(8, 10))),
        (seg(host, 0, Q(3, 10)), seg(host, Q(6, 10), Q(9, 10))),
    ]
    assert [lineage(b.name) for b in s1.bands] == ["a", "b"]


def test_step_e_trim_twice(e_trim):
    host = e_trim.forest
    s2 = rips_step(rips_step(e_trim))
    assert s2.support == seg(host, Q(1, 10), Q(3, 10)).union(
        seg(host, Q(6, 10), Q(8, 10)))
    doms = sorted([(b.domain, b.range) for b in s2.bands],
                  key=lambda dr: float(dr[0].volume().as_fraction()))
    assert doms == [
        (seg(host, Q(1, 10), Q(2, 10)), seg(host, Q(7, 10), Q(8, 10))),
        (seg(host, Q(1, 10), Q(3, 10)), seg(host, Q(6, 10), Q(8, 10))),
    ]


def test_step_e_surf_halts(e_surf):
    s1 = rips_step(e_surf)
    assert s1.support == e_surf.forest.whole()
    assert ({b.canonical_key() for b in s1.bands}
            == {b.canonical_key() for b in e_surf.bands})


def test_overlap_keeps_distinct_band_point_touch():
    # dom(a) and dom(b) meet only at x = 1: the point stays in K'
    host = line(3)
    a = shift(host, "a", 0, 1, 2)
    b = arc_band(host, "b", host.point("e0", 1), host.point("e0", 2),
                 host.point("e0", 2), host.point("e0", 3))
    K = overlap_set(BandSystem(host, (a, b)))
    assert K.contains(host.point("e0", 1))


# -- reducedness -----------------------------------------------------------

def test_is_reduced_e_surf(e_surf):
    ok, witness = is_reduced(e_surf)
    assert ok and witness is None


def test_is_reduced_e_trim(e_trim):
    ok, witness = is_reduced(e_trim)
    assert not ok
    label, point = witness
    assert point == e_trim.forest.point("e0", Q(1, 2))


def test_single_band_not_reduced():
    host = line(3)
    sys = BandSystem(host, (shift(host, "a", 0, 1, 2),))
    ok, witness = is_reduced(sys)
    assert not ok


# -- run -------------------------------------------------------------------

def test_run_e_surf(e_surf):
    trace = run(e_surf, 10)
    assert len(trace.steps) == 1
    assert trace.halted and trace.halt_step == 0


def test_run_e_trim_volumes(e_trim):
    trace = run(e_trim, 10)
    vols = [r.volume.as_fraction() for r in trace.steps[:4]]
    assert vols == [1, Fraction(6, 10), Fraction(4, 10), Fraction(2, 10)]
    host = e_trim.forest
    assert trace.steps[3].system.support == seg(host, Q(1, 10), Q(2, 10)).union(
        seg(host, Q(7, 10), Q(8, 10)))


def test_run_e_trim_halts_after_collapse(e_trim):
    trace = run(e_trim, 20)
    assert trace.halted
    assert trace.final.support.is_empty
    # supports are nested and summaries recomputable
    for prev, rec in zip(trace.steps, trace.steps[1:]):
        assert rec.system.support.issubset(prev.system.support)
        assert rec.volume == rec.system.support.volume()
        assert rec.bands == len(rec.system.bands)


def test_run_point_band_phase(e_trim):
    # step 4 of E_trim carries a surviving point band before extinction
    trace = run(e_trim, 20)
    rec = trace.steps[4]
    assert rec.volume.sign() == 0 and rec.bands >= 1
    assert any(b.domain.is_point for b in rec.system.bands)


def test_run_empty_system():
    host = line(3)
    trace = run(BandSystem(host, ()), 5)
    assert trace.halted
    assert trace.final.support.is_empty


def test_lineage_through_steps(e_trim):
    trace = run(e_trim, 10)
    for prev, rec in zip(trace.steps, trace.steps[1:]):
        parents = {b.name for b in prev.system.bands}
        for b in rec.system.bands:
            assert lineage(b.name) in parents


# -- classification --------------------------------------------------------

def test_classify_e_surf(e_surf):
    c = classify(e_surf, 50, Fraction(1, 10))
    assert c.verdict == SurfaceType(0)


def test_classify_e_trim(e_trim):
    c = classify(e_trim, 50, Fraction(1, 10))
    assert isinstance(c.verdict, SurfaceType)
    assert c.verdict.halt_step == 5


def test_classify_inconclusive_on_budget():
    # a one-step budget on E_trim cannot certify anything
    host = line(1)
    sys = BandSystem(host, (shift(host, "a", 0, Q(1, 2), Q(1, 2)),
                            shift(host, "b", 0, Q(3, 10), Q(6, 10))))
    c = classify(sys, 1, Fraction(1, 2))
    assert isinstance(c.verdict, Inconclusive)


def test_classify_rejects_bad_ratio(e_surf):
    with pytest.raises(ValueError):
        classify(e_surf, 5, Fraction(3, 2))
