import math

import pytest

from torusavg.dynsys import (build_family, finite_rotation, identity,
                             rotation, rotation_power)
from torusavg.engine import Schedule, multiple_average
from torusavg.observables import (constant, frac_part, indicator,
                                  power_of_frac, trig_poly)
from torusavg.oracle import compare, ergodicity_report, predict
from torusavg.unitmath import ScalarConstant

SQRT2 = ScalarConstant.surd(0, 1, 2)
SQRT3 = ScalarConstant.surd(0, 1, 3)
SQRT5 = ScalarConstant.surd(0, 1, 5)


# ---------------------------------------------------------------------------
# predictions


def test_predict_distinct_rotations_factorizes():
    fam = build_family([rotation(SQRT2), rotation(SQRT3)])
    pred = predict(fam, [frac_part(), frac_part()])
    assert pred.applicable
    assert pred.value == pytest.approx(0.25, abs=1e-13)
    kinds = [f.kind for f in pred.derivation]
    assert kinds == ["single_integral", "single_integral"]
    assert any("surrogate" in c for c in pred.caveats)


def test_predict_repeated_rotation_couples():
    fam = build_family([rotation(SQRT2), rotation(SQRT2)])
    pred = predict(fam, [frac_part(), frac_part()])
    assert pred.applicable
    assert pred.value == pytest.approx(1 / 3, abs=1e-12)
    assert [f.kind for f in pred.derivation] == ["group_integral"]
    assert pred.derivation[0].indices == (0, 1)
    assert pred.caveats == ()  # single group: no surrogate involved


def test_predict_three_distinct_rotations():
    fam = build_family([rotation(SQRT2), rotation(SQRT3), rotation(SQRT5)])
    pred = predict(fam, [frac_part()] * 3)
    assert pred.applicable
    assert pred.value == pytest.approx(0.125, abs=1e-13)


def test_predict_with_periodic_factor():
    # limit = (int {x}) * ((1/k) sum_r g(x0 + r/k)); k = 5, x0 = 0.37 gives 0.285
    fam = build_family([rotation(SQRT2)])
    pred = predict(fam, [frac_part()],
                   periodic=(frac_part(), finite_rotation(5), 0.37))
    assert pred.applicable
    assert pred.value == pytest.approx(0.285, abs=1e-13)
    assert pred.derivation[-1].kind == "periodic_mean"
    assert pred.derivation[-1].value == pytest.approx(0.57, abs=1e-14)


def test_predict_inapplicable_on_periodic_quotient():
    # members differ by the rational 1/2, so their quotient has period 2
    fam = build_family([rotation(SQRT2),
                        rotation(ScalarConstant.surd("1/2", 1, 2))])
    pred = predict(fam, [frac_part(), frac_part()])
    assert not pred.applicable
    assert any("period 2" in c for c in pred.caveats)
    with pytest.raises(ValueError):
        compare(pred, None, 1e-3)


def test_predict_integer_shift_is_inapplicable_not_merged():
    # alpha and alpha + 1 act identically; flagged through the quotient check
    fam = build_family([rotation(SQRT2), rotation(ScalarConstant.surd(1, 1, 2))])
    pred = predict(fam, [frac_part(), frac_part()])
    assert not pred.applicable
    assert any("period 1" in c for c in pred.caveats)


def test_predict_mixed_surd_bases_applicable():
    # sqrt(2) - sqrt(3) is irrational; recognized symbolically, no search
    fam = build_family([rotation(SQRT2), rotation(SQRT3)])
    assert predict(fam, [frac_part(), frac_part()], bound=1).applicable


def test_predict_surd_vs_rational_applicable():
    fam = build_family([rotation(SQRT2), finite_rotation(3)])
    pred = predict(fam, [frac_part(), indicator(0.0, 0.5)])
    assert pred.applicable
    assert pred.value == pytest.approx(0.25, abs=1e-13)


def test_predict_group_collapse():
    # [T, T] with f, g couples into one integral of the product
    fam2 = build_family([rotation(SQRT2), rotation(SQRT2)])
    p2 = predict(fam2, [frac_part(), power_of_frac(2)])
    assert p2.value == pytest.approx(0.25, abs=1e-12)  # int {x}^3
    fam1 = build_family([rotation(SQRT2)])
    p1 = predict(fam1, [power_of_frac(3)])
    assert p2.value == pytest.approx(p1.value, abs=1e-12)


def test_predict_permutation_invariance():
    fs = [frac_part(), power_of_frac(2), indicator(0.2, 0.9)]
    specs = [rotation(SQRT2), rotation(SQRT3), rotation(SQRT2)]
    base = predict(build_family(specs), fs)
    perm = [2, 0, 1]
    rearranged = predict(build_family([specs[i] for i in perm]),
                         [fs[i] for i in perm])
    assert rearranged.value == pytest.approx(base.value, abs=1e-13)
    assert rearranged.applicable == base.applicable


def test_predict_constant_absorption():
    fam = build_family([rotation(SQRT2), rotation(SQRT3)])
    with_const = predict(fam, [frac_part(), constant(2.0)])
    assert with_const.value == pytest.approx(1.0, abs=1e-13)


def test_predict_argument_errors():
    fam = build_family([rotation(SQRT2)])
    with pytest.raises(ValueError):
        predict(fam, [frac_part(), frac_part()])
    with pytest.raises(ValueError):
        predict(fam, [frac_part()], periodic=(frac_part(), rotation(SQRT3), 0.0))


# ---------------------------------------------------------------------------
# compare


def test_compare_pass_and_fail():
    fam = build_family([rotation(SQRT2), rotation(SQRT3)])
    fs = [frac_part(), frac_part()]
    pred = predict(fam, fs)
    trace = multiple_average(fam, fs, 0.3, Schedule.geometric(50_000))
    rep = compare(pred, trace, 5e-3)
    assert rep.passed and rep.final_error <= 5e-3
    assert rep.tail == trace.est_tail
    # negative control: an off-by-0.05 prediction must fail at the same tol
    from torusavg.oracle import Prediction
    wrong = Prediction(pred.value + 0.05, pred.derivation, True, ())
    assert not compare(wrong, trace, 5e-3).passed


def test_compare_rejects_bad_tolerance():
    fam = build_family([rotation(SQRT2)])
    pred = predict(fam, [frac_part()])
    trace = multiple_average(fam, [frac_part()], 0.0, Schedule((100,)))
    with pytest.raises(ValueError):
        compare(pred, trace, 0.0)


# ---------------------------------------------------------------------------
# ergodicity diagnostic


def test_ergodicity_report_ergodic_rotation():
    pairs = [(indicator(0.0, 0.3), indicator(0.1, 0.6)),
             (indicator(0.5, 0.9), indicator(0.2, 0.4))]
    rep = ergodicity_report(rotation(SQRT2), pairs,
                            Schedule.geometric(50_000), tol=5e-3)
    assert rep.verdict == "consistent-with-ergodic"
    for r in rep.pairs:
        assert r.passed and abs(r.measured - r.expected) == r.error


def test_ergodicity_report_catches_periodic_map():
    # x -> x + 1/2 with A = [0, 0.5), B = [0.5, 1): T^-n A alternates between
    # the two halves, so the correlation is 0.25, equal to len(A)*len(B) —
    # a single pair is a false negative for non-ergodicity...
    A, B = indicator(0.0, 0.5), indicator(0.5, 1.0)
    rep = ergodicity_report(finite_rotation(2), [(A, B)],
                            Schedule((1000,)), tol=1e-3)
    assert rep.verdict == "consistent-with-ergodic"
    # ...but a second pair exposes the periodicity
    C = indicator(0.0, 0.25)
    rep = ergodicity_report(finite_rotation(2), [(A, B), (C, C)],
                            Schedule((1000,)), tol=1e-3)
    assert rep.verdict == "not-ergodic"


def test_ergodicity_report_identity_not_ergodic():
    A, B = indicator(0.0, 0.3), indicator(0.5, 0.9)
    rep = ergodicity_report(identity(), [(A, B)], Schedule((100,)), tol=1e-3)
    assert rep.verdict == "not-ergodic"
    # the identity leaves A where it is: measured overlap is len(A ∩ B) = 0
    assert rep.pairs[0].measured == pytest.approx(0.0, abs=1e-15)
