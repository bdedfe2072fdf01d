"""Battery checks for fiberwise-linear multiplications."""

import pytest

from conftest import rand_ratfunc, rng_for
from fmanlin.fman import (
    BaseFManifold,
    LinearVectorField,
    MultComponents,
    PreconditionError,
    apply_delta,
    check_associative,
    check_base,
    check_battery,
    check_commutative,
    check_euler,
    check_hertling_manin,
    check_unit,
    evaluate_residual,
    hm_tensor,
    lie_components,
    lie_star,
    star_product,
)
from fmanlin.symcore import RatFunc, parse_expr
from fmanlin.tensor import (
    Chart,
    Section,
    TensorField,
    apply_tensor,
    extract_components,
    lie_derivative,
    scaling_class,
    table_eq,
    vertical_lift,
)

C11 = Chart.standard(1, 1)
C21 = Chart.standard(2, 1)

BATTERY_RECORDS = [
    "side-tables-equal",
    "star-symmetric",
    "derivative-symmetric",
    "star-associative",
    "l-composition",
    "second-derivative-symmetric",
    "unit-star",
    "unit-side",
    "unit-derivative",
    "base-integrability",
    "derivative-commutator",
    "derivative-bracket",
    "integrability-oracle",
]


def rf(text, chart=C21):
    return parse_expr(text, chart.names)


def line_example():
    """1D base, rank-1 fiber: dx * dx = dx, l along dx the identity."""
    c = MultComponents(chart=C11, d={}, l={(0, 0, 0): 1}, star={(0, 0, 0): 1})
    e = LinearVectorField(C11, (1,), ((0,),))
    return c, e


def plane_example(h_text="x2"):
    """2D base, rank-1 fiber, with a pure second-derivative table."""
    c = MultComponents(
        chart=C21,
        d={(0, 0, 1, 1): rf(h_text)},
        l={(0, 0, 0): 1},
        star={(0, 0, 0): 1, (1, 0, 1): 1, (1, 1, 0): 1},
    )
    e = LinearVectorField(C21, (1, 0), ((0,),))
    return c, e


def tilted_plane(d00, d01):
    """The plane star with l = 0 and a symmetric derivative table.

    Integrable exactly when d2(d00) = d1(d01), which makes it the natural
    family for exercising both verdict routes.
    """
    return MultComponents(
        chart=C21,
        d={
            (0, 0, 0, 0): rf(d00),
            (0, 0, 0, 1): rf(d01),
            (0, 0, 1, 0): rf(d01),
        },
        l={},
        star={(0, 0, 0): 1, (1, 0, 1): 1, (1, 1, 0): 1},
    )


def test_line_example_battery_passes():
    c, e = line_example()
    rep = check_battery(c, e)
    assert rep.passed
    assert [r.name for r in rep.records] == BATTERY_RECORDS


def test_plane_example_battery_passes():
    c, e = plane_example()
    rep = check_battery(c, e)
    assert rep.passed, rep.render()


def test_zero_components_are_commutative():
    c = MultComponents(chart=C21, d={}, l={}, star={})
    assert check_commutative(c).passed


def test_commutativity_failure_and_witness():
    c = MultComponents(chart=C21, d={}, l={}, star={(0, 0, 1): rf("x1")})
    rep = check_commutative(c)
    rec = rep.record("star-symmetric")
    assert not rec.passed
    assert rec.witness == (0, 0, 1)
    again = evaluate_residual(rec.name, rec.witness, c)
    assert not again.is_zero()
    assert str(again) == rec.residual


def test_associativity_failure_of_modified_plane_example():
    c, _ = plane_example()
    bad = MultComponents(
        chart=C21, d=c.d, l={(0, 0, 0): 1, (0, 0, 1): 1}, star=c.star
    )
    rep = check_associative(bad)
    rec = rep.record("l-composition")
    assert not rec.passed
    assert rec.witness == (0, 0, 1, 1)
    assert not evaluate_residual(rec.name, rec.witness, bad).is_zero()
    # direct frame check on the assembled tensor: associativity fails on
    # (dx2, dx2, lifted frame section)
    t = bad.assemble()
    dx2 = TensorField.coordinate_field(C21, 1)
    lift = vertical_lift(Section.frame(C21, 0))
    lhs = apply_tensor(t, apply_tensor(t, dx2, dx2), lift)
    rhs = apply_tensor(t, dx2, apply_tensor(t, dx2, lift))
    assert lhs != rhs


def test_unit_check_passes_on_examples():
    for c, e in (line_example(), plane_example()):
        assert check_unit(c, e).passed


def test_unit_failure_with_scaling_candidate():
    c, _ = line_example()
    e2 = LinearVectorField(C11, (1,), ((1,),))
    rep = check_unit(c, e2)
    rec = rep.record("unit-derivative")
    assert not rec.passed
    assert rec.witness == (0, 0, 0)
    # oracle on the assembled tensor: the candidate times dx is not dx
    t = c.assemble()
    dx = TensorField.coordinate_field(C11, 0)
    prod = apply_tensor(t, e2.as_field(), dx)
    assert prod.vector_components() == [rf("1", C11), rf("xi1", C11)]
    assert prod != dx


def test_precondition_chain_is_enforced():
    c = MultComponents(chart=C21, d={}, l={}, star={(0, 0, 1): rf("x1")})
    with pytest.raises(PreconditionError) as info:
        check_associative(c)
    assert info.value.report is not None
    with pytest.raises(PreconditionError):
        check_hertling_manin(c)


def test_integrability_pass_and_fail_instances():
    good = tilted_plane("x2", "x1")  # d2(x2) = 1 = d1(x1)
    rep = check_hertling_manin(good)
    assert rep.passed, rep.render()

    bad = tilted_plane("x1", "x1")  # d2(x1) = 0 != 1 = d1(x1)
    rep = check_hertling_manin(bad)
    assert not rep.passed
    comp = [rep.record(n).passed for n in ("base-integrability", "derivative-commutator", "derivative-bracket")]
    assert all(comp[:1])  # the base star alone is integrable
    assert not all(comp)
    assert not rep.record("integrability-oracle").passed
    assert not rep.notes  # both routes agree, so no disagreement note


def test_integrability_oracle_agrees_with_tables_on_random_family():
    rng = rng_for("fman-oracle")
    seen = set()
    for _ in range(8):
        d00 = rand_ratfunc(rng, C21.base_names, 2, with_den=False)
        d01 = rand_ratfunc(rng, C21.base_names, 2, with_den=False)
        c = tilted_plane(str(d00), str(d01))
        rep = check_hertling_manin(c)
        table_verdict = all(
            rep.record(n).passed
            for n in (
                "base-integrability",
                "derivative-commutator",
                "derivative-bracket",
            )
        )
        oracle_verdict = rep.record("integrability-oracle").passed
        assert table_verdict == oracle_verdict
        seen.add(oracle_verdict)
        expected = d00.partial("x2") == d01.partial("x1")
        assert oracle_verdict == expected
    assert seen == {True, False}


def test_defect_tensor_is_fiberwise_linear():
    bad = tilted_plane("x1", "x1")
    defect = hm_tensor(bad.assemble())
    assert not defect.is_zero()
    assert scaling_class(defect) == "linear"


def test_euler_field_on_line_example():
    c, e = line_example()
    euler = LinearVectorField(C11, (rf("x1 + 5", C11),), ((1,),))
    rep = check_euler(c, e, euler)
    assert rep.passed, rep.render()


def test_euler_field_on_plane_example():
    c, e = plane_example()
    euler = LinearVectorField(C21, (rf("x1"), rf("x2/3")), ((0,),))
    rep = check_euler(c, e, euler)
    assert rep.passed, rep.render()


def test_euler_failure_has_reproducible_witness():
    c, e = plane_example()
    bogus = LinearVectorField(C21, (rf("x1"), rf("x2")), ((0,),))
    rep = check_euler(c, e, bogus)
    assert not rep.passed
    rec = next(r for r in rep.records if not r.passed)
    again = evaluate_residual(rec.name, rec.witness, c, e=e, euler=bogus)
    assert str(again) == rec.residual


def test_nonlinear_candidates_are_rejected_at_construction():
    with pytest.raises(ValueError, match="fiber"):
        LinearVectorField(C11, (1,), ((rf("xi1", C11),),))
    with pytest.raises(ValueError, match="fiber"):
        LinearVectorField(C11, (rf("xi1", C11),), ((0,),))


def test_lie_components_match_tensor_lie_derivative():
    rng = rng_for("fman-lie")
    c, e = plane_example()
    t = c.assemble()
    for _ in range(6):
        beta = tuple(rand_ratfunc(rng, C21.base_names, 1, with_den=False) for _ in range(2))
        lam = ((rand_ratfunc(rng, C21.base_names, 1, with_den=False),),)
        x = LinearVectorField(C21, beta, lam)
        dt, lt, rt = lie_components(c, x)
        comps = extract_components(lie_derivative(x.as_field(), t))
        assert table_eq(dt, comps.d)
        assert table_eq(lt, comps.ls[0])
        assert table_eq(lt, comps.ls[1])
        assert table_eq(rt, comps.basic)


def test_lie_components_trivial_cases():
    c, e = plane_example()
    dt, lt, rt = lie_components(c, LinearVectorField.zero(C21))
    assert not dt and not lt and not rt
    # along the unit field the base product is preserved
    _, _, rt = lie_components(c, e)
    assert not rt


def test_base_extraction():
    c, e = plane_example()
    base = check_base(c, e)
    assert base.chart.k == 0
    assert base.unit == (RatFunc.one(), RatFunc.zero())
    assert base.verify().passed
    prod = star_product(
        base.as_components(), {1: RatFunc.one()}, {1: RatFunc.one()}
    )
    assert prod == {}  # dx2 * dx2 = 0 downstairs
    with pytest.raises(ValueError):
        check_base(c, None)
    broken = MultComponents(chart=C21, d={}, l={}, star={(0, 0, 1): rf("x1")})
    with pytest.raises(PreconditionError):
        check_base(broken, e)


def test_unit_contraction_identity():
    # sum_j dxi^j(e) s_j = -sum_j xi^j Delta_e s_j for fiberwise-linear e
    rng = rng_for("fman-e-ajut")
    chart = Chart.standard(2, 2)
    for _ in range(5):
        beta = tuple(rand_ratfunc(rng, chart.base_names, 1, with_den=False) for _ in range(2))
        lam = tuple(
            tuple(rand_ratfunc(rng, chart.base_names, 1, with_den=False) for _ in range(2))
            for _ in range(2)
        )
        e = LinearVectorField(chart, beta, lam)
        field = e.as_field()
        lhs = {j: field.vector_components()[chart.n + j] for j in range(chart.k)}
        rhs = {}
        for k in range(chart.k):
            xi_k = RatFunc.variable(chart.fiber_names[k])
            for j, val in apply_delta(e, {k: RatFunc.one()}).items():
                rhs[j] = rhs.get(j, RatFunc.zero()) - xi_k * val
        assert all(lhs.get(j, RatFunc.zero()) == rhs.get(j, RatFunc.zero()) for j in range(chart.k))


def test_from_tensor_round_trip():
    for c, _ in (line_example(), plane_example()):
        assert MultComponents.from_tensor(c.assemble()) == c


def test_base_manifold_battery_reuse():
    base = BaseFManifold(
        chart=Chart.standard(2, 0),
        star={(0, 0, 0): 1, (1, 0, 1): 1, (1, 1, 0): 1},
        unit=(1, 0),
    )
    rep = base.verify()
    assert rep.passed
    # base-only data still runs the full record set; fiber checks are vacuous
    assert [r.name for r in rep.records] == BATTERY_RECORDS
    skew = BaseFManifold(
        chart=Chart.standard(2, 0), star={(0, 0, 1): rf("x1")}, unit=(1, 0)
    )
    assert not skew.verify().passed


def test_lie_star_is_tensorial_in_its_arguments():
    c, _ = plane_example()
    one = RatFunc.one()
    w = {0: rf("x1*x2"), 1: rf("x2")}
    # L_w(*) is a tensor: scaling an argument scales the value, with no
    # derivative coupling
    direct = lie_star(c, w, {0: one}, {1: rf("x1")})
    plain = lie_star(c, w, {0: one}, {1: one})
    scaled = {a: val * rf("x1") for a, val in plain.items()}
    assert direct == {a: v for a, v in scaled.items() if not v.is_zero()}
