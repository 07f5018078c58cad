"""Cross-map layer: pushforward, function transport, matrix agreement, and
classification of maps between square-bracket charts."""

from fractions import Fraction

import pytest

from bisymplectic.exchange import (
    ClassificationRecord,
    CoordinateMap,
    ExchangeBundle,
    check_phase_exchange,
    classify_transformation,
    transform_Q,
    transform_dynfuncs,
    transport_rep,
    verify_exchange,
)
from bisymplectic.expr import Rat, Symbol, SampleDomain, equiv_zero, evaluate, parse_expr, sum_of
from bisymplectic.liealg import IsomorphismMatrix, check_representation
from bisymplectic.rmatrix import RMatrix
from bisymplectic.symplectic import canonical_field, field_domain


def parse_over(strings, symbols):
    table = {s.name: s for s in symbols}
    return tuple(parse_expr(text, table) for text in strings)


def assert_same(expr, expected, domain, seed=0):
    rep = equiv_zero(sum_of([expr, Rat(-1) * expected]), domain, seed=seed)
    assert rep.zero, f"expressions differ, max {rep.max_residual}"


@pytest.fixture(scope="module")
def map1(ycoords, xcoords):
    return CoordinateMap(ycoords, xcoords, parse_over(("y4", "y3", "-y2 + y4", "-y1"), ycoords))


@pytest.fixture(scope="module")
def inv_map1(xcoords, ycoords):
    return CoordinateMap(xcoords, ycoords, parse_over(("-x4", "x1 - x3", "x2", "x1"), xcoords))


@pytest.fixture(scope="module")
def r1():
    # bracket-side classical matrix, carried over from the dual side through C
    return RMatrix.from_wedge(
        4, {(0, 3): -1, (1, 2): -1, (2, 3): Fraction(-1, 2)}, variance="upper"
    )


@pytest.fixture(scope="module")
def bundle1(bialg1, c1, map1, px1, py1, s_x1, st_y1, rt1, r1, rep1):
    return ExchangeBundle(
        bialg=bialg1,
        C=c1,
        cmap=map1,
        P=px1,
        Pt=py1,
        S=tuple(s_x1),
        St=tuple(st_y1),
        rt=rt1,
        r=r1,
        rept=rep1,
    )


class TestCoordinateMap:
    def test_compose_rewrites_target_symbols(self):
        y = (Symbol("u"),)
        x = (Symbol("v"),)
        cmap = CoordinateMap(y, x, parse_over(("u^2",), y))
        out = cmap.compose(parse_expr("v + 1", {"v": x[0]}))
        assert evaluate(out, {"u": 3}) == 10

    def test_length_mismatch_rejected(self, ycoords, xcoords):
        with pytest.raises(ValueError):
            CoordinateMap(ycoords, xcoords, parse_over(("y1", "y2"), ycoords))

    def test_jacobian_entries(self, ycoords, xcoords, map1):
        jac = map1.jacobian()
        # d x3 / d y2 = -1, d x3 / d y4 = 1
        assert evaluate(jac[2][1], {}) == -1
        assert evaluate(jac[2][3], {}) == 1

    def test_full_rank_on_invertible_map(self, map1):
        assert map1.check_full_rank()

    def test_rank_drop_detected(self):
        u, v = Symbol("u"), Symbol("v")
        p, q = Symbol("p"), Symbol("q")
        cmap = CoordinateMap((u, v), (p, q), parse_over(("u + v", "2*u + 2*v"), (u, v)))
        assert not cmap.check_full_rank()

    def test_parameters_exclude_source_coords(self, ycoords, xcoords):
        a = Symbol("a", "parameter")
        table = {s.name: s for s in ycoords} | {"a": a}
        exprs = tuple(parse_expr(t, table) for t in ("a*y1", "y2", "y3", "y4"))
        cmap = CoordinateMap(ycoords, xcoords, exprs)
        assert cmap.parameters() == (a,)


class TestPhaseExchange:
    def test_worked_pair_map_passes(self, map1, px1, py1):
        rep = check_phase_exchange(map1, px1, py1)
        assert rep.zero, rep.witness

    def test_identity_map_with_equal_fields(self, xcoords, px1):
        ident = CoordinateMap(xcoords, xcoords, parse_over(("x1", "x2", "x3", "x4"), xcoords))
        assert check_phase_exchange(ident, px1, px1).zero

    def test_dropped_term_fails_with_witness(self, ycoords, xcoords, px1, py1):
        broken = CoordinateMap(ycoords, xcoords, parse_over(("y4", "y3", "-y2", "-y1"), ycoords))
        rep = check_phase_exchange(broken, px1, py1)
        assert not rep.zero
        assert rep.witness is not None and rep.max_residual > 1e-3

    def test_coordinate_mismatch_rejected(self, map1, px1, py1):
        with pytest.raises(ValueError):
            check_phase_exchange(map1, py1, py1)
        with pytest.raises(ValueError):
            check_phase_exchange(map1, px1, px1)


class TestTransformDynfuncs:
    def test_scalar_matrix_divides(self, xcoords, s_x1, px1):
        ident = CoordinateMap(xcoords, xcoords, parse_over(("x1", "x2", "x3", "x4"), xcoords))
        twice = IsomorphismMatrix.from_rows(
            [[2 if i == j else 0 for j in range(4)] for i in range(4)]
        )
        out = transform_dynfuncs(twice, s_x1, ident)
        domain = field_domain(px1, list(s_x1))
        for got, s in zip(out, s_x1):
            assert_same(got, Rat(Fraction(1, 2)) * s, domain)

    def test_worked_pair_lands_on_declared_family(self, c1, s_x1, map1, st_y1, py1):
        out = transform_dynfuncs(c1, s_x1, map1)
        domain = field_domain(py1, list(st_y1))
        for got, want in zip(out, st_y1):
            assert_same(got, want, domain)

    def test_round_trip_restores_family(self, c1, s_x1, map1, inv_map1, px1):
        forward = transform_dynfuncs(c1, s_x1, map1)
        back = transform_dynfuncs(
            IsomorphismMatrix.from_rows(c1.inverse()), forward, inv_map1
        )
        domain = field_domain(px1, list(s_x1))
        for got, want in zip(back, s_x1):
            assert_same(got, want, domain)

    def test_length_mismatch_rejected(self, c1, s_x1, map1):
        with pytest.raises(ValueError):
            transform_dynfuncs(c1, s_x1[:2], map1)


class TestTransportRep:
    def test_recombined_matrices_represent_bracket_side(self, c1, rep1, f_a49iv):
        rep = transport_rep(c1, rep1)
        assert check_representation(rep, f_a49iv).ok

    def test_dimension_mismatch_rejected(self, rep1):
        with pytest.raises(ValueError):
            transport_rep(IsomorphismMatrix.from_rows([[1, 0], [0, 1]]), rep1)


class TestTransformQ:
    def test_worked_pair_sides_agree(self, bundle1):
        rep = transform_Q(bundle1)
        assert rep.zero, rep.witness

    def test_zero_matrices_agree_trivially(self, bundle1):
        zero = RMatrix.from_wedge(4, {}, variance="lower")
        zero_up = RMatrix.from_wedge(4, {}, variance="upper")
        quiet = ExchangeBundle(
            bialg=bundle1.bialg,
            C=bundle1.C,
            cmap=bundle1.cmap,
            P=bundle1.P,
            Pt=bundle1.Pt,
            S=bundle1.S,
            St=bundle1.St,
            rt=zero,
            r=zero_up,
            rept=bundle1.rept,
        )
        assert transform_Q(quiet).zero

    def test_perturbed_dual_matrix_detected(self, bundle1, rt1):
        bent = RMatrix.from_wedge(
            4,
            {(0, 1): Fraction(-1, 2) + Fraction(1, 10), (0, 3): -1, (1, 2): -1},
            variance="lower",
        )
        noisy = ExchangeBundle(
            bialg=bundle1.bialg,
            C=bundle1.C,
            cmap=bundle1.cmap,
            P=bundle1.P,
            Pt=bundle1.Pt,
            S=bundle1.S,
            St=bundle1.St,
            rt=bent,
            r=bundle1.r,
            rept=bundle1.rept,
        )
        assert not transform_Q(noisy).zero

    def test_missing_fields_named(self, bundle1):
        partial = ExchangeBundle(
            bialg=bundle1.bialg,
            C=bundle1.C,
            cmap=bundle1.cmap,
            P=bundle1.P,
            Pt=bundle1.Pt,
            S=bundle1.S,
            St=bundle1.St,
            rt=bundle1.rt,
        )
        with pytest.raises(ValueError, match="r, rept"):
            transform_Q(partial)


class TestVerifyExchange:
    def test_worked_pair_all_stages_pass(self, bundle1):
        report = verify_exchange(bundle1)
        assert report.ok
        assert [s.name for s in report.stages] == [
            "phase_exchange",
            "dynfunc_transport",
            "dual_symmetry",
            "q_transform",
        ]
        assert not report.stage("q_transform").skipped

    def test_matrix_stage_skipped_when_fields_absent(self, bundle1):
        lean = ExchangeBundle(
            bialg=bundle1.bialg,
            C=bundle1.C,
            cmap=bundle1.cmap,
            P=bundle1.P,
            Pt=bundle1.Pt,
            S=bundle1.S,
            St=bundle1.St,
        )
        report = verify_exchange(lean)
        assert report.ok
        stage = report.stage("q_transform")
        assert stage.skipped
        for name in ("rt", "r", "rept"):
            assert name in stage.reason

    def test_wrong_map_flagged(self, bundle1, ycoords, xcoords):
        broken = CoordinateMap(ycoords, xcoords, parse_over(("y4", "y3", "-y2", "-y1"), ycoords))
        bent = ExchangeBundle(
            bialg=bundle1.bialg,
            C=bundle1.C,
            cmap=broken,
            P=bundle1.P,
            Pt=bundle1.Pt,
            S=bundle1.S,
            St=bundle1.St,
        )
        report = verify_exchange(bent)
        assert not report.ok
        assert any(s.name == "phase_exchange" for s in report.failures)


@pytest.fixture(scope="module")
def ztcoords():
    return tuple(Symbol(f"zt{i}") for i in range(1, 5))


@pytest.fixture(scope="module")
def zmap1(zcoords, ztcoords):
    # chart-to-chart map of the worked pair
    return CoordinateMap(
        zcoords, ztcoords, parse_over(("-z4", "1/z1 - z3", "z2", "z1"), zcoords)
    )


class TestClassifyTransformation:
    def test_worked_pair_chart_map_preserves_brackets_only(self, zcoords, ztcoords, zmap1):
        d = Symbol("d", "parameter")
        za = {s.name: s for s in zcoords} | {"d": d}
        zb = {s.name: s for s in ztcoords} | {"d": d}
        invA = tuple(
            parse_expr(t, za) for t in ("d*z4 + 2*z3", "(d*z4)^2 + 2*z3^2")
        )
        invB = tuple(
            parse_expr(t, zb)
            for t in ("2*(zt2 - zt4) + d*zt1", "2*(zt2 - zt4)^2 + (d*zt1)^2")
        )
        record = classify_transformation(
            zmap1, invA, invB, canonical_field(zcoords), canonical_field(ztcoords)
        )
        assert record.bracket_preserving
        assert not record.invariant_mapping
        assert not record.canonical
        assert record.coefficients is None

    def test_identity_map_with_linear_families_is_canonical(self, zcoords, ztcoords):
        ident = CoordinateMap(
            zcoords, ztcoords, parse_over(("z1", "z2", "z3", "z4"), zcoords)
        )
        invA = parse_over(("2*z1 + z3", "z2*z4"), zcoords)
        invB = parse_over(("zt1", "zt3", "zt2*zt4"), ztcoords)
        record = classify_transformation(
            ident, invA, invB, canonical_field(zcoords), canonical_field(ztcoords)
        )
        assert record.canonical
        _, rows = record.coefficients[0]
        assert rows == (
            (Fraction(2), Fraction(1), Fraction(0)),
            (Fraction(0), Fraction(0), Fraction(1)),
        )

    def test_parameter_coefficients_recovered_per_assignment(self, zcoords, ztcoords):
        q = Symbol("q", "parameter")
        za = {s.name: s for s in zcoords} | {"q": q}
        ident = CoordinateMap(
            zcoords, ztcoords, parse_over(("z1", "z2", "z3", "z4"), zcoords)
        )
        invA = (parse_expr("q*z1 + z3", za),)
        invB = parse_over(("zt1", "zt3"), ztcoords)
        record = classify_transformation(
            ident, invA, invB, canonical_field(zcoords), canonical_field(ztcoords)
        )
        assert record.invariant_mapping
        assert len(record.coefficients) == 3
        for env, rows in record.coefficients:
            fixed = dict(env)
            assert rows == ((fixed["q"], Fraction(1)),)

    def test_scaling_map_breaks_brackets_not_mapping(self, zcoords, ztcoords):
        stretch = CoordinateMap(
            zcoords, ztcoords, parse_over(("2*z1", "z2", "z3", "z4"), zcoords)
        )
        invA = parse_over(("z1",), zcoords)
        invB = parse_over(("zt1",), ztcoords)
        record = classify_transformation(
            stretch, invA, invB, canonical_field(zcoords), canonical_field(ztcoords)
        )
        assert not record.bracket_preserving
        assert record.invariant_mapping
        _, rows = record.coefficients[0]
        assert rows == ((Fraction(1, 2),),)
        assert not record.canonical

    def test_chart_mismatch_rejected(self, zcoords, ztcoords, zmap1):
        with pytest.raises(ValueError):
            classify_transformation(
                zmap1, (), (), canonical_field(ztcoords), canonical_field(ztcoords)
            )
