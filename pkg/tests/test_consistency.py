"""Generalization of demo expressions and provenance consistency matching."""
from decimal import Decimal

from provsynth import (App, CellRef, Const, DemoGrid, GroupSet, ProvTable,
                       Ref, eval_prov, expr_generalizes, prov_consistent)


def R(r, c, t="T"):
    return Ref(CellRef(t, r, c))


def D(x):
    return Decimal(x)


class TestExprGeneralizes:
    def test_const_matches_equal_const(self):
        assert expr_generalizes(Const(D(1)), Const(D(1)))
        assert not expr_generalizes(Const(D(1)), Const(D(2)))

    def test_ref_matches_itself_and_group_membership(self):
        assert expr_generalizes(R(1, 1), R(1, 1))
        assert not expr_generalizes(R(1, 1), R(2, 1))
        # a demonstrated single value stands for any group containing it
        assert expr_generalizes(R(1, 1), GroupSet((R(1, 1), R(2, 1))))
        assert not expr_generalizes(R(3, 1), GroupSet((R(1, 1), R(2, 1))))

    def test_commutative_complete_is_multiset_equality(self):
        demo = App("sum", (R(1, 1), R(2, 1)))
        assert expr_generalizes(demo, App("sum", (R(2, 1), R(1, 1))))
        assert not expr_generalizes(demo, App("sum", (R(1, 1), R(2, 1), R(3, 1))))
        assert not expr_generalizes(demo, App("max", (R(1, 1), R(2, 1))))

    def test_commutative_partial_is_multiset_embedding(self):
        demo = App("sum", (R(3, 1), R(1, 1)), partial=True)
        target = App("sum", (R(1, 1), R(2, 1), R(3, 1)))
        assert expr_generalizes(demo, target)
        assert not expr_generalizes(App("sum", (R(4, 1),), partial=True), target)

    def test_noncommutative_partial_is_subsequence(self):
        demo = App("sub", (R(1, 1), R(3, 1)), partial=True)
        assert expr_generalizes(demo, App("sub", (R(1, 1), R(2, 1), R(3, 1))))
        # order must be preserved for non-commutative functions
        rev = App("sub", (R(3, 1), R(1, 1)), partial=True)
        assert not expr_generalizes(rev, App("sub", (R(1, 1), R(2, 1), R(3, 1))))

    def test_nested_apps_recurse(self):
        demo = App("div", (App("sum", (R(1, 4),), partial=True), R(1, 5)))
        target = App("div", (App("sum", (R(1, 4), R(2, 4))),
                             GroupSet((R(1, 5), R(2, 5)))))
        assert expr_generalizes(demo, target)

    def test_duplicate_args_respect_multiplicity(self):
        demo = App("sum", (R(1, 1), R(1, 1)), partial=True)
        assert not expr_generalizes(demo, App("sum", (R(1, 1), R(2, 1))))
        assert expr_generalizes(demo, App("sum", (R(1, 1), R(1, 1), R(2, 1))))


class TestProvConsistent:
    def test_running_example_witness(self, gt_query, inputs, demo):
        t_star = eval_prov(gt_query, inputs)
        w = prov_consistent(t_star, demo)
        assert w is not None
        # demo rows are rows 1 and 4 of the full output, in order
        assert w.rows == (1, 4)
        assert w.cols == (1, 2, 3)

    def test_row_mapping_is_injective(self):
        cell = R(1, 1)
        t_star = ProvTable(("x",), ((cell,),))
        demo = DemoGrid(None, ((cell,), (cell,)))
        # two demo rows cannot map to the same output row
        assert prov_consistent(t_star, demo) is None

    def test_unnamed_demo_uses_identity_alignment(self):
        # column selection/permutation is the output projection's job; the
        # matcher aligns positionally unless column names say otherwise
        t_star = ProvTable(("x", "y"), ((R(1, 1), R(1, 2)),))
        assert prov_consistent(
            t_star, DemoGrid(None, ((R(1, 2), R(1, 1)),))) is None
        w = prov_consistent(t_star, DemoGrid(None, ((R(1, 1), R(1, 2)),)))
        assert w is not None and w.cols == (1, 2)

    def test_named_demo_columns_pin_alignment(self):
        t_star = ProvTable(("x", "y"), ((R(1, 1), R(1, 2)),))
        # wrong name-to-content pairing: no witness
        assert prov_consistent(
            t_star, DemoGrid(("x",), ((R(1, 2),),))) is None
        w = prov_consistent(t_star, DemoGrid(("y",), ((R(1, 2),),)))
        assert w is not None and w.cols == (2,)

    def test_demo_wider_than_output_fails(self):
        t_star = ProvTable(("x",), ((R(1, 1),),))
        demo = DemoGrid(None, ((R(1, 1), R(1, 1)),))
        assert prov_consistent(t_star, demo) is None
