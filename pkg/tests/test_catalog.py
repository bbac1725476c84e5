import pytest

from morseflow import catalog
from morseflow.flowcat import LocallyFiniteFamily
from morseflow.nervess import e1_page, e2_page, total_homology
from morseflow.zhom import FGAbelianGroup

Z = FGAbelianGroup(1)


def test_catalog_validates():
    catalog.assert_catalog_valid()


def test_torus_component_counts():
    cat = catalog.build_torus()
    counts = [len(cat.hom_components(p, q))
              for (p, q) in (("p1", "p2"), ("p2", "p3"), ("p3", "p4"),
                             ("p1", "p3"), ("p2", "p4"), ("p1", "p4"))]
    assert counts == [2, 2, 2, 4, 4, 6]


def test_torus_interval_endpoints_share_middle_flow():
    cat = catalog.build_torus()
    # both bracketings of a matched front/back chain land on the interval of
    # its middle flow; mixed chains are isolated points
    assert cat.compose(cat.compose("a_f", "b_l"), "c_f") == "int_l"
    assert cat.compose("a_b", cat.compose("b_l", "c_b")) == "int_l"
    assert cat.compose(cat.compose("a_f", "b_r"), "c_f") == "int_r"
    assert cat.compose(cat.compose("a_f", "b_l"), "c_b") == "p_flb"
    broken = [c for c in cat.hom_components("p1", "p4") if c.broken_only]
    assert len(broken) == 4


def test_elementary_homology():
    expect = {"circle": [Z, Z], "sphere2": [Z, FGAbelianGroup(0), Z]}
    for name, groups in expect.items():
        page2 = e2_page(e1_page(catalog.build_elementary(name)))
        for n, g in enumerate(groups):
            assert total_homology(page2, n) == g


def test_torus_total_homology():
    page2 = e2_page(e1_page(catalog.build_torus()))
    assert [total_homology(page2, n) for n in range(3)] == \
        [Z, FGAbelianGroup(2), Z]


def test_counterexample_arc_membership():
    cat = catalog.counterexample_window(9)
    # plus side: x0, x1 share the long arc; x_{2k}, x_{2k+1} share arc k
    assert cat.compose("x0", "s+") == "A+0"
    assert cat.compose("x1", "s+") == "A+0"
    assert cat.compose("x4", "s+") == "A+2"
    assert cat.compose("x5", "s+") == "A+2"
    # minus side: x_{2k+1}, x_{2k+2} share arc k; x0 sits alone
    assert cat.compose("x0", "s-") == "Az-"
    assert cat.compose("x1", "s-") == "A-0"
    assert cat.compose("x2", "s-") == "A-0"
    assert cat.compose("x3", "s-") == "A-1"
    # the copies swap sides upstream: g+ lands in the minus copy
    assert cat.compose("g+", "x0") == "Bz-"
    assert cat.compose("g+", "x3") == "B-1"
    assert cat.compose("g-", "x3") == "B+1"


def test_counterexample_bubble_routing():
    cat = catalog.counterexample_window(4)
    # matched signs stay on the cylinder, mismatches fall into bubbles,
    # and the pinch point collects the broken chain over zero
    assert cat.compose("g+", "A+1") == "C0"
    assert cat.compose("g-", "A+1") == "D+1"
    assert cat.compose("g+", "A-0") == "D-0"
    assert cat.compose("g-", "A-0") == "C0"
    assert cat.compose("g+", "Az-") == "P0"
    assert cat.compose("Bz-", "s-") == "P0"
    assert cat.compose("Bz-", "s+") == "C0"


def test_build_counterexample_dispatch():
    fam = catalog.build_counterexample("family")
    assert isinstance(fam, LocallyFiniteFamily)
    win = catalog.build_counterexample("window", n=2)
    assert [c.id for c in win.hom_components("p2", "p3")] == ["x0", "x1", "x2"]
    tr = catalog.build_counterexample("transversal", k=6)
    assert len(tr.hom_components("p2", "p3")) == 6
    with pytest.raises(ValueError):
        catalog.build_counterexample("banana")
    with pytest.raises(ValueError):
        catalog.transversal(3)


def test_counterexample_window_h3():
    for N in (0, 5, 12):
        page2 = e2_page(e1_page(catalog.counterexample_window(N)))
        assert total_homology(page2, 3) == FGAbelianGroup(0), N


def test_transversal_h3_all_even_k():
    for k in (2, 4, 6):
        page2 = e2_page(e1_page(catalog.transversal(k)))
        assert total_homology(page2, 3) == Z, k


def test_transversal_matches_product_homology():
    # the transversal category is tame, so its homology must match the
    # sphere-times-circle Kunneth values in every degree
    page2 = e2_page(e1_page(catalog.transversal(4)))
    assert [total_homology(page2, n) for n in range(4)] == [Z, Z, Z, Z]


def test_round_trip_preserves_engine_output(tmp_path):
    from morseflow.flowcat import write_category
    cat = catalog.build_torus()
    path = tmp_path / "torus.json"
    write_category(cat, path)
    again = catalog.parse_category_file(path)
    h_direct = [total_homology(e2_page(e1_page(cat)), n) for n in range(3)]
    h_again = [total_homology(e2_page(e1_page(again)), n) for n in range(3)]
    assert h_direct == h_again


def test_each_generator_in_one_arc_per_side():
    cat = catalog.counterexample_window(12)
    plus = {}
    minus = {}
    for i in range(13):
        plus.setdefault(cat.compose(f"x{i}", "s+"), []).append(i)
        minus.setdefault(cat.compose(f"x{i}", "s-"), []).append(i)
    assert plus == {f"A+{k}": [i for i in (2 * k, 2 * k + 1) if i <= 12]
                    for k in range(7)}
    assert minus["Az-"] == [0]
    for k in range(6):
        assert minus[f"A-{k}"] == [2 * k + 1, 2 * k + 2]
