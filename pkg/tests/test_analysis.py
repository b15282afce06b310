import json
from fractions import Fraction

import numpy as np
import pytest

from milnorcells.analysis import (
    EquivarianceReport,
    FamilyReport,
    MinimalityReport,
    StageReport,
    analyze,
    constrained_hessian,
    equivariance_check,
    euler_check,
    family_scan,
    morse_index,
)
from milnorcells.arrangement import Arrangement, parse_arrangement
from milnorcells.lattice import build_lattice, poincare
from milnorcells.poly import build_critical_system, expand_product
from milnorcells.solver import TrackerOptions
from oracles import example_closed_form, generic_counts, qt_solution_norm

EXAMPLE = Arrangement.from_rows([[1, 0, 0], [1, -1, 0], [1, 1, -1]])
QT = parse_arrangement("vars: x y z\nparam: t\nform: x\nform: x + y\nform: x - y + t z\n")


@pytest.fixture(scope="module")
def example_report():
    return analyze(EXAMPLE, TrackerOptions(seed=7))


def test_example_report(example_report):
    rep = example_report
    assert rep.passed
    assert rep.found() == (3, 6, 3) == rep.cell_counts.c_F
    assert [s.stage_dim for s in rep.stages] == [3, 2, 1]
    assert rep.stage(3).bezout == 12 and rep.stage(3).diverged == 9
    assert rep.stage(1).max_solution_norm == pytest.approx(1.0)
    assert rep.euler_ok and rep.indices_ok and rep.equivariance.passed
    assert len(rep.equivariance.orbits) == 1 + 2 + 0  # stages 3 and 2; stage 1 is analytic


def test_example_indices(example_report):
    for s in example_report.stages:
        assert s.indices == (s.stage_dim - 1,) * s.found


def test_report_json_round_trip(example_report):
    d = json.loads(json.dumps(example_report.to_dict()))
    back = MinimalityReport.from_dict(d)
    assert back == example_report
    assert back.to_dict() == example_report.to_dict()
    assert d["pass"] is True


def test_coordinate_arrangement_uses_a_random_frame():
    rep = analyze(Arrangement.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]]))
    assert rep.passed and rep.found() == (3, 6, 3)
    assert rep.frame != ((1, 0, 0), (0, 1, 0), (0, 0, 1))


@pytest.mark.parametrize("rows", [
    [[1, 0, 0], [0, 1, 0], [1, 1, 1], [1, 2, 3]],
    [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, -1, 0], [1, 0, -1], [0, 1, -1]],
])
def test_analyze_matches_lattice(rows):
    rep = analyze(Arrangement.from_rows(rows))
    assert rep.passed
    assert rep.found() == rep.cell_counts.c_F


def test_generic_four_space():
    rows = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 1, 1, 1]]
    rep = analyze(Arrangement.from_rows(rows))
    assert rep.passed
    assert rep.found() == generic_counts(5, 4) == (5, 20, 30, 20)


def test_morse_index_at_closed_form_points():
    sys = build_critical_system(expand_product(EXAMPLE.forms))
    for z in example_closed_form():
        assert morse_index(z, sys) == 2
        H, tangent, stationarity = constrained_hessian(z, sys)
        assert tangent.shape == (6, 4) and H.shape == (4, 4)
        assert np.allclose(tangent.T @ tangent, np.eye(4), atol=1e-12)
        assert stationarity < 1e-8


def test_equivariance_check():
    pts = example_closed_form()
    rep = equivariance_check(pts, 3)
    assert rep.passed and rep.orbits == ((0, 1, 2),)
    assert not equivariance_check(pts[:2], 3).passed
    assert not equivariance_check(pts + 1e-4, 3).passed
    assert equivariance_check(np.zeros((0, 3)), 3).passed
    assert EquivarianceReport.from_dict(rep.to_dict()) == rep


def test_euler_check_detects_a_wrong_count(example_report):
    pd = poincare(build_lattice(EXAMPLE))
    assert euler_check(example_report, pd, 3)
    stages = list(example_report.stages)
    s = stages[0]
    stages[0] = StageReport(s.stage_dim, s.predicted, s.found - 1, s.bezout, s.diverged + 1,
                            s.failed, s.max_solution_norm, False)
    broken = MinimalityReport(example_report.cell_counts, tuple(stages), False,
                              example_report.equivariance, True, 7)
    assert not euler_check(broken, pd, 3)


def test_family_scan():
    values = [Fraction(1), Fraction(1, 10), Fraction(1, 100), Fraction(0)]
    fam = family_scan(QT, values)
    assert [r.top.found for r in fam.rows] == [3, 3, 3, 0]
    norms = [r.max_solution_norm for r in fam.rows[:3]]
    assert norms == sorted(norms)
    for r in fam.rows[:3]:
        assert r.max_solution_norm == pytest.approx(qt_solution_norm(r.t), rel=0.05)
        assert not r.norm_warning
    last = fam.rows[3]
    assert last.top.predicted == 0 and last.passed
    assert last.report.cell_counts.c_F == (3, 6, 0)
    assert FamilyReport.from_dict(json.loads(json.dumps(fam.to_dict()))).to_dict() == fam.to_dict()


def test_family_scan_reports_degenerate_values_per_row():
    fam = family_scan(parse_arrangement("vars: x y\nparam: t\nform: x + t y\nform: x\nform: y\n"),
                      [1, 0])
    assert fam.rows[0].passed and fam.rows[0].error is None
    assert fam.rows[1].error and not fam.rows[1].passed


def test_family_scan_needs_a_parameter():
    with pytest.raises(ValueError):
        family_scan(EXAMPLE, [1])
    with pytest.raises(ValueError):
        analyze(QT)


def test_counts_do_not_depend_on_the_frame():
    braid = Arrangement.from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, -1, 0], [1, 0, -1], [0, 1, -1]])
    a = analyze(braid, TrackerOptions(seed=0), frame_seed=0)
    b = analyze(braid, TrackerOptions(seed=0), frame_seed=5)
    assert a.frame != b.frame
    assert a.found() == b.found() == a.cell_counts.c_F == (6, 30, 36)


def test_found_plus_diverged_is_bezout(example_report):
    n = 3
    for s in example_report.stages:
        if s.stage_dim >= 2:
            assert s.found + s.diverged == n * (n - 1) ** (s.stage_dim - 1) == s.bezout
