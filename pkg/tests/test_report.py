import math

import pytest

from vankalfa.report import REPORT_IDS, Report, generate


def test_unknown_id_lists_choices():
    with pytest.raises(ValueError) as exc:
        generate("no-such-table")
    for tid in REPORT_IDS:
        assert tid in str(exc.value)


def test_lfa_only_chebyshev_report():
    rep = generate("no-weights-p2p1", solve=False)
    assert len(rep.rows) == 10
    assert rep.columns[:6] == ["method", "k", "interval", "rho", "rho_published", "d_rho"]
    assert max(r["d_rho"] for r in rep.rows) <= 0.005
    md = rep.to_markdown()
    assert md.splitlines()[0].startswith("| method | k |")
    assert len(rep.to_csv().splitlines()) == 11


def test_measured_columns_restricted_to_ns():
    rep = generate("weights-p2p1", ns=[20], solve=False)
    assert not any(c.startswith("rhat") for c in rep.columns)


def test_richardson_report():
    rep = generate("richardson-q2q1")
    for r in rep.rows:
        assert abs(r["rho_10"] - r["rho_10_published"]) <= 0.005
        assert abs(r["rho_11"] - r["rho_11_published"]) <= 0.005


def test_cost_report_has_published_rows():
    rep = generate("cost-q2q1")
    eff = {r["quantity"]: r for r in rep.rows}["relative_efficiency"]
    assert [round(eff[m], 3) for m in ("VKI", "VKE", "VKIW", "VKEW")] == [0.886, 0.791, 0.809,
                                                                      0.648]


def test_distorted_without_solves_marks_divergence():
    rep = generate("distorted", solve=False)
    cells = [r.get("eps=0.1_published") for r in rep.rows]
    assert any(isinstance(v, float) and math.isinf(v) for v in cells)
    assert "div" in rep.to_markdown()


def test_report_formatting():
    rep = Report("t", ["a", "b"], [{"a": 1.23456, "b": None}, {"a": float("inf"), "b": "x"}])
    assert rep.to_markdown().splitlines()[2] == "| 1.235 | - |"
    assert "div" in rep.to_markdown()
    assert rep.to_csv().splitlines()[1] == "1.23456,"
