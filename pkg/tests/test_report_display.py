import io

import pytest

from markov_urng.report_display import GREEN, REPORT_RENDERERS, RESET, ReportDisplay


@pytest.fixture
def plain():
    return ReportDisplay(color=False, file=io.StringIO())


def test_every_report_kind_has_a_renderer():
    assert set(REPORT_RENDERERS) == {
        "spectrum",
        "assumptions",
        "bound",
        "sweep",
        "asymptotic",
        "extraction",
        "verification",
    }


def test_unknown_kind(plain):
    with pytest.raises(KeyError):
        plain.render("histogram", {})


def test_color_only_when_asked():
    assert ReportDisplay(color=True).paint("ok", GREEN) == f"{GREEN}ok{RESET}"
    assert ReportDisplay(color=False).paint("ok", GREEN) == "ok"
    # StringIO is not a terminal
    assert not ReportDisplay(file=io.StringIO()).color


def test_spectrum_table(plain):
    report = {
        "variants": ["single"],
        "rows": [{"theta": 1.0, "single": 0.207858}],
        "summary": {"entropy_rate": 0.383523},
    }
    lines = plain.render("spectrum", report)
    assert "single" in lines[0]
    assert "0.207858" in lines[1]
    assert lines[-1] == "entropy_rate: 0.383523"


def test_infeasible_bound(plain):
    lines = plain.render("bound", {"theorem": "conv_sphere", "feasible": False})
    assert lines == ["[conv_sphere] infeasible"]


def test_vacuous_bound_is_flagged(plain):
    lines = plain.render(
        "bound",
        {"theorem": "ach", "quantity": "neg_log_delta_bar_lower", "value": -0.1, "theta_star": 0.0, "clamped": True},
    )
    assert lines[0] == "[ach] neg_log_delta_bar_lower = -0.1"
    assert "vacuous at this rate" in lines[-1]


def test_sweep_rows(plain):
    report = {
        "rows": [
            {"neg_log10_epsilon": 2.0, "theorem": "ach", "R": 0.3, "feasible": True},
            {"neg_log10_epsilon": 60.0, "theorem": "conv_sphere", "R": "", "feasible": False},
        ]
    }
    lines = plain.render("sweep", report)
    assert len(lines) == 3
    assert lines[2].rstrip().endswith("infeasible")


def test_extraction_with_audit(plain):
    report = {
        "output_bits": 16,
        "blocks": 4,
        "n": 16,
        "m": 4,
        "seed_hex": "9a3f04",
        "bound": None,
        "audit": {"method": "monte_carlo", "value": 0.01, "ci95": 0.002},
    }
    lines = plain.render("extraction", report)
    assert lines[0] == "Extracted 16 bits from 4 blocks (16 -> 4)"
    assert lines[-1] == "  audit (monte_carlo): 0.01 +/- 0.002"


def test_verification_verdict(plain):
    cell = {"kind": "delta", "n": 8, "theta": 1.0, "slack_low": 0.1, "slack_high": 0.2, "holds": True}
    lines = plain.render("verification", {"cells": [cell], "passed": 1, "failed": 0, "holds": True})
    assert lines[0].rstrip().endswith("ok")
    assert lines[-1] == "PASS: 1 passed, 0 failed"


def test_display_writes_to_its_stream():
    stream = io.StringIO()
    ReportDisplay(color=False, file=stream).display("asymptotic", {"regime": "md", "value": 0.5})
    assert stream.getvalue() == "md = 0.5\n"
