"""Human-readable rendering of reports for terminal output."""

import sys
from typing import Any, Callable, Dict, List, Optional

# ANSI color codes
BLUE = "\033[34m"
GREEN = "\033[32m"
YELLOW = "\033[33m"
RED = "\033[31m"
DIM = "\033[90m"
CYAN = "\033[36m"
BOLD = "\033[1m"
RESET = "\033[0m"


def _num(value: Any, digits: int = 9) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, float)):
        return f"{value:.{digits}g}"
    return str(value)


def _status(display: "ReportDisplay", ok: bool, yes: str = "yes", no: str = "no") -> str:
    return display.paint(yes, GREEN) if ok else display.paint(no, RED)


# Report renderers - one per report kind, keyed in REPORT_RENDERERS
ReportRenderer = Callable[["ReportDisplay", Dict[str, Any]], List[str]]


def render_spectrum(display: "ReportDisplay", report: Dict[str, Any]) -> List[str]:
    variants = report["variants"]
    header = "theta".rjust(10) + "".join(v.rjust(16) for v in variants)
    lines = [display.paint(header, BOLD)]
    for row in report["rows"]:
        lines.append(_num(row["theta"], 6).rjust(10) + "".join(_num(row[v]).rjust(16) for v in variants))
    lines.append("")
    for key, value in report["summary"].items():
        lines.append(f"{display.paint(key, DIM)}: {_num(value)}")
    return lines


def render_assumptions(display: "ReportDisplay", report: Dict[str, Any]) -> List[str]:
    lines = []
    for entry in report["reports"]:
        witness = entry.get("witness")
        extra = f"  witness {witness}" if witness else ""
        lines.append(
            f"{display.paint(entry['assumption'], CYAN)}: {_status(display, entry['holds'], 'holds', 'violated')}"
            f"  (max deviation {_num(entry['max_deviation'], 3)}){extra}"
        )
    return lines


def render_bound(display: "ReportDisplay", report: Dict[str, Any]) -> List[str]:
    label = display.paint(f"[{report['theorem']}]", YELLOW)
    if not report.get("feasible", True):
        return [f"{label} {display.paint('infeasible', RED)}"]
    lines = [f"{label} {report['quantity']} = {display.paint(_num(report['value']), BOLD)}"]
    for key in ("theta_star", "s_star", "theta_tilde_star"):
        if report.get(key) is not None:
            lines.append(f"  {display.paint(key, DIM)}: {_num(report[key])}")
    if report.get("clamped"):
        lines.append(f"  {display.paint('vacuous at this rate', RED)}")
    return lines


def render_sweep(display: "ReportDisplay", report: Dict[str, Any]) -> List[str]:
    lines = [display.paint("-log10(eps)".rjust(12) + "theorem".rjust(14) + "rate".rjust(16), BOLD)]
    for row in report["rows"]:
        rate = _num(row["R"]) if row["feasible"] else display.paint("infeasible", RED)
        lines.append(_num(row["neg_log10_epsilon"], 4).rjust(12) + row["theorem"].rjust(14) + rate.rjust(16))
    return lines


def render_asymptotic(display: "ReportDisplay", report: Dict[str, Any]) -> List[str]:
    lines = [f"{display.paint(report['regime'], CYAN)} = {display.paint(_num(report['value']), BOLD)}"]
    if report.get("theta_star") is not None:
        lines.append(f"  {display.paint('theta_star', DIM)}: {_num(report['theta_star'])}")
    if not report.get("exact", True):
        lines.append(f"  {display.paint(report.get('note', ''), YELLOW)}")
    return lines


def render_extraction(display: "ReportDisplay", report: Dict[str, Any]) -> List[str]:
    lines = [
        f"{display.paint('Extracted', GREEN)} {report['output_bits']} bits "
        f"from {report['blocks']} blocks ({report['n']} -> {report['m']})",
        f"  {display.paint('seed', DIM)}: {report['seed_hex']}",
    ]
    if report.get("bound"):
        lines.extend("  " + line for line in render_bound(display, report["bound"]))
    audit = report.get("audit")
    if audit:
        ci = f" +/- {_num(audit['ci95'], 3)}" if audit.get("ci95") is not None else ""
        lines.append(f"  {display.paint('audit', DIM)} ({audit['method']}): {_num(audit['value'])}{ci}")
    return lines


def render_verification(display: "ReportDisplay", report: Dict[str, Any]) -> List[str]:
    lines = []
    for cell in report["cells"]:
        theta = "" if cell["theta"] is None else f" theta={_num(cell['theta'], 4)}"
        lines.append(
            f"  {cell['kind']:<9} n={cell['n']:<3}{theta:<14} "
            f"slack {_num(cell['slack_low'], 4)} / {_num(cell['slack_high'], 4)}  "
            f"{_status(display, cell['holds'], 'ok', 'FAIL')}"
        )
    verdict = _status(display, report["holds"], "PASS", "FAIL")
    lines.append(f"{verdict}: {report['passed']} passed, {report['failed']} failed")
    return lines


# Registry of report renderers - add new kinds here
REPORT_RENDERERS: Dict[str, ReportRenderer] = {
    "spectrum": render_spectrum,
    "assumptions": render_assumptions,
    "bound": render_bound,
    "sweep": render_sweep,
    "asymptotic": render_asymptotic,
    "extraction": render_extraction,
    "verification": render_verification,
}


class ReportDisplay:
    """Formats reports for a terminal; colour only when the stream is a TTY."""

    def __init__(self, renderers: Dict[str, ReportRenderer] = None, color: Optional[bool] = None, file=None):
        self.renderers = renderers or REPORT_RENDERERS
        self.file = file or sys.stdout
        if color is None:
            color = hasattr(self.file, "isatty") and self.file.isatty()
        self.color = color

    def paint(self, text: str, code: str) -> str:
        return f"{code}{text}{RESET}" if self.color else text

    def render(self, kind: str, report: Dict[str, Any]) -> List[str]:
        renderer = self.renderers.get(kind)
        if renderer is None:
            raise KeyError(f"no renderer for report kind '{kind}'")
        return renderer(self, report)

    def display(self, kind: str, report: Dict[str, Any]):
        for line in self.render(kind, report):
            print(line, file=self.file)
