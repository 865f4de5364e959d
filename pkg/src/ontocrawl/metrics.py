"""Crawl evaluation counters and the two percentage metrics.

Percentages are exact rationals rounded half-up to two decimals.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Sequence


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class CrawlReport:
    domain: str
    sites_visited: int = 0
    forms_encountered: int = 0
    pages_downloaded: int = 0
    correct_pages: int = 0
    useful_pages: int = 0

    def validate(self) -> CrawlReport:
        for f in fields(self)[1:]:
            if getattr(self, f.name) < 0:
                raise MetricError(f"{self.domain}: {f.name} is negative")
        if not self.useful_pages <= self.correct_pages <= self.pages_downloaded:
            raise MetricError(
                f"{self.domain}: need useful ({self.useful_pages}) <= correct "
                f"({self.correct_pages}) <= downloaded ({self.pages_downloaded})"
            )
        return self

    def counters(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)[1:]}


def _percent(numerator: int, denominator: int) -> float:
    exact = Fraction(100 * numerator, denominator)
    rounded = (Decimal(exact.numerator) / Decimal(exact.denominator)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP
    )
    return float(rounded)


def percent_correct(report: CrawlReport) -> float:
    if report.pages_downloaded < 1:
        raise MetricError(f"{report.domain}: % correct is undefined with no pages downloaded")
    return _percent(report.correct_pages, report.pages_downloaded)


def percent_useful(report: CrawlReport) -> float:
    if report.correct_pages < 1:
        raise MetricError(f"{report.domain}: % useful is undefined with no correct pages")
    return _percent(report.useful_pages, report.correct_pages)


ROWS = (
    ("Number of sites visited", "sites_visited"),
    ("Number of forms encountered", "forms_encountered"),
    ("Total number of pages downloaded", "pages_downloaded"),
    ("Number of Correct Pages", "correct_pages"),
    ("Number of Useful pages", "useful_pages"),
    ("% of Correct Pages", percent_correct),
    ("% of Useful Pages", percent_useful),
)


def _cell(report: CrawlReport, source) -> str:
    if isinstance(source, str):
        return str(getattr(report, source))
    try:
        return f"{source(report):.2f}"
    except MetricError:
        return "n/a"


def tabulate(reports: Sequence[CrawlReport]) -> str:
    """Plain-text table: one row per metric, one column per domain."""
    for report in reports:
        report.validate()
    header = ["Metric"] + [r.domain for r in reports]
    rows = [header] + [[label] + [_cell(r, source) for r in reports] for label, source in ROWS if reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for n, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def summary_lines(report: CrawlReport) -> list[str]:
    """Machine-readable ``key=value`` lines."""
    report.validate()
    lines = [f"domain={report.domain}"]
    lines += [f"{key}={value}" for key, value in report.counters().items()]
    for key, fn in (("percent_correct", percent_correct), ("percent_useful", percent_useful)):
        try:
            lines.append(f"{key}={fn(report):.2f}")
        except MetricError:
            lines.append(f"{key}=n/a")
    return lines


class ReportFormatError(ValueError):
    def __init__(self, path: str, lineno: int, reason: str):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {reason}")


COUNTER_KEYS = ("sites_visited", "forms_encountered", "pages_downloaded", "correct_pages", "useful_pages")
_DERIVED_KEYS = {"percent_correct", "percent_useful", "forms_dropped", "forms_skipped", "partial"}
_CLASSES = {"Correct", "Error", "Unclassified"}


def read_reports(text: str, path: str = "<report>") -> list[CrawlReport]:
    """Parse summary blocks (each opened by ``domain=``) from a crawl report file.

    Per-page lines (tab-separated) are validated but not returned.
    """
    reports: list[CrawlReport] = []
    current: dict[str, int] | None = None
    domain = ""
    start = 0

    def finish(lineno: int) -> None:
        missing = [key for key in COUNTER_KEYS if key not in current]
        if missing:
            raise ReportFormatError(path, lineno, f"report for {domain!r} (from line {start}) lacks {', '.join(missing)}")
        try:
            reports.append(CrawlReport(domain, **current).validate())
        except MetricError as exc:
            raise ReportFormatError(path, lineno, str(exc)) from None

    lines = text.splitlines()
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" in line:
            fields_ = line.split("\t")
            if len(fields_) != 4 or fields_[0] not in _CLASSES or fields_[1] not in ("0", "1"):
                raise ReportFormatError(path, lineno, "malformed page line")
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ReportFormatError(path, lineno, f"expected key=value, got {line!r}")
        if key == "domain":
            if current is not None:
                finish(lineno - 1)
            current, domain, start = {}, value, lineno
        elif current is None:
            raise ReportFormatError(path, lineno, "summary must start with a domain= line")
        elif key in COUNTER_KEYS:
            try:
                current[key] = int(value)
            except ValueError:
                raise ReportFormatError(path, lineno, f"{key} must be an integer, got {value!r}") from None
        elif key not in _DERIVED_KEYS:
            raise ReportFormatError(path, lineno, f"unknown key {key!r}")
    if current is not None:
        finish(len(lines))
    return reports
