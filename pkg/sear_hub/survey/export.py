import csv
import io
import json
from pathlib import Path
from typing import List, Tuple

from sear_hub.core.exceptions import ArgumentError, FormatError
from sear_hub.infra.database import DatabaseManager
from sear_hub.survey.analytics import (
    LIKERT_VALUES,
    AggregateReport,
    display_mean,
    display_percent,
    format_fraction,
)

FORMATS = ("json", "csv")
CSV_HEADER = ("questionId", "statistic", "value", "display")
TRUST_ROW_ID = "TrustShift"


def summary_rows(report: AggregateReport) -> List[Tuple[str, str, str, str]]:
    """Одна строка на пару (questionId, statistic), порядок вопросов - как в схеме."""
    rows = []
    for q in report.questions:
        rows.append((q.question_id, "respondents", str(q.respondents), str(q.respondents)))
        rows.append((q.question_id, "missing", str(q.missing), str(q.missing)))
        for value, n in sorted(q.counts.items()):
            rows.append((q.question_id, f"count_{value}", str(n), str(n)))
        if q.mean is not None:
            rows.append((q.question_id, "mean", format_fraction(q.mean), display_mean(q.mean)))
        if q.top_two is not None:
            rows.append((q.question_id, "top_two_fraction", format_fraction(q.top_two),
                         display_percent(q.top_two)))
        if q.yes_fraction is not None:
            rows.append((q.question_id, "yes_fraction", format_fraction(q.yes_fraction),
                         display_percent(q.yes_fraction)))

    trust = report.trust
    if trust is not None:
        for value in LIKERT_VALUES:
            before = trust.before.get(value, 0)
            after = trust.after.get(value, 0)
            rows.append((TRUST_ROW_ID, f"before_count_{value}", str(before), str(before)))
            rows.append((TRUST_ROW_ID, f"after_count_{value}", str(after), str(after)))
        for name, fraction in (("at_least_4_after", trust.at_least_4_after),
                               ("five_before", trust.five_before)):
            if fraction is not None:
                rows.append((TRUST_ROW_ID, name, format_fraction(fraction),
                             display_percent(fraction)))
        rows.append((TRUST_ROW_ID, "excluded", str(trust.excluded), str(trust.excluded)))
    return rows


def render_csv(report: AggregateReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(summary_rows(report))
    return buffer.getvalue()


def export_summary(report: AggregateReport, path: str | Path, fmt: str = "json") -> Path:
    """Пишет summary.json или summary.csv; одинаковый отчёт даёт одинаковые байты."""
    if fmt not in FORMATS:
        raise ArgumentError("format", f"ожидается один из {FORMATS}")
    path = Path(path)
    if fmt == "json":
        DatabaseManager().save(path, report.to_dict())
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(render_csv(report))
    return path


def load_summary(path: str | Path) -> AggregateReport:
    """Читает summary.json обратно в AggregateReport."""
    try:
        return AggregateReport.from_dict(DatabaseManager().load(path))
    except json.JSONDecodeError as e:
        raise FormatError(str(path), e.msg, e.lineno)
    except (KeyError, ValueError, TypeError) as e:
        raise FormatError(str(path), f"некорректная сводка: {e}")
