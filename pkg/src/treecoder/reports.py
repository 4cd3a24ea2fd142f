"""Plain-text, JSON and CSV rendering of metric reports."""

from __future__ import annotations

import csv
import io
import json

from treecoder.evaluation import LevelReport, MetricsReport, Triple

_COLS = ("Rec.", "Prec.", "F1")


def _cells(t: Triple) -> list[str]:
    return [f"{t.recall:.3f}", f"{t.precision:.3f}", f"{t.f1:.3f}"]


def _table(rows: list[tuple[str, Triple, Triple]], extra: list[str] | None = None, extra_head: str = "") -> str:
    label_w = max([len(r[0]) for r in rows] + [5])
    cell_w = 7
    group_w = cell_w * 3
    head1 = " " * label_w + "  " + "Micro".center(group_w) + "  " + "Macro".center(group_w)
    head2 = (
        " " * label_w
        + "  "
        + "".join(c.rjust(cell_w) for c in _COLS)
        + "  "
        + "".join(c.rjust(cell_w) for c in _COLS)
    )
    if extra is not None:
        head1 += "  " + " " * len(extra_head)
        head2 += "  " + extra_head
    lines = [head1.rstrip(), head2, "-" * len(head2)]
    for i, (label, micro, macro) in enumerate(rows):
        line = (
            label.ljust(label_w)
            + "  "
            + "".join(c.rjust(cell_w) for c in _cells(micro))
            + "  "
            + "".join(c.rjust(cell_w) for c in _cells(macro))
        )
        if extra is not None:
            line += "  " + extra[i].rjust(len(extra_head))
        lines.append(line)
    return "\n".join(lines) + "\n"


def metrics_table(report: MetricsReport, label: str = "Model") -> str:
    return _table([(label, report.micro, report.macro)])


def level_table(report: LevelReport) -> str:
    rows = [(r.level_name, r.micro, r.macro) for r in report.rows]
    return _table(rows, [str(r.dropped_gold) for r in report.rows], "Dropped")


def to_json(report: MetricsReport | LevelReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def level_csv(report: LevelReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["level", "level_name", "micro_recall", "micro_precision", "micro_f1",
         "macro_recall", "macro_precision", "macro_f1", "dropped_gold"]
    )
    for r in report.rows:
        writer.writerow(
            [r.level, r.level_name, r.micro.recall, r.micro.precision, r.micro.f1,
             r.macro.recall, r.macro.precision, r.macro.f1, r.dropped_gold]
        )
    return buf.getvalue()


def metrics_csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["micro_recall", "micro_precision", "micro_f1", "macro_recall", "macro_precision", "macro_f1"])
    m, a = report.micro, report.macro
    writer.writerow([m.recall, m.precision, m.f1, a.recall, a.precision, a.f1])
    return buf.getvalue()
