"""Serialization of scores, tables and profiles to JSON / CSV / Markdown.

Every file starts with a metadata block (toolkit version, normalization
profile, aggregation mode). Percentages in CSV and Markdown are printed with
two decimals; JSON keeps full precision.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import __version__
from .breakdown import BoxStats, BreakdownTable, Comparison, CrossTab
from .corpus import DatasetStats
from .metrics import METRICS, UtteranceScore
from .taxonomy import SEGMENT_CATEGORIES, ErrorProfile
from .textnorm import NormalizationConfig

METRIC_TITLES = {"cer": "CER", "wer": "WER", "sw_wer": "SW-WER"}
FORMATS = ("csv", "md", "json")


def run_meta(norm: NormalizationConfig, aggregation: str, **extra) -> dict:
    meta = {
        "toolkit": "asreval",
        "version": __version__,
        "normalization": norm.to_dict(),
        "aggregation": aggregation,
    }
    meta.update(extra)
    return meta


def _meta_line(meta: dict) -> str:
    line = (f"asreval {meta['version']} | normalization={meta['normalization']['name']}"
            f" | aggregation={meta['aggregation']}")
    if "tie_break" in meta:
        line += f" | tie_break={meta['tie_break']}"
    return line


def pct(x: float) -> str:
    return f"{x:.2f}"


def dumps_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False) + "\n"


def write_text(path: Path, text: str) -> None:
    # newline="" keeps byte output identical across platforms
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def csv_text(meta: dict, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# {_meta_line(meta)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def md_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines) + "\n"


def md_text(meta: dict, body: str, title: Optional[str] = None) -> str:
    head = f"<!-- {_meta_line(meta)} -->\n"
    if title:
        head += f"\n## {title}\n\n"
    return head + body


def _bold(text: str, on: bool) -> str:
    return f"**{text}**" if on else text


# scores


def scores_jsonl(meta: dict, scores: Iterable[UtteranceScore]) -> str:
    lines = [json.dumps({"meta": meta}, ensure_ascii=False, separators=(",", ":"))]
    lines += [json.dumps(s.to_dict(), ensure_ascii=False, separators=(",", ":")) for s in scores]
    return "\n".join(lines) + "\n"


def read_scores_jsonl(path) -> tuple[dict, list[UtteranceScore]]:
    meta: dict = {}
    scores = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            if "meta" in obj and "id" not in obj:
                meta = obj["meta"]
                continue
            scores.append(UtteranceScore.from_dict(obj))
    return meta, scores


# comparison (overall model table)


def comparison_csv(meta: dict, cmp: Comparison) -> str:
    rows = []
    for name, cell in cmp.rows:
        best = ";".join(m for m in METRICS if cmp.is_best(name, m))
        rows.append([name] + [pct(cell.metric(m)) for m in METRICS] + [cell.count, best])
    return csv_text(meta, ["Model", "CER", "WER", "SW-WER", "Utterances", "Best"], rows)


def comparison_md(meta: dict, cmp: Comparison) -> str:
    rows = [
        [name] + [_bold(pct(cell.metric(m)), cmp.is_best(name, m)) for m in METRICS]
        for name, cell in cmp.rows
    ]
    return md_text(meta, md_table(["Model", "CER", "WER", "SW-WER"], rows), "Model comparison")


def comparison_json(cmp: Comparison) -> dict:
    return {
        "systems": [
            {"system": name, "utterances": cell.count, **{m: cell.metric(m) for m in METRICS}}
            for name, cell in cmp.rows
        ],
        "best": cmp.best,
    }


# breakdown


def breakdown_csv(meta: dict, table: BreakdownTable) -> str:
    header = ["system", *table.dimensions, "utterances", "CER", "WER", "SW-WER", "best"]
    rows = []
    for r in table.rows:
        best = ";".join(m for m in METRICS if table.is_best(r.system, r.key, m))
        rows.append([r.system, *(v for _, v in r.key), r.cell.count,
                     *(pct(r.cell.metric(m)) for m in METRICS), best])
    return csv_text(meta, header, rows)


def breakdown_json(table: BreakdownTable) -> dict:
    return {
        "dimensions": list(table.dimensions),
        "systems": table.systems,
        "rows": [
            {
                "system": r.system,
                "group": {d: v for d, v in r.key},
                "utterances": r.cell.count,
                **{m: r.cell.metric(m) for m in METRICS},
                "best": [m for m in METRICS if table.is_best(r.system, r.key, m)],
            }
            for r in table.rows
        ],
    }


def breakdown_md(meta: dict, table: BreakdownTable) -> str:
    """One block per group, systems as rows, best value in bold."""
    parts = []
    for key in table.keys():
        label = ", ".join(f"{d}={v}" for d, v in key)
        rows = []
        for r in table.rows:
            if r.key != key:
                continue
            rows.append([r.system, r.cell.count] + [
                _bold(pct(r.cell.metric(m)), table.is_best(r.system, key, m)) for m in METRICS
            ])
        parts.append(f"### {label}\n\n" + md_table(["Model", "N", "CER", "WER", "SW-WER"], rows))
    return md_text(meta, "\n".join(parts), "Breakdown by " + " x ".join(table.dimensions))


def crosstab_md(meta: dict, tabs: dict[str, CrossTab]) -> str:
    """Two-way layout: row-dimension blocks, column categories plus an
    Avg group of CER / WER / SW-WER."""
    if not tabs:
        return md_text(meta, "(empty)\n")
    any_tab = next(iter(tabs.values()))
    col_values = sorted({c for t in tabs.values() for c in t.col_values})
    row_values = sorted({r for t in tabs.values() for r in t.row_values})
    header = [any_tab.row_dim, "Model"]
    for cv in col_values + ["Avg"]:
        header += [f"{cv} {METRIC_TITLES[m]}" for m in METRICS]
    rows = []
    for rv in row_values + ["Average"]:
        for system, tab in tabs.items():
            line = [rv, system]
            for cv in col_values + ["Avg"]:
                if rv == "Average":
                    cell = tab.total if cv == "Avg" else tab.col_margins.get(cv)
                else:
                    cell = tab.row_margins.get(rv) if cv == "Avg" else tab.cells.get((rv, cv))
                line += [pct(cell.metric(m)) if cell else "-" for m in METRICS]
            rows.append(line)
    title = f"{any_tab.col_dim} x {any_tab.row_dim}"
    return md_text(meta, md_table(header, rows), title)


def _cell_json(cell) -> Optional[dict]:
    if cell is None:
        return None
    return {"utterances": cell.count, **{m: cell.metric(m) for m in METRICS}}


def crosstab_json(tabs: dict[str, CrossTab]) -> dict:
    out = {}
    for system, tab in tabs.items():
        out[system] = {
            "columns": {"dimension": tab.col_dim, "values": tab.col_values},
            "rows": {"dimension": tab.row_dim, "values": tab.row_values},
            "cells": [
                {"row": rv, "column": cv, **_cell_json(tab.cells[(rv, cv)])}
                for rv in tab.row_values for cv in tab.col_values if (rv, cv) in tab.cells
            ],
            "row_margins": {rv: _cell_json(c) for rv, c in tab.row_margins.items()},
            "column_margins": {cv: _cell_json(c) for cv, c in tab.col_margins.items()},
            "total": _cell_json(tab.total),
        }
    return out


def bars_csv(meta: dict, table: BreakdownTable, metric: str = "sw_wer") -> str:
    rows = [[r.system, *(v for _, v in r.key), r.cell.count, pct(r.cell.metric(metric))] for r in table.rows]
    return csv_text(meta, ["system", *table.dimensions, "utterances", METRIC_TITLES[metric]], rows)


def box_csv(meta: dict, dims: Sequence[str], boxes: Sequence[BoxStats]) -> str:
    rows = []
    for b in boxes:
        rows.append([b.system, *(v for _, v in b.key), b.count,
                     *(pct(x) for x in (b.minimum, b.q1, b.median, b.q3, b.maximum,
                                        b.lower_whisker, b.upper_whisker)),
                     " ".join(pct(x) for x in b.outliers)])
    header = ["system", *dims, "n", "min", "q1", "median", "q3", "max",
              "lower_whisker", "upper_whisker", "outliers"]
    return csv_text(meta, header, rows)


# dataset statistics


def stats_md(meta: dict, st: DatasetStats) -> str:
    def fmt(x):
        return "-" if x is None else f"{x:.2f}"

    summary = md_table(
        ["Dur.(h)", "Min/Max Dur.(s)", "Avg Dur.(s)", "#Utts", "#Wrds", "#Unq.Wrds", "#Spks"],
        [[fmt(st.total_duration_h), f"{fmt(st.min_dur_s)} / {fmt(st.max_dur_s)}", fmt(st.avg_dur_s),
          st.utterance_count, st.word_count, st.unique_word_count,
          "-" if st.speaker_count is None else st.speaker_count]],
    )
    parts = [summary]
    for dim, props in st.category_proportions.items():
        rows = [[v, st.category_counts[dim][v], f"{100 * p:.2f}"] for v, p in props.items()]
        parts.append(f"### {dim}\n\n" + md_table(["value", "count", "%"], rows))
    return md_text(meta, "\n".join(parts), "Dataset statistics")


def stats_csv(meta: dict, st: DatasetStats) -> str:
    rows = [["utterance_count", "", st.utterance_count],
            ["total_duration_h", "", st.total_duration_h],
            ["min_dur_s", "", st.min_dur_s], ["max_dur_s", "", st.max_dur_s],
            ["avg_dur_s", "", st.avg_dur_s], ["word_count", "", st.word_count],
            ["unique_word_count", "", st.unique_word_count],
            ["speaker_count", "", st.speaker_count],
            ["missing_duration", "", st.missing_duration]]
    for dim, props in st.category_proportions.items():
        rows += [[f"proportion:{dim}", v, p] for v, p in props.items()]
    rows = [[k, v, "" if x is None else x] for k, v, x in rows]
    return csv_text(meta, ["statistic", "category", "value"], rows)


def histogram_csv(meta: dict, st: DatasetStats) -> str:
    return csv_text(meta, ["bin_start_s", "bin_end_s", "count"],
                    [[f"{lo:g}", f"{hi:g}", c] for lo, hi, c in st.histogram])


# error profile


def profile_md(meta: dict, profiles: Sequence[ErrorProfile]) -> str:
    header = ["Model", "segments"] + [f"{c}" for c in SEGMENT_CATEGORIES] + ["hallucination flags"]
    rows = []
    for p in profiles:
        rows.append([p.system_name, p.total_segments]
                    + [f"{p.counts[c]} ({100 * p.proportions[c]:.2f}%)" for c in SEGMENT_CATEGORIES]
                    + [len(p.flagged_utterance_ids)])
    return md_text(meta, md_table(header, rows), "Error profile")


def profile_csv(meta: dict, profiles: Sequence[ErrorProfile]) -> str:
    rows = []
    for p in profiles:
        for c in SEGMENT_CATEGORIES:
            rows.append([p.system_name, c, p.counts[c], f"{p.proportions[c]:.6f}"])
        rows.append([p.system_name, "hallucination_flag", len(p.flagged_utterance_ids), ""])
    return csv_text(meta, ["system", "category", "count", "proportion"], rows)
