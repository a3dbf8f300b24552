"""Command-line entry point: ``asreval {evaluate,breakdown,stats,diagnose,compare}``.

Data goes to files under ``--out``; stderr carries logs and errors only.
Exit codes: 0 success, 1 validation error, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import report
from .align import DEFAULT_TIE_BREAK, TIE_BREAKS
from .breakdown import (
    DIMENSIONS,
    Cell,
    DimensionalityError,
    EmptyInput,
    UnknownDimension,
    UnresolvedId,
    box_statistics,
    compare_systems,
    cross_tabulate,
    group_scores,
)
from .corpus import (
    CorpusError,
    UtteranceRecord,
    dataset_statistics,
    join_hypotheses,
    load_hypotheses,
    load_manifest,
)
from .metrics import (
    DegenerateColumn,
    EmptyReference,
    EmptyScoreSet,
    UtteranceScore,
    aggregate_corpus,
    metric_correlation,
    score_texts,
)
from .taxonomy import (
    DEFAULT_INS_TAU,
    DEFAULT_LEN_RHO,
    DEFAULT_THETA,
    error_profile,
    load_lexicon,
)
from .textnorm import ConfigError, NormalizationConfig, load_config

log = logging.getLogger("asreval")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2

VALIDATION_ERRORS = (
    CorpusError, ConfigError, EmptyReference, EmptyScoreSet, UnknownDimension,
    UnresolvedId, DimensionalityError, EmptyInput, ValueError,
)

# figure-data groupings written by ``breakdown --figures``
FIGURE_BARS = {
    "fig_age": ("age",),
    "fig_spontaneity": ("spontaneous",),
    "fig_accent_class": ("accent_class",),
    "fig_accent": ("accent",),
    "fig_data_source": ("data_source",),
    "fig_semantic_content": ("semantic_content",),
}
FIGURE_BOX = ("gender", "spontaneous", "accent_class")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    refs: Optional[Path] = None
    hyps: list[tuple[str, Path]] = field(default_factory=list)
    norm: NormalizationConfig = field(default_factory=NormalizationConfig)
    agg: str = "macro"
    by: tuple[str, ...] = ()
    out: Path = Path("asreval_out")
    formats: tuple[str, ...] = report.FORMATS
    strict: bool = True
    theta: float = DEFAULT_THETA
    ins_tau: float = DEFAULT_INS_TAU
    len_rho: float = DEFAULT_LEN_RHO
    lexicon: Optional[Path] = None
    workers: int = 1
    tie_break: str = DEFAULT_TIE_BREAK
    figures: bool = False
    summaries: list[Path] = field(default_factory=list)

    @property
    def meta(self) -> dict:
        return report.run_meta(self.norm, self.agg, tie_break=self.tie_break)


def _parse_hyp(spec: str) -> tuple[str, Path]:
    if "=" not in spec:
        raise argparse.ArgumentTypeError(f"expected SYSTEM=PATH, got {spec!r}")
    name, path = spec.split("=", 1)
    if not name:
        raise argparse.ArgumentTypeError(f"empty system name in {spec!r}")
    return name, Path(path)


def _parse_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--refs", type=Path, help="reference manifest (JSONL or TSV)")
    common.add_argument("--hyps", type=_parse_hyp, action="append", default=[],
                        metavar="SYSTEM=PATH", help="hypothesis file; repeatable")
    common.add_argument("--norm", default="default", help="normalization profile name or JSON file")
    common.add_argument("--agg", choices=("macro", "micro"), default="macro")
    common.add_argument("--out", type=Path, default=Path("asreval_out"), help="output directory")
    common.add_argument("--format", dest="formats", type=_parse_list, default=report.FORMATS,
                        help="comma-separated subset of csv,md,json")
    strict = common.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_true", default=True)
    strict.add_argument("--lenient", dest="strict", action="store_false")
    common.add_argument("--workers", type=int, default=1, help="scoring processes")
    common.add_argument("--tie-break", dest="tie_break", choices=TIE_BREAKS, default=DEFAULT_TIE_BREAK,
                        help="preference among equally cheap word alignments")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="asreval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evaluate", parents=[common], help="score hypotheses against references")
    p = sub.add_parser("breakdown", parents=[common], help="metrics grouped by metadata")
    p.add_argument("--by", type=_parse_list, default=("formality", "acoustic_environment"),
                   help="DIM[,DIM]; one of " + ", ".join(DIMENSIONS))
    p.add_argument("--figures", action="store_true", help="also write figure-data CSVs")
    sub.add_parser("stats", parents=[common], help="dataset statistics of a manifest")
    p = sub.add_parser("diagnose", parents=[common], help="error taxonomy profile")
    p.add_argument("--near-match-theta", dest="theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--halluc-ins-tau", dest="ins_tau", type=float, default=DEFAULT_INS_TAU)
    p.add_argument("--halluc-len-rho", dest="len_rho", type=float, default=DEFAULT_LEN_RHO)
    p.add_argument("--lexicon", type=Path, help="informal<TAB>formal pairs")
    p = sub.add_parser("compare", parents=[common], help="side-by-side system comparison")
    p.add_argument("--summary", dest="summaries", type=Path, action="append", default=[],
                   help="summary.json from an earlier evaluate run; repeatable")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    bad = [f for f in args.formats if f not in report.FORMATS]
    if bad or not args.formats:
        raise UsageError(f"--format must be a subset of {','.join(report.FORMATS)}")
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    names = [n for n, _ in args.hyps]
    if len(set(names)) != len(names):
        raise UsageError("system names in --hyps must be unique")
    cfg = RunConfig(
        command=args.command,
        refs=args.refs,
        hyps=list(args.hyps),
        norm=load_config(args.norm),
        agg=args.agg,
        out=args.out,
        formats=tuple(args.formats),
        strict=args.strict,
        workers=args.workers,
        tie_break=args.tie_break,
    )
    for name in ("by", "theta", "ins_tau", "len_rho", "lexicon", "figures", "summaries"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if cfg.command != "compare" or not cfg.summaries:
        if cfg.refs is None:
            raise UsageError("--refs is required")
    if cfg.command in ("evaluate", "breakdown", "diagnose") and not cfg.hyps:
        raise UsageError("at least one --hyps SYSTEM=PATH is required")
    if cfg.command == "compare" and not cfg.hyps and not cfg.summaries:
        raise UsageError("compare needs --hyps or --summary inputs")
    return cfg


# pipeline steps


def load_records(cfg: RunConfig) -> list[UtteranceRecord]:
    records, issues = load_manifest(cfg.refs, "strict" if cfg.strict else "lenient")
    for issue in issues:
        log.warning("%s: %s", cfg.refs, issue)
    return records


def _score_task(task):
    utt_id, ref, hyp, norm, system, tie_break = task
    return score_texts(utt_id, ref, hyp, norm, system, tie_break)


def score_systems(cfg: RunConfig, records: Sequence[UtteranceRecord]) -> dict[str, list[UtteranceScore]]:
    """Scores per system (input order), each list sorted by utterance id."""
    ids = [r.id for r in records]
    tasks = []
    for system, path in cfg.hyps:
        hyps = load_hypotheses(path, system, ids, strict=cfg.strict)
        pairs, warnings = join_hypotheses(records, hyps, strict=cfg.strict)
        for w in warnings:
            log.warning("%s", w)
        tasks += [(rec.id, rec.text, text, cfg.norm, system, cfg.tie_break) for rec, text in pairs]
    if cfg.workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (cfg.workers * 8))
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_score_task, tasks, chunksize=chunk))
    else:
        results = [_score_task(t) for t in tasks]
    out: dict[str, list[UtteranceScore]] = {system: [] for system, _ in cfg.hyps}
    for s in results:
        out[s.system_name].append(s)
    for scores in out.values():
        scores.sort(key=lambda s: s.utterance_id)
    return out


def _emit(cfg: RunConfig, stem: str, renderers: dict) -> None:
    for fmt in cfg.formats:
        if fmt in renderers:
            path = cfg.out / f"{stem}.{fmt}"
            report.write_text(path, renderers[fmt]())
            log.info("wrote %s", path)


def _summaries(cfg: RunConfig, by_system: dict[str, list[UtteranceScore]]):
    return [aggregate_corpus(scores, cfg.agg) for scores in by_system.values() if scores]


def run_evaluate(cfg: RunConfig) -> None:
    records = load_records(cfg)
    by_system = score_systems(cfg, records)
    meta = cfg.meta
    cfg.out.mkdir(parents=True, exist_ok=True)
    all_scores = [s for scores in by_system.values() for s in scores]
    report.write_text(cfg.out / "scores.jsonl", report.scores_jsonl(meta, all_scores))

    summaries = _summaries(cfg, by_system)
    cmp = compare_systems(summaries)
    correlations = {}
    for system, scores in by_system.items():
        try:
            correlations[system] = metric_correlation(scores).pearson
        except DegenerateColumn as exc:
            log.warning("correlation for %s undefined: %s", system, exc)
            correlations[system] = None
    summary = {
        "meta": meta,
        "summaries": [s.to_dict() for s in summaries],
        "comparison": report.comparison_json(cmp),
        "correlation": correlations,
    }
    report.write_text(cfg.out / "summary.json", report.dumps_json(summary))
    _emit(cfg, "comparison", {
        "csv": lambda: report.comparison_csv(meta, cmp),
        "md": lambda: report.comparison_md(meta, cmp),
    })
    scatter = [
        [s.utterance_id, s.system_name, report.pct(100 * s.wer), report.pct(100 * s.cer),
         report.pct(100 * s.sw_wer)]
        for s in all_scores
    ]
    report.write_text(cfg.out / "scatter.csv",
                      report.csv_text(meta, ["id", "system", "WER", "CER", "SW-WER"], scatter))


def run_breakdown(cfg: RunConfig) -> None:
    records = load_records(cfg)
    by_system = score_systems(cfg, records)
    scores = [s for ss in by_system.values() for s in ss]
    systems = list(by_system)
    table = group_scores(scores, records, cfg.by, systems)
    meta = {**cfg.meta, "dimensions": list(cfg.by)}
    cfg.out.mkdir(parents=True, exist_ok=True)
    renderers = {
        "csv": lambda: report.breakdown_csv(meta, table),
        "md": lambda: report.breakdown_md(meta, table),
        "json": lambda: report.dumps_json({"meta": meta, **report.breakdown_json(table)}),
    }
    if len(table.dimensions) == 2:
        tabs = cross_tabulate(table)
        renderers["md"] = lambda: (report.breakdown_md(meta, table) + "\n"
                                   + report.crosstab_md(meta, tabs))
        renderers["json"] = lambda: report.dumps_json({
            "meta": meta, **report.breakdown_json(table), "crosstab": report.crosstab_json(tabs),
        })
    _emit(cfg, "breakdown", renderers)
    if cfg.figures:
        for stem, dims in FIGURE_BARS.items():
            fig = group_scores(scores, records, dims, systems)
            report.write_text(cfg.out / f"{stem}.csv", report.bars_csv(meta, fig))
        boxes = box_statistics(scores, records, FIGURE_BOX)
        report.write_text(cfg.out / "fig_gender_box.csv", report.box_csv(meta, FIGURE_BOX, boxes))


def run_stats(cfg: RunConfig) -> None:
    records = load_records(cfg)
    st = dataset_statistics(records, cfg.norm)
    meta = cfg.meta
    cfg.out.mkdir(parents=True, exist_ok=True)
    _emit(cfg, "stats", {
        "csv": lambda: report.stats_csv(meta, st),
        "md": lambda: report.stats_md(meta, st),
        "json": lambda: report.dumps_json({"meta": meta, **st.to_dict()}),
    })
    report.write_text(cfg.out / "duration_histogram.csv", report.histogram_csv(meta, st))


def run_diagnose(cfg: RunConfig) -> None:
    records = load_records(cfg)
    by_system = score_systems(cfg, records)
    lexicon = load_lexicon(cfg.lexicon, cfg.norm) if cfg.lexicon else None
    profiles = [
        error_profile(scores, lexicon, cfg.theta, cfg.ins_tau, cfg.len_rho)
        for scores in by_system.values() if scores
    ]
    meta = report.run_meta(cfg.norm, cfg.agg, tie_break=cfg.tie_break, near_match_theta=cfg.theta,
                           halluc_ins_tau=cfg.ins_tau, halluc_len_rho=cfg.len_rho,
                           lexicon=str(cfg.lexicon) if cfg.lexicon else None)
    cfg.out.mkdir(parents=True, exist_ok=True)
    _emit(cfg, "diagnose", {
        "csv": lambda: report.profile_csv(meta, profiles),
        "md": lambda: report.profile_md(meta, profiles),
        "json": lambda: report.dumps_json({"meta": meta, "profiles": [p.to_dict() for p in profiles]}),
    })
    lines = [json.dumps({"meta": meta}, ensure_ascii=False, separators=(",", ":"))]
    for p in profiles:
        for utt_id, seg, label in p.segment_labels:
            lines.append(json.dumps({
                "system": p.system_name, "id": utt_id, "category": label.category,
                "evidence": label.evidence, **seg.to_dict(),
            }, ensure_ascii=False, separators=(",", ":")))
    report.write_text(cfg.out / "diagnose_segments.jsonl", "\n".join(lines) + "\n")


def _summary_rows(path: Path, agg: str) -> list[tuple[str, Cell]]:
    with path.open(encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        rows = []
        for s in data["summaries"]:
            vals = s[agg]
            rows.append((s["system"], Cell(vals["cer"], vals["wer"], vals["sw_wer"], s["utterances"])))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: not an evaluate summary ({exc})") from None
    return rows


def run_compare(cfg: RunConfig) -> None:
    rows: list[tuple[str, Cell]] = []
    for path in cfg.summaries:
        rows += _summary_rows(path, cfg.agg)
    if cfg.hyps:
        records = load_records(cfg)
        for summary in _summaries(cfg, score_systems(cfg, records)):
            rows.append((summary.system_name,
                         Cell(summary.cer, summary.wer, summary.sw_wer, summary.utterance_count)))
    cmp = compare_systems(rows)
    meta = cfg.meta
    cfg.out.mkdir(parents=True, exist_ok=True)
    _emit(cfg, "comparison", {
        "csv": lambda: report.comparison_csv(meta, cmp),
        "md": lambda: report.comparison_md(meta, cmp),
        "json": lambda: report.dumps_json({"meta": meta, **report.comparison_json(cmp)}),
    })


COMMANDS = {
    "evaluate": run_evaluate,
    "breakdown": run_breakdown,
    "stats": run_stats,
    "diagnose": run_diagnose,
    "compare": run_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = config_from_args(args)
        COMMANDS[cfg.command](cfg)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except VALIDATION_ERRORS as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
