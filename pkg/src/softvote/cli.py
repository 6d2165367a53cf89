"""Command-line front end: stats, train, predict, fit-weights, ensemble, report.

Conventions: stdout carries data and reports only, diagnostics go to stderr.
Exit codes: 0 success, 1 validation error, 2 I/O or parse error. All file
writes are atomic, and every command is deterministic given identical inputs
and flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import corpus_stats, load_corpus
from .ensemble import (
    EnsembleSpec,
    ProbabilityTable,
    evaluate_ensemble,
    fit_weights,
    load_ensemble_spec,
    load_verdicts,
    member_validation_f1s,
    save_ensemble_spec,
    save_verdicts,
)
from .errors import ParseError, SoftvoteError, ValidationError
from .members import (
    MetricKind,
    TrainConfig,
    load_external_probabilities,
    load_model,
    predict_proba,
    save_model,
    save_probabilities,
    select_best_epoch,
    train_member,
)
from .metrics import (
    ConfusionMatrix,
    Score,
    ScoreSummary,
    aggregate_scores,
    confusion_matrix,
    all_scores,
    metric_rows,
    render_confusion_grid,
)
from .tsvio import atomic_write_text

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    """Workspace-relative record of a run's artifacts."""

    seed: int
    member_ids: list[str] = field(default_factory=list)
    corpora: dict[str, str] = field(default_factory=dict)
    models: dict[str, str] = field(default_factory=dict)
    histories: dict[str, str] = field(default_factory=dict)
    probability_tables: dict[str, str] = field(default_factory=dict)
    spec_file: str | None = None
    verdict_file: str | None = None
    reports: dict[str, str] = field(default_factory=dict)

    def referenced_paths(self) -> list[str]:
        paths = [*self.corpora.values(), *self.models.values(), *self.histories.values(),
                 *self.probability_tables.values(), *self.reports.values()]
        if self.spec_file:
            paths.append(self.spec_file)
        if self.verdict_file:
            paths.append(self.verdict_file)
        return paths

    def validate(self, workspace: Path) -> None:
        root = workspace.resolve()
        for rel in self.referenced_paths():
            candidate = Path(rel)
            if candidate.is_absolute():
                raise ValidationError(f"manifest path {rel!r} must be workspace-relative")
            resolved = (root / candidate).resolve()
            if not resolved.is_relative_to(root):
                raise ValidationError(f"manifest path {rel!r} escapes the workspace")


def save_manifest(manifest: RunManifest, workspace: Path) -> None:
    manifest.validate(workspace)
    text = json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n"
    atomic_write_text(workspace / MANIFEST_NAME, text)


def load_manifest(workspace: Path) -> RunManifest:
    path = workspace / MANIFEST_NAME
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), path=str(path)) from exc
    manifest = RunManifest(**data)
    manifest.validate(workspace)
    return manifest


def _relative_to_workspace(path: Path, workspace: Path) -> str | None:
    try:
        return str(path.resolve().relative_to(workspace.resolve()))
    except ValueError:
        return None  # outside the workspace: not recorded


def _render_report(
    title: str,
    mode: str | None,
    cm: ConfusionMatrix,
    scores: list[Score],
    member_summary: ScoreSummary | None,
) -> tuple[str, str]:
    """Build the human report text and the machine-readable TSV."""
    n = cm.total
    head = f"evaluation: split={title}  n={n}"
    if mode is not None:
        head += f"  mode={mode}"
    lines = [head]
    if member_summary is not None:
        lines.append(
            f"members: {member_summary.n}  validation-f1 mean={member_summary.mean:.4f} "
            f"stdev={member_summary.stdev:.4f}"
        )
    lines.append("")
    lines.append("confusion matrix (rows: actual, columns: predicted)")
    lines.append(render_confusion_grid(cm))
    lines.append("")
    lines.extend(f"{score.metric.value:<10} {score.value:.4f}" for score in scores)
    text = "\n".join(lines) + "\n"

    rows = [("split", title)]
    if mode is not None:
        rows.append(("mode", mode))
    rows.append(("n", str(n)))
    rows.extend(metric_rows(cm))
    if member_summary is not None:
        rows.append(("member_f1_mean", repr(member_summary.mean)))
        rows.append(("member_f1_stdev", repr(member_summary.stdev)))
        rows.append(("member_count", str(member_summary.n)))
    tsv = "metric\tvalue\n" + "\n".join(f"{key}\t{value}" for key, value in rows) + "\n"
    return text, tsv


def cmd_stats(args: argparse.Namespace) -> int:
    rows = []
    overall_negatives = 0
    overall_positives = 0
    for corpus_path in args.corpus:
        corpus = load_corpus(corpus_path, labeled=True)
        dist = corpus_stats(corpus)
        rows.append((corpus.split_name, dist))
        overall_negatives += dist.negatives
        overall_positives += dist.positives
    print("split\tnegatives\tpositives\ttotal\tpositive_rate")
    for name, dist in rows:
        print(f"{name}\t{dist.negatives}\t{dist.positives}\t{dist.total}\t{dist.positive_rate:.4f}")
    if len(rows) > 1:
        total = overall_negatives + overall_positives
        rate = overall_positives / total
        print(f"overall\t{overall_negatives}\t{overall_positives}\t{total}\t{rate:.4f}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    workspace = Path(args.workspace)
    train_corpus = load_corpus(args.train, labeled=True)
    val_corpus = load_corpus(args.validation, labeled=True)
    selection = MetricKind.F1 if args.select == "f1" else MetricKind.ACCURACY

    manifest = RunManifest(seed=args.seed)
    for role, source in (("train", Path(args.train)), ("validation", Path(args.validation))):
        rel = _relative_to_workspace(source, workspace)
        if rel is not None:
            manifest.corpora[role] = rel

    for i in range(args.members):
        member_id = f"m{i}"
        config = TrainConfig(
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            l2=args.l2,
            seed=args.seed + i,
            selection_metric=selection,
        )
        model, history = train_member(train_corpus, val_corpus, config, member_id=member_id)
        chosen = select_best_epoch(history, selection)
        record = history.records[chosen]
        print(
            f"trained {member_id}: selected epoch {chosen} "
            f"(f1={record.f1:.4f}, accuracy={record.accuracy:.4f})",
            file=sys.stderr,
        )

        model_path = workspace / "models" / f"{member_id}.txt"
        save_model(model, model_path)
        history_lines = ["epoch\tval_f1\tval_accuracy"]
        history_lines.extend(
            f"{record.epoch}\t{repr(record.f1)}\t{repr(record.accuracy)}"
            for record in history.records
        )
        history_path = workspace / "history" / f"{member_id}.tsv"
        atomic_write_text(history_path, "\n".join(history_lines) + "\n")
        table = predict_proba(model, val_corpus)
        probs_path = workspace / "val-probs" / f"{member_id}.tsv"
        save_probabilities(table, probs_path)

        manifest.member_ids.append(member_id)
        manifest.models[member_id] = str(model_path.relative_to(workspace))
        manifest.histories[member_id] = str(history_path.relative_to(workspace))
        manifest.probability_tables[member_id] = str(probs_path.relative_to(workspace))

    save_manifest(manifest, workspace)
    print(f"wrote {args.members} members under {workspace}", file=sys.stderr)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    corpus = load_corpus(args.corpus, labeled=not args.unlabeled)
    table = predict_proba(model, corpus)
    save_probabilities(table, args.out)
    print(f"wrote {len(table)} probabilities to {args.out}", file=sys.stderr)
    return 0


def _load_tables(paths: list[str], member_ids: list[str] | None) -> list[ProbabilityTable]:
    if member_ids is not None:
        if len(member_ids) != len(paths):
            raise ValidationError(
                f"--member-ids lists {len(member_ids)} ids for {len(paths)} files"
            )
        ids = member_ids
    else:
        ids = [Path(p).stem for p in paths]
    if len(set(ids)) != len(ids):
        raise ValidationError(
            f"member ids {ids} are not unique; pass explicit --member-ids"
        )
    return [
        load_external_probabilities(path, member_id=member_id)
        for path, member_id in zip(paths, ids)
    ]


def cmd_fit_weights(args: argparse.Namespace) -> int:
    validation = load_corpus(args.validation, labeled=True)
    tables = _load_tables(args.probs, args.member_ids)
    spec = fit_weights(tables, validation)
    save_ensemble_spec(spec, args.out)
    print(f"wrote ensemble spec for {len(spec)} members to {args.out}", file=sys.stderr)
    return 0


def cmd_ensemble(args: argparse.Namespace) -> int:
    workspace = Path(args.workspace)
    out_dir = workspace / "ensemble"
    validation = load_corpus(args.validation, labeled=True)
    val_tables = _load_tables(args.val_probs, args.member_ids)

    member_f1s = member_validation_f1s(val_tables, validation)
    member_summary = aggregate_scores(member_f1s)

    if args.mode == "soft":
        spec = fit_weights(val_tables, validation)
    else:
        # Majority voting: every member counts the same.
        spec = EnsembleSpec(
            members=tuple(t.member_id for t in val_tables),
            weights=tuple(1.0 for _ in val_tables),
        )

    if args.eval is not None:
        if args.eval_probs is None:
            raise ValidationError("--eval requires --eval-probs (one file per member)")
        if len(args.eval_probs) != len(args.val_probs):
            raise ValidationError(
                f"{len(args.eval_probs)} --eval-probs files for {len(args.val_probs)} members"
            )
        eval_corpus = load_corpus(args.eval, labeled=True)
        # Pair eval files with members positionally, reusing the member ids.
        eval_tables = _load_tables(args.eval_probs, [t.member_id for t in val_tables])
    else:
        eval_corpus = validation
        eval_tables = val_tables

    verdicts, cm, scores = evaluate_ensemble(spec, eval_tables, eval_corpus, mode=args.mode)

    spec_path = out_dir / "spec.tsv"
    verdict_path = out_dir / "verdicts.tsv"
    save_ensemble_spec(spec, spec_path)
    save_verdicts(verdicts, verdict_path)
    text, tsv = _render_report(eval_corpus.split_name, args.mode, cm, scores, member_summary)
    atomic_write_text(out_dir / "report.txt", text)
    atomic_write_text(out_dir / "report.tsv", tsv)

    manifest_path = workspace / MANIFEST_NAME
    manifest = load_manifest(workspace) if manifest_path.exists() else RunManifest(seed=args.seed)
    if not manifest.member_ids:
        manifest.member_ids = [table.member_id for table in val_tables]
    manifest.spec_file = str(spec_path.relative_to(workspace))
    manifest.verdict_file = str(verdict_path.relative_to(workspace))
    manifest.reports = {
        "text": str((out_dir / "report.txt").relative_to(workspace)),
        "tsv": str((out_dir / "report.tsv").relative_to(workspace)),
    }
    save_manifest(manifest, workspace)

    print(text, end="")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus, labeled=True)
    verdicts = load_verdicts(args.verdicts)
    predictions = {verdict.id: verdict.label for verdict in verdicts}
    cm = confusion_matrix(predictions, corpus.labels_by_id())
    text, tsv = _render_report(corpus.split_name, None, cm, all_scores(cm), None)
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        atomic_write_text(out_dir / "report.txt", text)
        atomic_write_text(out_dir / "report.tsv", tsv)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softvote",
        description="F1-weighted soft-voting ensemble toolkit for binary text classification.",
    )
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    parser.add_argument(
        "--workspace", default=".", help="directory for command outputs (default .)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="class distribution of labeled corpora")
    p_stats.add_argument("corpus", nargs="+", help="labeled corpus TSV file(s)")
    p_stats.set_defaults(func=cmd_stats)

    p_train = sub.add_parser("train", help="train seeded members with best-epoch selection")
    p_train.add_argument("--train", required=True, help="labeled training corpus TSV")
    p_train.add_argument("--validation", required=True, help="labeled validation corpus TSV")
    p_train.add_argument("--members", type=int, default=5, help="number of members (default 5)")
    p_train.add_argument("--epochs", type=int, default=20, help="training epochs (default 20)")
    p_train.add_argument(
        "--learning-rate", type=float, default=0.1, help="SGD learning rate (default 0.1)"
    )
    p_train.add_argument("--l2", type=float, default=1e-4, help="L2 penalty (default 1e-4)")
    p_train.add_argument(
        "--select",
        choices=("f1", "accuracy"),
        default="f1",
        help="validation metric for best-epoch selection (default f1)",
    )
    p_train.set_defaults(func=cmd_train)

    p_predict = sub.add_parser("predict", help="apply a model snapshot to a corpus")
    p_predict.add_argument("--model", required=True, help="model snapshot file")
    p_predict.add_argument("--corpus", required=True, help="corpus TSV")
    p_predict.add_argument(
        "--unlabeled", action="store_true", help="corpus has no label column"
    )
    p_predict.add_argument("--out", required=True, help="output probability TSV")
    p_predict.set_defaults(func=cmd_predict)

    p_fit = sub.add_parser("fit-weights", help="fit per-member F1 weights on validation")
    p_fit.add_argument("--validation", required=True, help="labeled validation corpus TSV")
    p_fit.add_argument("--probs", nargs="+", required=True, help="member probability TSVs")
    p_fit.add_argument("--member-ids", nargs="+", help="override member ids (default: file stems)")
    p_fit.add_argument("--out", required=True, help="output ensemble spec TSV")
    p_fit.set_defaults(func=cmd_fit_weights)

    p_ens = sub.add_parser("ensemble", help="fit weights, evaluate, and write a report")
    p_ens.add_argument("--validation", required=True, help="labeled validation corpus TSV")
    p_ens.add_argument(
        "--val-probs", nargs="+", required=True, help="member probability TSVs on validation"
    )
    p_ens.add_argument("--eval", help="labeled corpus to evaluate on (default: validation)")
    p_ens.add_argument(
        "--eval-probs", nargs="+", help="member probability TSVs on the eval corpus"
    )
    p_ens.add_argument("--member-ids", nargs="+", help="override member ids (default: file stems)")
    p_ens.add_argument(
        "--mode", choices=("soft", "hard"), default="soft", help="voting mode (default soft)"
    )
    p_ens.set_defaults(func=cmd_ensemble)

    p_report = sub.add_parser("report", help="render a report from saved verdicts")
    p_report.add_argument("--corpus", required=True, help="labeled corpus TSV")
    p_report.add_argument("--verdicts", required=True, help="verdict TSV")
    p_report.add_argument("--out-dir", help="also write report files here")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SoftvoteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
