"""Command-line pipeline: ingest, augment, train, distill, tree, forest,
explain, eval.

Commands compose through files (datasets, model JSON, teacher targets,
reports), never in-memory state, so each stage is independently testable
and replayable. Every run writes a manifest recording the resolved
configuration, sha256 digests of its input files, and the package version;
no timestamps, so reruns with the same seed produce byte-identical
artifacts.

Exit codes: 0 success, 2 user/validation error, 1 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path
from types import SimpleNamespace
from typing import Optional, Sequence

from . import __version__
from .augment import (
    DEFAULT_PIVOT,
    FixtureTranslationClient,
    HttpTranslationClient,
    IdentityTranslationClient,
    TranslationError,
    augment_dataset,
    load_paraphrase_fixture,
)
from .cards import CardError, render_card, save_card
from .corpus import CorpusError, load_dataset, save_dataset
from .evaluation import AUGMENT_SCOPES, EvalError, PipelineSpec, cross_validate, render_report
from .explain import (
    ExplainError,
    build_background,
    explain as explain_instance,
)
from .models import (
    ForestConfig,
    LogisticModel,
    ModelError,
    TrainConfig,
    TreeConfig,
    load_model,
    save_model,
    train_distilled,
    train_forest,
    train_logistic,
    train_tree,
)
from .teacher import TeacherError, ingest_teacher_targets
from .textprep import (
    TextPrepConfig,
    TextPrepError,
    Vectorizer,
    fit_vectorizer,
    tokenize,
    transform,
)

USER_ERRORS = (
    CorpusError,
    TextPrepError,
    ModelError,
    TeacherError,
    EvalError,
    CardError,
    ExplainError,
    TranslationError,
    FileNotFoundError,
)

REPORT_EXTENSIONS = {"markdown": "md", "csv": "csv", "json": "json"}


# ---------------------------------------------------------------------------
# Config file and manifest plumbing
# ---------------------------------------------------------------------------


def load_config_file(path: str | Path) -> dict:
    """Plain-text config: one `key = value` per line, # comments allowed.

    Values are parsed as JSON when possible (numbers, booleans, quoted
    strings) and fall back to the raw string. Dashes in keys normalize to
    underscores so keys mirror long flag names.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    values: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise EvalError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if not key:
            raise EvalError(f"{path}:{lineno}: empty key")
        try:
            values[key] = json.loads(value)
        except json.JSONDecodeError:
            values[key] = value
    return values


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: Path, command: str, resolved: dict, inputs: Sequence[Path]) -> Path:
    manifest = {
        "command": command,
        "config": resolved,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).exists()},
        "version": __version__,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _resolved_config(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, Path):
            value = str(value)
        out[key] = value
    return out


# ---------------------------------------------------------------------------
# Shared argument groups
# ---------------------------------------------------------------------------


def _add_textprep_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("featurization")
    group.add_argument("--no-stem", action="store_true", help="disable suffix stemming")
    group.add_argument(
        "--keep-stop-words", action="store_true", help="keep stop words as features"
    )
    group.add_argument(
        "--min-df", type=int, default=1, help="drop terms in fewer than MIN_DF documents"
    )
    group.add_argument(
        "--no-l2-normalize", action="store_true", help="skip L2 normalization of rows"
    )


def _textprep_config(args: argparse.Namespace) -> TextPrepConfig:
    return TextPrepConfig(
        stem=not args.no_stem,
        remove_stop_words=not args.keep_stop_words,
        min_df=args.min_df,
        l2_normalize=not args.no_l2_normalize,
    )


def _add_train_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("optimization")
    group.add_argument("--lr", type=float, default=0.5, help="learning rate")
    group.add_argument("--epochs", type=int, default=500, help="full-batch iterations")
    group.add_argument("--l2", type=float, default=1e-4, help="L2 penalty strength")
    group.add_argument(
        "--optimizer", choices=("gd", "adam"), default="gd", help="update rule"
    )


def _train_config(args: argparse.Namespace, alpha: float = 0.0, temperature: float = 1.0) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        l2_penalty=args.l2,
        optimizer=args.optimizer,
        distill_weight=alpha,
        temperature=temperature,
        seed=args.seed,
    )


def _featurize_dataset(dataset, config: TextPrepConfig):
    import numpy as np

    token_lists = [tokenize(rec.text, config) for rec in dataset.records]
    vectorizer = fit_vectorizer(token_lists, config)
    X = np.stack([transform(vectorizer, toks).to_dense() for toks in token_lists])
    y = np.array([1.0 if rec.label == "true" else 0.0 for rec in dataset.records])
    return vectorizer, X, y


def _write_model_artifacts(out_dir: Path, model, vectorizer: Vectorizer) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    save_model(model, out_dir / "model.json")
    vectorizer.save(out_dir / "vectorizer.json")
    if isinstance(model, LogisticModel) and "loss_curve" in model.training_meta:
        (out_dir / "loss_curve.json").write_text(
            json.dumps(model.training_meta["loss_curve"]) + "\n", encoding="utf-8"
        )


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset, format=args.format)
    out_path = Path(args.out) if args.out else Path(args.out_dir) / "dataset.jsonl"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(dataset, out_path)
    write_manifest(Path(args.out_dir), "ingest", _resolved_config(args), [Path(args.dataset)])
    counts = dataset.class_counts()
    print(
        f"ingested {len(dataset)} records "
        f"({counts.get('true', 0)} true, {counts.get('fake', 0)} fake) -> {out_path}"
    )
    return 0


def _build_client(args: argparse.Namespace, dataset):
    sources = [args.fixture is not None, args.endpoint is not None, args.identity]
    if sum(sources) != 1:
        raise EvalError("choose exactly one of --fixture, --endpoint, --identity")
    if args.fixture:
        return FixtureTranslationClient(load_paraphrase_fixture(args.fixture), dataset)
    if args.endpoint:
        return HttpTranslationClient(args.endpoint, auth_token=args.auth_token)
    return IdentityTranslationClient()


def cmd_augment(args: argparse.Namespace) -> int:
    if args.scope != "whole_dataset":
        raise EvalError(
            "scope train_folds_only only makes sense during cross-validation; "
            "use the eval command with --augment-scope"
        )
    dataset = load_dataset(args.dataset)
    client = _build_client(args, dataset)
    augmented, report = augment_dataset(
        dataset, client, args.pivot, scope=args.scope, max_workers=args.max_workers
    )
    out_path = Path(args.out) if args.out else Path(args.out_dir) / "augmented.jsonl"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(augmented, out_path)
    inputs = [Path(args.dataset)] + ([Path(args.fixture)] if args.fixture else [])
    write_manifest(Path(args.out_dir), "augment", _resolved_config(args), inputs)
    print(
        f"augmented {report.eligible} eligible records: {report.produced} produced, "
        f"{report.skipped_identical} skipped (identical), {report.failed} failed "
        f"(pivot {report.pivot_language}, scope {report.scope}) -> {out_path}"
    )
    for message in report.failure_messages:
        print(f"  failed {message}", file=sys.stderr)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    vectorizer, X, y = _featurize_dataset(dataset, _textprep_config(args))
    model = train_logistic(X, y, _train_config(args))
    out_dir = Path(args.out_dir)
    _write_model_artifacts(out_dir, model, vectorizer)
    write_manifest(out_dir, "train", _resolved_config(args), [Path(args.dataset)])
    final_loss = model.training_meta["loss_curve"][-1]
    print(f"trained logistic model on {len(dataset)} records, final loss {final_loss:.6f}")
    return 0


def cmd_distill(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    targets = ingest_teacher_targets(args.teacher, dataset)
    vectorizer, X, y = _featurize_dataset(dataset, _textprep_config(args))
    cfg = _train_config(args, alpha=args.alpha, temperature=args.temperature)
    model = train_distilled(X, y, targets, cfg, ids=[rec.id for rec in dataset.records])
    out_dir = Path(args.out_dir)
    _write_model_artifacts(out_dir, model, vectorizer)
    write_manifest(
        out_dir, "distill", _resolved_config(args), [Path(args.dataset), Path(args.teacher)]
    )
    final_loss = model.training_meta["loss_curve"][-1]
    print(
        f"distilled logistic student on {len(dataset)} records "
        f"(alpha={args.alpha}, T={args.temperature}), final loss {final_loss:.6f}"
    )
    return 0


def cmd_tree(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    vectorizer, X, y = _featurize_dataset(dataset, _textprep_config(args))
    model = train_tree(X, y, TreeConfig(max_depth=args.max_depth, min_leaf=args.min_leaf))
    out_dir = Path(args.out_dir)
    _write_model_artifacts(out_dir, model, vectorizer)
    write_manifest(out_dir, "tree", _resolved_config(args), [Path(args.dataset)])
    print(f"grew tree with {model.n_nodes} nodes on {len(dataset)} records")
    return 0


def cmd_forest(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    vectorizer, X, y = _featurize_dataset(dataset, _textprep_config(args))
    cfg = ForestConfig(
        n_trees=args.n_trees,
        max_depth=args.max_depth,
        min_leaf=args.min_leaf,
        feature_fraction=args.feature_fraction,
        bootstrap=not args.no_bootstrap,
        seed=args.seed,
    )
    model = train_forest(X, y, cfg)
    out_dir = Path(args.out_dir)
    _write_model_artifacts(out_dir, model, vectorizer)
    write_manifest(out_dir, "forest", _resolved_config(args), [Path(args.dataset)])
    print(f"grew forest of {len(model.trees)} trees on {len(dataset)} records")
    return 0


_METHOD_FLAGS = {
    "auto": "auto",
    "linear": "linear_exact",
    "exact": "brute_force",
    "tree": "tree_interventional",
    "sampling": "sampling",
}


def cmd_explain(args: argparse.Namespace) -> int:
    if (args.id is None) == (args.text is None):
        raise EvalError("provide exactly one of --id or --text")
    model = load_model(args.model)
    vectorizer = Vectorizer.load(args.vectorizer)
    dataset = load_dataset(args.dataset)
    config = vectorizer.config

    rows = [
        transform(vectorizer, tokenize(rec.text, config)).to_dense()
        for rec in dataset.records
    ]
    background = build_background(model, rows)

    if args.id is not None:
        claim = dataset.get(args.id)
        if claim is None:
            raise CorpusError(f"record {args.id!r} not found in {args.dataset}")
    else:
        claim = SimpleNamespace(id="adhoc", text=args.text, source=None, evidence=None)
    x = transform(vectorizer, tokenize(claim.text, config))

    try:
        attribution = explain_instance(
            model,
            x,
            background,
            method=_METHOD_FLAGS[args.method],
            n_permutations=args.permutations,
            seed=args.seed,
        )
    except ExplainError as exc:
        if "sampling" in str(exc):
            raise ExplainError(f"{exc}; retry with --method sampling") from None
        raise
    document = render_card(
        attribution, claim, vectorizer.terms(), tier=args.tier, format=args.format,
        top_k=args.top_k,
    )
    if args.out:
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        save_card(document, out_path)
        print(f"wrote {args.format} card ({args.tier}) -> {out_path}")
    else:
        if isinstance(document, dict):
            print(json.dumps(document, ensure_ascii=False, indent=2))
        else:
            print(document, end="" if str(document).endswith("\n") else "\n")
    write_manifest(
        Path(args.out_dir),
        "explain",
        _resolved_config(args),
        [Path(args.model), Path(args.vectorizer), Path(args.dataset)],
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    if args.k < 2:
        raise EvalError(f"--k must be at least 2, got {args.k}")
    dataset = load_dataset(args.dataset)
    teacher = None
    if args.model == "distilled":
        if not args.teacher:
            raise EvalError("--model distilled requires --teacher")
        teacher = ingest_teacher_targets(args.teacher, dataset)

    client = None
    scope = "none"
    if args.augment_fixture:
        client = FixtureTranslationClient(
            load_paraphrase_fixture(args.augment_fixture), dataset
        )
        scope = args.augment_scope

    # --alpha only means anything when a teacher is in play; leaving the
    # default 1.0 in a plain logistic spec would fail validation
    distilling = args.model == "distilled"
    spec = PipelineSpec(
        textprep=_textprep_config(args),
        model=args.model,
        train=_train_config(
            args,
            alpha=args.alpha if distilling else 0.0,
            temperature=args.temperature if distilling else 1.0,
        ),
        tree=TreeConfig(max_depth=args.max_depth, min_leaf=args.min_leaf),
        forest=ForestConfig(
            n_trees=args.n_trees,
            max_depth=args.max_depth,
            min_leaf=args.min_leaf,
            feature_fraction=args.feature_fraction,
            bootstrap=not args.no_bootstrap,
            seed=args.seed,
        ),
        augment_scope=scope,
        augment_client=client,
        augment_pivot=args.pivot,
        teacher=teacher,
        name=args.model,
    )
    report = cross_validate(spec, dataset, args.k, args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats = args.report or ["markdown"]
    for fmt in formats:
        document = render_report([report], fmt)
        path = out_dir / f"report.{REPORT_EXTENSIONS[fmt]}"
        path.write_text(document, encoding="utf-8")
        print(f"wrote {fmt} report -> {path}")
    inputs = [Path(args.dataset)]
    if args.teacher:
        inputs.append(Path(args.teacher))
    if args.augment_fixture:
        inputs.append(Path(args.augment_fixture))
    write_manifest(out_dir, "eval", _resolved_config(args), inputs)
    print(
        f"{args.k}-fold {args.model}: accuracy {report.accuracy:.3f}, "
        f"auc {report.auc:.3f} on {report.n_evaluated} held-out predictions"
    )
    return 0


# ---------------------------------------------------------------------------
# Parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimlens",
        description="Interpretable claim-verification students with word-level "
        "Shapley explanations.",
    )
    parser.add_argument("--config", default=None, help="plain-text key = value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--out-dir", default="out", help="artifact directory")
        p.add_argument("--seed", type=int, default=0, help="seed for all randomness")

    p_ingest = sub.add_parser("ingest", help="validate a dataset, write canonical JSONL")
    p_ingest.add_argument("dataset", help="input dataset (.jsonl or .csv)")
    p_ingest.add_argument("--format", choices=("jsonl", "csv"), default=None)
    p_ingest.add_argument("--out", default=None, help="output JSONL path")
    common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_aug = sub.add_parser("augment", help="back-translate claims, append products")
    p_aug.add_argument("dataset")
    p_aug.add_argument("--fixture", default=None, help="JSONL id->paraphrase table")
    p_aug.add_argument("--endpoint", default=None, help="translation service URL")
    p_aug.add_argument("--auth-token", default=None, help="bearer token for --endpoint")
    p_aug.add_argument("--identity", action="store_true", help="identity client (dry run)")
    p_aug.add_argument("--pivot", default=DEFAULT_PIVOT, help="pivot language code")
    p_aug.add_argument(
        "--scope",
        choices=AUGMENT_SCOPES[1:],
        default="whole_dataset",
        help="where products are allowed (train_folds_only needs the eval command)",
    )
    p_aug.add_argument("--max-workers", type=int, default=1, help="concurrent translations")
    p_aug.add_argument("--out", default=None, help="output JSONL path")
    common(p_aug)
    p_aug.set_defaults(func=cmd_augment)

    p_train = sub.add_parser("train", help="hard-label logistic regression")
    p_train.add_argument("dataset")
    _add_textprep_args(p_train)
    _add_train_args(p_train)
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_distill = sub.add_parser("distill", help="logistic student from teacher targets")
    p_distill.add_argument("dataset")
    p_distill.add_argument("--teacher", required=True, help="teacher-target JSONL")
    p_distill.add_argument("--alpha", type=float, default=1.0, help="distillation weight")
    p_distill.add_argument("--temperature", type=float, default=1.0, help="softening factor")
    _add_textprep_args(p_distill)
    _add_train_args(p_distill)
    common(p_distill)
    p_distill.set_defaults(func=cmd_distill)

    p_tree = sub.add_parser("tree", help="CART decision tree")
    p_tree.add_argument("dataset")
    p_tree.add_argument("--max-depth", type=int, default=12)
    p_tree.add_argument("--min-leaf", type=int, default=1)
    _add_textprep_args(p_tree)
    common(p_tree)
    p_tree.set_defaults(func=cmd_tree)

    p_forest = sub.add_parser("forest", help="bagged random forest")
    p_forest.add_argument("dataset")
    p_forest.add_argument("--n-trees", type=int, default=100)
    p_forest.add_argument("--max-depth", type=int, default=12)
    p_forest.add_argument("--min-leaf", type=int, default=1)
    p_forest.add_argument("--feature-fraction", type=float, default=0.5)
    p_forest.add_argument("--no-bootstrap", action="store_true")
    _add_textprep_args(p_forest)
    common(p_forest)
    p_forest.set_defaults(func=cmd_forest)

    p_explain = sub.add_parser("explain", help="emit an explanation card for one claim")
    p_explain.add_argument("--model", required=True, help="model JSON path")
    p_explain.add_argument("--vectorizer", required=True, help="vectorizer JSON path")
    p_explain.add_argument("--dataset", required=True, help="background dataset JSONL")
    p_explain.add_argument("--id", default=None, help="record id to explain")
    p_explain.add_argument("--text", default=None, help="ad-hoc claim text to explain")
    p_explain.add_argument(
        "--method", choices=tuple(_METHOD_FLAGS), default="auto", help="attribution method"
    )
    p_explain.add_argument("--tier", choices=("T", "TSE", "TSESE"), default="TSE")
    p_explain.add_argument("--format", choices=("json", "html", "terminal"), default="terminal")
    p_explain.add_argument("--top-k", type=int, default=15)
    p_explain.add_argument("--permutations", type=int, default=10_000)
    p_explain.add_argument("--out", default=None, help="write the card here instead of stdout")
    common(p_explain)
    p_explain.set_defaults(func=cmd_explain)

    p_eval = sub.add_parser("eval", help="stratified k-fold cross-validation")
    p_eval.add_argument("dataset")
    p_eval.add_argument("--k", type=int, default=10, help="number of folds (>= 2)")
    p_eval.add_argument(
        "--model", choices=("logistic", "distilled", "tree", "forest"), default="logistic"
    )
    p_eval.add_argument("--teacher", default=None, help="teacher-target JSONL (distilled)")
    p_eval.add_argument("--alpha", type=float, default=1.0)
    p_eval.add_argument("--temperature", type=float, default=1.0)
    p_eval.add_argument("--max-depth", type=int, default=12)
    p_eval.add_argument("--min-leaf", type=int, default=1)
    p_eval.add_argument("--n-trees", type=int, default=100)
    p_eval.add_argument("--feature-fraction", type=float, default=0.5)
    p_eval.add_argument("--no-bootstrap", action="store_true")
    p_eval.add_argument("--augment-fixture", default=None, help="paraphrase fixture JSONL")
    p_eval.add_argument(
        "--augment-scope",
        choices=("train_folds_only", "whole_dataset"),
        default="train_folds_only",
    )
    p_eval.add_argument("--pivot", default=DEFAULT_PIVOT)
    p_eval.add_argument(
        "--report",
        action="append",
        choices=("markdown", "csv", "json"),
        default=None,
        help="report format; repeat for several",
    )
    _add_textprep_args(p_eval)
    _add_train_args(p_eval)
    common(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def _known_dests(parser: argparse.ArgumentParser) -> dict[str, set[str]]:
    """dest names per subcommand (and '' for the top level)."""
    out: dict[str, set[str]] = {"": set()}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for name, sub in action.choices.items():
                out[name] = {a.dest for a in sub._actions if a.dest != "help"}
        elif action.dest != "help":
            out[""].add(action.dest)
    return out


def _extract_config_path(argv: list[str]) -> Optional[str]:
    for i, token in enumerate(argv):
        if token == "--config":
            if i + 1 >= len(argv):
                return None  # argparse will report the missing value
            return argv[i + 1]
        if token.startswith("--config="):
            return token.split("=", 1)[1]
    return None


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    config_path = _extract_config_path(argv)
    if config_path is not None:
        try:
            config_values = load_config_file(config_path)
        except USER_ERRORS as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        dests = _known_dests(parser)
        known_anywhere = set().union(*dests.values())
        unknown = sorted(set(config_values) - known_anywhere)
        if unknown:
            print(f"error: unknown config key(s): {', '.join(unknown)}", file=sys.stderr)
            return 2
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                for name, sub in action.choices.items():
                    applicable = {
                        k: v for k, v in config_values.items() if k in dests[name]
                    }
                    if applicable:
                        sub.set_defaults(**applicable)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        return args.func(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
