"""Command-line surface: train, tune, predict, eval, sparsify, stats.

Options can also be supplied through a TOML config file (``--config``);
explicit flags win over file values. Exit codes: 0 success, 2 usage,
3 I/O, 4 data format, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from xmlridge import metrics as metrics_mod
from xmlridge import model as model_mod
from xmlridge.data import (
    Dataset,
    concat_features,
    l2_normalize_rows,
    load_dataset,
    load_dense_matrix,
)
from xmlridge.errors import (
    DimensionMismatchError,
    NumericalError,
    ParseError,
    UsageError,
    XmlRidgeError,
)
from xmlridge.reduce import (
    ReductionTransform,
    apply_reduction,
    fit_sparse_random_projection,
    fit_truncated_svd,
    load_transform,
    save_transform,
)
from xmlridge.seeding import substream_seed
from xmlridge.solver import RidgeSolveConfig
from xmlridge.sparse import SparseMatrix
from xmlridge.weighting import (
    DEFAULT_A,
    DEFAULT_B,
    compute_propensity,
    load_propensity,
    save_propensity,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


@dataclass
class ReduceSpec:
    kind: str  # "svd" | "rp"
    d: int
    density: float | None = None


def _parse_reduce(text: str) -> ReduceSpec:
    parts = text.split(":")
    if parts[0] == "svd" and len(parts) == 2:
        return ReduceSpec("svd", _parse_pos_int(parts[1], "svd dimension"))
    if parts[0] == "rp" and len(parts) in (2, 3):
        density = None
        if len(parts) == 3:
            density = float(parts[2])
            if not 0.0 < density <= 1.0:
                raise UsageError(f"projection density must be in (0, 1], got {density}")
        return ReduceSpec("rp", _parse_pos_int(parts[1], "projection dimension"), density)
    raise UsageError(f"--reduce expects 'svd:d' or 'rp:d[:density]', got {text!r}")


def _parse_pos_int(text: str, what: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise UsageError(f"{what} must be an integer, got {text!r}") from None
    if value < 1:
        raise UsageError(f"{what} must be positive, got {value}")
    return value


def _parse_k_values(text: str) -> list[int]:
    try:
        ks = sorted({int(tok) for tok in text.split(",") if tok})
    except ValueError:
        raise UsageError(f"--k expects comma-separated integers, got {text!r}") from None
    if not ks or ks[0] < 1:
        raise UsageError(f"--k values must be positive integers, got {text!r}")
    return ks


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise UsageError(f"--lambda-grid expects comma-separated reals, got {text!r}") from None
    if not grid:
        raise UsageError("--lambda-grid must list at least one value")
    return grid


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


class _Options:
    """Flag values backed by a config file; explicit flags win."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = _load_config(self._args.get("config"))

    def get(self, key: str, default=None):
        value = self._args.get(key)
        if value is not None:
            return value
        if key in self._file:
            return self._file[key]
        return default

    def require(self, key: str, flag: str):
        value = self.get(key)
        if value is None:
            raise UsageError(f"{flag} is required")
        return value


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; explicit flags override it")
    p.add_argument("--seed", type=int, default=None, help="top-level random seed (default 0)")
    p.add_argument("--threads", type=int, default=None, help="worker cap for prediction (default 1)")


def _add_prep(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train", help="training set in repository text format")
    p.add_argument("--dense-embeddings", dest="dense_embeddings",
                   help="dense embedding file aligned with the instances")
    p.add_argument("--normalize-rows", dest="normalize_rows",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="L2-normalize sparse feature rows before anything else")
    p.add_argument("--reduce", help="feature reduction: svd:d or rp:d[:density]")
    p.add_argument("--ps", action=argparse.BooleanOptionalAction, default=None,
                   help="train against propensity-weighted labels")
    p.add_argument("--ps-a", dest="ps_a", type=float, default=None,
                   help=f"propensity parameter A (default {DEFAULT_A})")
    p.add_argument("--ps-b", dest="ps_b", type=float, default=None,
                   help=f"propensity parameter B (default {DEFAULT_B})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xmlridge",
        description="Closed-form ridge classifier for extreme multi-label datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write a model container")
    _add_prep(p)
    p.add_argument("--lambda", dest="lam", type=float, help="L2 regularization strength")
    p.add_argument("--lambda-grid", dest="lambda_grid", help=argparse.SUPPRESS)
    p.add_argument("--out", help="model container output path")
    p.add_argument("--propensity-out", dest="propensity_out",
                   help="also write the label weights as a text file")
    _add_common(p)

    p = sub.add_parser("tune", help="grid-search lambda on a validation split")
    _add_prep(p)
    p.add_argument("--lambda-grid", dest="lambda_grid", help="comma-separated lambda grid")
    p.add_argument("--validation-fraction", dest="validation_fraction", type=float, default=None,
                   help="held-out fraction of the training set (default 0.1)")
    p.add_argument("--out", help="optional CSV output of the per-lambda scores")
    _add_common(p)

    p = sub.add_parser("predict", help="write ranked label predictions")
    p.add_argument("--model", help="model container path")
    p.add_argument("--test", help="test set in repository text format")
    p.add_argument("--dense-embeddings", dest="dense_embeddings")
    p.add_argument("--reduction", help="reduction transform container from training")
    p.add_argument("--topk", type=int, default=None, help="labels per instance (default 5)")
    p.add_argument("--out", help="prediction output path (default stdout)")
    _add_common(p)

    p = sub.add_parser("eval", help="compute P@K / PSP@K on a test set")
    p.add_argument("--model", help="model container path")
    p.add_argument("--test", help="test set in repository text format")
    p.add_argument("--train", help="training set, used for propensity label counts")
    p.add_argument("--propensity", help="precomputed label weights file")
    p.add_argument("--ps-a", dest="ps_a", type=float, default=None)
    p.add_argument("--ps-b", dest="ps_b", type=float, default=None)
    p.add_argument("--k", help="comma-separated K values (default 1,3,5)")
    p.add_argument("--psp-normalized", dest="psp_normalized",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="also report PSP@K divided by the ideal ranking's score")
    p.add_argument("--dense-embeddings", dest="dense_embeddings")
    p.add_argument("--reduction", help="reduction transform container from training")
    p.add_argument("--out", help="optional CSV report path")
    _add_common(p)

    p = sub.add_parser("sparsify", help="drop small model entries and report retention")
    p.add_argument("--model", help="model container path")
    p.add_argument("--threshold", type=float, default=None, help="magnitude cutoff")
    p.add_argument("--out", help="sparsified model output path")
    p.add_argument("--sweep", help="comma-separated thresholds: report kept fraction per value")
    p.add_argument("--sweep-out", dest="sweep_out", help="CSV output for the sweep")
    _add_common(p)

    p = sub.add_parser("stats", help="label frequency histogram and P@K contribution data")
    p.add_argument("--data", help="dataset whose label frequencies define the ordering")
    p.add_argument("--out", help="histogram CSV path (default stdout)")
    p.add_argument("--model", help="model container for the contribution analysis")
    p.add_argument("--test", help="test set for the contribution analysis")
    p.add_argument("--k", help="cutoff for the contribution analysis (default 5)")
    p.add_argument("--dense-embeddings", dest="dense_embeddings")
    p.add_argument("--reduction", help="reduction transform container from training")
    p.add_argument("--out-contribution", dest="out_contribution",
                   help="contribution CSV path")
    _add_common(p)
    return parser


def _prepare_features(
    features: SparseMatrix,
    normalize: bool,
    embeddings: np.ndarray | None,
    transform: ReductionTransform | None,
):
    if normalize:
        features = l2_normalize_rows(features)
    if embeddings is not None:
        features = concat_features(features, embeddings)
    if transform is not None:
        return apply_reduction(transform, features)
    return features


def _fit_transform(spec: ReduceSpec, features: SparseMatrix, seed: int) -> ReductionTransform:
    if spec.kind == "svd":
        return fit_truncated_svd(features, spec.d, seed=substream_seed(seed, "svd"))
    return fit_sparse_random_projection(
        features.cols, spec.d, density=spec.density, seed=substream_seed(seed, "projection")
    )


def _label_counts(d: Dataset) -> np.ndarray:
    return np.bincount(d.labels.col_indices, minlength=d.num_labels).astype(np.int64)


def _train_model(
    d: Dataset,
    lam: float,
    use_ps: bool,
    ps_a: float,
    ps_b: float,
    normalize: bool,
    embeddings: np.ndarray | None,
    reduce_spec: ReduceSpec | None,
    seed: int,
    provenance: dict,
):
    """Shared by cmd_train and cmd_tune; returns (model, transform, propensity)."""
    features = l2_normalize_rows(d.features) if normalize else d.features
    if embeddings is not None:
        features = concat_features(features, embeddings)
    transform = None
    if reduce_spec is not None:
        transform = _fit_transform(reduce_spec, features, seed)
        features = apply_reduction(transform, features)
    propensity = None
    if use_ps:
        propensity = compute_propensity(_label_counts(d), d.num_instances, ps_a, ps_b)
    trained = model_mod.train(
        _with_features(d, features),
        RidgeSolveConfig(lam=lam),
        propensity=propensity,
        provenance=provenance,
    )
    return trained, transform, propensity


def _with_features(d: Dataset, features) -> Dataset:
    if isinstance(features, SparseMatrix):
        return Dataset(features, d.labels)
    # Dense reduced features: carry them through a thin wrapper dataset.
    return _DenseFeatureDataset(features, d.labels)


class _DenseFeatureDataset:
    """Duck-typed Dataset whose features are a dense matrix."""

    def __init__(self, features: np.ndarray, labels: SparseMatrix):
        if features.shape[0] != labels.rows:
            raise DimensionMismatchError(
                f"features have {features.shape[0]} rows but labels have {labels.rows}"
            )
        self.features = features
        self.labels = labels

    @property
    def num_instances(self) -> int:
        return self.labels.rows

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_labels(self) -> int:
        return self.labels.cols


def cmd_train(opts: _Options) -> int:
    train_path = opts.require("train", "--train")
    if opts.get("lambda_grid") is not None:
        raise UsageError("--lambda-grid belongs to the tune command; pass a single --lambda here")
    lam = opts.get("lam")
    if lam is None:
        raise UsageError("--lambda is required")
    out = opts.require("out", "--out")
    seed = int(opts.get("seed", 0))
    use_ps = bool(opts.get("ps", False))
    ps_a = float(opts.get("ps_a", DEFAULT_A))
    ps_b = float(opts.get("ps_b", DEFAULT_B))
    normalize = bool(opts.get("normalize_rows", False))
    reduce_text = opts.get("reduce")
    reduce_spec = _parse_reduce(reduce_text) if reduce_text else None

    started = time.perf_counter()
    d = load_dataset(train_path)
    embeddings = None
    if opts.get("dense_embeddings"):
        embeddings = load_dense_matrix(opts.get("dense_embeddings"), d.num_instances)
    provenance = {
        "dataset": os.path.basename(train_path),
        "normalize_rows": normalize,
        "dense_embeddings": embeddings is not None,
        "reduction": reduce_text or "",
        "seed": seed,
    }
    trained, transform, propensity = _train_model(
        d, float(lam), use_ps, ps_a, ps_b, normalize, embeddings, reduce_spec, seed, provenance
    )
    model_mod.save_model(trained, out)
    if transform is not None:
        save_transform(transform, out + ".reduction")
    if propensity is not None and opts.get("propensity_out"):
        with open(opts.get("propensity_out"), "w", encoding="utf-8") as fh:
            save_propensity(propensity, fh)
    elapsed = time.perf_counter() - started
    print(
        f"trained: instances={d.num_instances} features={trained.feature_dim} "
        f"labels={trained.label_dim} lambda={trained.lam:g} "
        f"weighting={'on' if trained.weighting_applied else 'off'} "
        f"wall_time={elapsed:.2f}s -> {out}"
    )
    if transform is not None:
        print(f"reduction transform -> {out}.reduction")
    return 0


def cmd_tune(opts: _Options) -> int:
    train_path = opts.require("train", "--train")
    grid_text = opts.get("lambda_grid")
    if grid_text is None:
        raise UsageError("--lambda-grid is required")
    grid = _parse_grid(str(grid_text))
    fraction = float(opts.get("validation_fraction", 0.1))
    seed = int(opts.get("seed", 0))
    threads = int(opts.get("threads", 1))
    use_ps = bool(opts.get("ps", False))
    ps_a = float(opts.get("ps_a", DEFAULT_A))
    ps_b = float(opts.get("ps_b", DEFAULT_B))
    normalize = bool(opts.get("normalize_rows", False))
    reduce_text = opts.get("reduce")
    reduce_spec = _parse_reduce(reduce_text) if reduce_text else None

    d = load_dataset(train_path)
    embeddings = None
    if opts.get("dense_embeddings"):
        embeddings = load_dense_matrix(opts.get("dense_embeddings"), d.num_instances)

    from xmlridge.data import split_indices

    train_idx, val_idx = split_indices(d.num_instances, fraction, substream_seed(seed, "split"))
    d_train = Dataset(d.features.take_rows(train_idx), d.labels.take_rows(train_idx))
    d_val = Dataset(d.features.take_rows(val_idx), d.labels.take_rows(val_idx))
    emb_train = embeddings[train_idx] if embeddings is not None else None
    emb_val = embeddings[val_idx] if embeddings is not None else None

    feats_train = l2_normalize_rows(d_train.features) if normalize else d_train.features
    feats_val = l2_normalize_rows(d_val.features) if normalize else d_val.features
    if emb_train is not None:
        feats_train = concat_features(feats_train, emb_train)
        feats_val = concat_features(feats_val, emb_val)
    if reduce_spec is not None:
        transform = _fit_transform(reduce_spec, feats_train, seed)
        feats_train = apply_reduction(transform, feats_train)
        feats_val = apply_reduction(transform, feats_val)

    propensity = None
    if use_ps:
        propensity = compute_propensity(_label_counts(d_train), d_train.num_instances, ps_a, ps_b)

    metric_k = min(5, d.num_labels)
    metric_name = f"PSP@{metric_k}" if use_ps else f"P@{metric_k}"
    train_ds = _with_features(d_train, feats_train)

    rows = []
    for lam in grid:
        trained = model_mod.train(train_ds, RidgeSolveConfig(lam=lam), propensity=propensity)
        preds = model_mod.predict_topk(trained, feats_val, metric_k, threads=threads)
        if use_ps:
            score = metrics_mod.psp_at_k(preds, d_val.labels, propensity, metric_k)
        else:
            score = metrics_mod.precision_at_k(preds, d_val.labels, metric_k)
        rows.append((lam, score))
        print(f"lambda={lam:g} {metric_name}={score!r}")

    best_lam, best_score = min(rows, key=lambda ls: (-ls[1], ls[0]))
    print(f"selected lambda={best_lam:g} {metric_name}={best_score!r}")
    if opts.get("out"):
        with open(opts.get("out"), "w", encoding="utf-8") as fh:
            fh.write("lambda,score\n")
            for lam, score in rows:
                fh.write(f"{lam!r},{score!r}\n")
    return 0


def _load_test_features(opts: _Options, model: model_mod.RidgeModel, test: Dataset):
    normalize = bool(model.provenance.get("normalize_rows", False))
    embeddings = None
    if opts.get("dense_embeddings"):
        embeddings = load_dense_matrix(opts.get("dense_embeddings"), test.num_instances)
    transform = None
    if opts.get("reduction"):
        transform = load_transform(opts.get("reduction"))
    return _prepare_features(test.features, normalize, embeddings, transform)


def cmd_predict(opts: _Options) -> int:
    model = model_mod.load_model(opts.require("model", "--model"))
    test = load_dataset(opts.require("test", "--test"))
    k = int(opts.get("topk", 5))
    if not 1 <= k <= model.label_dim:
        raise UsageError(f"--topk must be in [1, {model.label_dim}], got {k}")
    feats = _load_test_features(opts, model, test)
    preds = model_mod.predict_topk(model, feats, k, threads=int(opts.get("threads", 1)))
    if opts.get("out"):
        with open(opts.get("out"), "w", encoding="utf-8") as fh:
            model_mod.write_predictions(preds, fh)
    else:
        model_mod.write_predictions(preds, sys.stdout)
    return 0


def cmd_eval(opts: _Options) -> int:
    model = model_mod.load_model(opts.require("model", "--model"))
    test = load_dataset(opts.require("test", "--test"))
    k_values = _parse_k_values(str(opts.get("k", "1,3,5")))
    if k_values[-1] > model.label_dim:
        raise UsageError(f"--k {k_values[-1]} exceeds the label count {model.label_dim}")

    propensity = None
    if opts.get("propensity"):
        with open(opts.get("propensity"), "r", encoding="utf-8") as fh:
            propensity = load_propensity(fh)
    elif opts.get("train"):
        d_train = load_dataset(opts.get("train"))
        if d_train.num_labels != model.label_dim:
            raise DimensionMismatchError(
                f"training set has {d_train.num_labels} labels but the model has {model.label_dim}"
            )
        propensity = compute_propensity(
            _label_counts(d_train), d_train.num_instances,
            float(opts.get("ps_a", DEFAULT_A)), float(opts.get("ps_b", DEFAULT_B)),
        )

    feats = _load_test_features(opts, model, test)
    preds = model_mod.predict_topk(model, feats, k_values[-1], threads=int(opts.get("threads", 1)))
    report = metrics_mod.evaluate(
        preds, test.labels, k_values,
        propensity=propensity, normalized=bool(opts.get("psp_normalized", False)),
    )
    print(metrics_mod.format_report_table(report))
    if opts.get("out"):
        with open(opts.get("out"), "w", encoding="utf-8") as fh:
            metrics_mod.report_to_csv(report, fh)
    return 0


def cmd_sparsify(opts: _Options) -> int:
    model = model_mod.load_model(opts.require("model", "--model"))
    threshold = opts.get("threshold")
    sweep_text = opts.get("sweep")
    if threshold is None and sweep_text is None:
        raise UsageError("pass --threshold (and --out) or --sweep")
    if sweep_text is not None:
        thresholds = sorted(float(t) for t in str(sweep_text).split(",") if t)
        lines = ["threshold,kept_fraction"]
        for t in thresholds:
            _, kept = model_mod.sparsify(model, t)
            lines.append(f"{t!r},{kept!r}")
        print("\n".join(lines))
        if opts.get("sweep_out"):
            with open(opts.get("sweep_out"), "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
    if threshold is not None:
        out = opts.require("out", "--out")
        sparse_model, kept = model_mod.sparsify(model, float(threshold))
        model_mod.save_model(sparse_model, out)
        print(
            f"sparsified: threshold={float(threshold):g} kept={sparse_model.weights.nnz} "
            f"of {model.feature_dim * model.label_dim} ({100 * kept:.2f}%) -> {out}"
        )
    return 0


def cmd_stats(opts: _Options) -> int:
    data = load_dataset(opts.require("data", "--data"))
    hist = metrics_mod.label_frequency_histogram(data)
    if opts.get("out"):
        with open(opts.get("out"), "w", encoding="utf-8") as fh:
            metrics_mod.histogram_to_csv(hist, fh)
    else:
        metrics_mod.histogram_to_csv(hist, sys.stdout)

    if opts.get("model"):
        model = model_mod.load_model(opts.get("model"))
        test_path = opts.get("test")
        if test_path is None:
            raise UsageError("--test is required for the contribution analysis")
        test = load_dataset(test_path)
        k = int(opts.get("k", 5))
        if not 1 <= k <= model.label_dim:
            raise UsageError(f"--k must be in [1, {model.label_dim}], got {k}")
        feats = _load_test_features(opts, model, test)
        preds = model_mod.predict_topk(model, feats, k, threads=int(opts.get("threads", 1)))
        freq_order = [lab for lab, _ in hist]
        contribution = metrics_mod.label_contribution_at_k(preds, test.labels, k, freq_order)
        out_path = opts.get("out_contribution")
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                metrics_mod.contribution_to_csv(contribution, freq_order, fh)
        else:
            metrics_mod.contribution_to_csv(contribution, freq_order, sys.stdout)
    return 0


_COMMANDS = {
    "train": cmd_train,
    "tune": cmd_tune,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "sparsify": cmd_sparsify,
    "stats": cmd_stats,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](_Options(args))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, DimensionMismatchError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 5
    except XmlRidgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
