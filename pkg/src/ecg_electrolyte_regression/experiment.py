"""Experiment orchestration behind the command-line interface.

Commands are independent: ``gen-data`` writes a corpus, ``train`` writes one
checkpoint per seed (and per binary task when k = 2), ``eval`` and ``ood``
read checkpoints and write reports. Every file is written atomically.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ecg_electrolyte_regression.checkpoint import RIDGE_HEAD, ModelCheckpoint
from ecg_electrolyte_regression.config import (
    ElectrolyteKind,
    ExperimentConfig,
    config_hash,
    worker_count,
)
from ecg_electrolyte_regression.errors import CheckpointError, InvalidInputError
from ecg_electrolyte_regression.evaluation import (
    DEFAULT_FRACTIONS,
    EvalReport,
    calibration_bins,
    cumulative_macro_auroc,
    error_variance_correlation,
    regression_metrics,
    sparsification,
    sparsification_curve,
    stratified_mae,
    summarize_seeds,
)
from ecg_electrolyte_regression.features import DEFAULT_COMPONENTS, pca_fit, pca_transform
from ecg_electrolyte_regression.logging_config import logger, run_context
from ecg_electrolyte_regression.models import (
    ArrayDataset,
    HeadKind,
    build_model,
    predict,
    ridge_predict,
    ridge_select,
    to_arrays,
    train,
)
from ecg_electrolyte_regression.perturb import perturb_batch
from ecg_electrolyte_regression.store import CorpusStore
from ecg_electrolyte_regression.synthdata import generate_dataset
from ecg_electrolyte_regression.targets import BinaryTask, build_codec, discretize
from ecg_electrolyte_regression.uncertainty import (
    MemberOutput,
    combine_outputs,
    fit_last_layer_laplace,
    member_outputs,
)
from ecg_electrolyte_regression.version import __version__

HEAD_CHOICES = (*(h.value for h in HeadKind), RIDGE_HEAD)
EVAL_SPLITS = ("random-test", "temporal-test")
CHECKPOINT_SUFFIX = ".ckpt"
PERTURBATION_SEED = 0
CALIBRATION_BINS = 10
LOG_FLOOR = 1e-12


def corpus_store(manifest: str | Path) -> CorpusStore:
    """Store for a manifest file or the corpus directory holding it."""
    path = Path(manifest)
    return CorpusStore(path if path.is_dir() else path.parent)


def generate_corpus(config: ExperimentConfig, out_dir: str | Path) -> Path:
    """Generate the synthetic corpus of ``config`` and write it under ``out_dir``."""
    with run_context(corpus=out_dir):
        splits = generate_dataset(config.generator, config.training.validation_fraction)
        return CorpusStore(out_dir).write(splits, config.generator)


def check_head(head: str, k: int | None) -> None:
    """Reject head/class-count combinations that cannot be trained."""
    if head == RIDGE_HEAD:
        if k is not None:
            raise InvalidInputError("--classes is meaningless for the ridge head")
        return
    try:
        kind = HeadKind(head)
    except ValueError as e:
        raise InvalidInputError(f"Unknown head {head!r}; expected one of {HEAD_CHOICES}") from e
    if kind.discretized and k is None:
        raise InvalidInputError(f"The {head} head needs --classes")
    if not kind.discretized and k is not None:
        raise InvalidInputError(f"--classes is meaningless for the {head} head")
    if k is not None and k < 2:
        raise InvalidInputError(f"--classes must be at least 2, got {k}")


def checkpoint_name(head: str, seed: int, k: int | None = None, task: BinaryTask | None = None) -> str:
    parts = [head]
    if k is not None:
        parts.append(f"k{k}")
    if task is not None:
        parts.append(task.value)
    parts.append(f"seed{seed}")
    return "-".join(parts) + CHECKPOINT_SUFFIX


@dataclass(frozen=True)
class TrainJob:
    config: ExperimentConfig
    head: str
    seed: int
    path: Path
    k: int | None = None
    task: BinaryTask | None = None


def _fit_ridge(job: TrainJob, train_data: ArrayDataset, val_data: ArrayDataset) -> ModelCheckpoint:
    d = int(np.prod(train_data.x.shape[1:]))
    pca = pca_fit(train_data.x, n_components=min(DEFAULT_COMPONENTS, len(train_data), d))
    ridge = ridge_select(
        pca_transform(pca, train_data.x), train_data.y, pca_transform(pca, val_data.x), val_data.y
    )
    return ModelCheckpoint(
        head=RIDGE_HEAD,
        seed=job.seed,
        config=job.config,
        codec=build_codec(train_data.y),
        pca=pca,
        ridge=ridge,
    )


def run_train_job(
    job: TrainJob,
    train_data: ArrayDataset,
    val_data: ArrayDataset,
    electrolyte: ElectrolyteKind,
) -> Path:
    """Train one model and write its checkpoint."""
    with run_context(checkpoint=job.path.name):
        try:
            if job.head == RIDGE_HEAD:
                ckpt = _fit_ridge(job, train_data, val_data)
            else:
                codec = build_codec(train_data.y, job.k, electrolyte, job.task)
                model = build_model(job.config.backbone, job.head, seed=job.seed, k=job.k)
                train_cfg = job.config.training.model_copy(update={"seed": job.seed})
                log = train(model, train_data, val_data, codec, train_cfg)
                laplace = None
                if model.kind is HeadKind.GAUSSIAN:
                    laplace = fit_last_layer_laplace(model, train_data, codec, job.config.laplace)
                ckpt = ModelCheckpoint.from_network(model, codec, job.config, job.seed, log, laplace)
            return ckpt.save(job.path)
        except Exception as e:
            logger.error(f"Failed to train {job.path.name}: {e}")
            raise


def train_models(
    config: ExperimentConfig,
    manifest: str | Path,
    head: str,
    seeds: Sequence[int],
    out_dir: str | Path,
    k: int | None = None,
    workers: int | None = None,
) -> list[Path]:
    """Train one checkpoint per seed, skipping seeds whose checkpoint exists.

    For k = 2 each seed yields a hypo and a hyper model.

    Returns:
        All checkpoint paths of the request, including skipped ones.
    """
    check_head(head, k)
    if not seeds:
        raise InvalidInputError("No seeds given")
    store = corpus_store(manifest)
    config = config.model_copy(update={"generator": store.generator_config()})
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks: list[BinaryTask | None] = [BinaryTask.HYPO, BinaryTask.HYPER] if k == 2 else [None]
    jobs: list[TrainJob] = []
    done: list[Path] = []
    for seed in seeds:
        for task in tasks:
            path = out_dir / checkpoint_name(head, seed, k, task)
            if path.exists():
                logger.warning(f"Checkpoint {path.name} exists; skipping seed {seed}")
                done.append(path)
            else:
                jobs.append(TrainJob(config=config, head=head, seed=seed, path=path, k=k, task=task))
    if not jobs:
        return sorted(done)

    with run_context(corpus=store.root):
        corpus = store.read()
        train_data = to_arrays(corpus.train)
        val_data = to_arrays(corpus.validation)
        expected = (config.backbone.in_leads, config.backbone.input_length)
        if train_data.x.shape[1:] != expected:
            raise InvalidInputError(
                f"Records have shape {train_data.x.shape[1:]}, backbone expects {expected}"
            )

        workers = workers or worker_count()
        if workers > 1 and len(jobs) > 1:
            logger.info(f"Training {len(jobs)} models on {min(workers, len(jobs))} worker processes")
            with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
                futures = [
                    pool.submit(run_train_job, job, train_data, val_data, corpus.electrolyte)
                    for job in jobs
                ]
                paths = [f.result() for f in futures]
        else:
            paths = [run_train_job(job, train_data, val_data, corpus.electrolyte) for job in jobs]
    return sorted(done + paths)


def resolve_checkpoint_paths(paths: Sequence[str | Path]) -> list[Path]:
    """Expand directories to the checkpoint files they contain."""
    resolved: list[Path] = []
    for p in map(Path, paths):
        resolved.extend(sorted(p.glob(f"*{CHECKPOINT_SUFFIX}")) if p.is_dir() else [p])
    if not resolved:
        raise InvalidInputError("No checkpoints given")
    return resolved


def load_checkpoints(paths: Sequence[str | Path], store: CorpusStore | None = None) -> list[ModelCheckpoint]:
    """Load checkpoints and check they were trained on the same corpus.

    Raises:
        InvalidInputError: If no checkpoint is given.
        CheckpointError: If generator configs differ from each other or from
            the corpus in ``store``.
    """
    checkpoints = [ModelCheckpoint.load(p) for p in resolve_checkpoint_paths(paths)]
    hashes = {config_hash(c.config.generator) for c in checkpoints}
    if len(hashes) > 1:
        raise CheckpointError("Checkpoints were trained on different corpora")
    if store is not None and store.manifest()["config_hash"] not in hashes:
        raise CheckpointError(f"Checkpoints were not trained on the corpus at {store.root}")
    return checkpoints


class Scale:
    """Raw or log concentration scale for metrics."""

    def __init__(self, log_space: bool) -> None:
        self.log_space = log_space

    def values(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return np.log(np.maximum(y, LOG_FLOOR)) if self.log_space else y

    def variances(self, var: np.ndarray, mean: np.ndarray) -> np.ndarray:
        """Delta-method variance on the log scale."""
        if not self.log_space:
            return var
        return var / np.maximum(np.asarray(mean, dtype=np.float64), LOG_FLOOR) ** 2


def _regression_output(ckpt: ModelCheckpoint, x: np.ndarray) -> MemberOutput:
    if ckpt.head == RIDGE_HEAD:
        mean = ridge_predict(ckpt.ridge, pca_transform(ckpt.pca, x))
        return MemberOutput(mean=mean, variance=None, laplace=None)
    return member_outputs(ckpt.to_member(), x)


def _uncertainty_tables(
    head: str,
    outputs: list[MemberOutput],
    targets: np.ndarray,
    scale: Scale,
) -> dict[str, list[dict[str, Any]]]:
    dist = combine_outputs(outputs)
    mean = scale.values(dist.mean)
    err = mean - targets
    rows: dict[str, list[dict[str, Any]]] = defaultdict(list)
    ens = regression_metrics(mean, targets, 1.0)
    rows["ensemble"].append({"head": head, "members": len(outputs), "MSE": ens.mse, "MAE": ens.mae})

    uncertainties = {
        name: scale.variances(u, dist.mean) for name, u in dist.uncertainties().items()
    }
    if head == HeadKind.DIRECT.value:
        uncertainties = {"direct_ensemble": uncertainties["epistemic_ensemble"]}
    if len(outputs) < 2:
        uncertainties.pop("epistemic_ensemble", None)
        uncertainties.pop("aleatoric+ensemble", None)
        uncertainties.pop("direct_ensemble", None)

    for name, u in {"oracle": np.abs(err), **uncertainties}.items():
        for f, mae in sparsification(np.abs(err), u, DEFAULT_FRACTIONS).items():
            rows["sparsification"].append({"head": head, "uncertainty": name, "retained_fraction": f, "MAE": mae})
        if name == "oracle":
            continue
        curve = sparsification_curve(np.abs(err), u)
        rows["sparsification_curve"].extend(
            {"head": head, "uncertainty": name, **r} for r in curve.to_dict("records")
        )
        rows["uncertainty"].append({"head": head, "uncertainty": name, "mean": float(np.mean(u))})
        try:
            corr = error_variance_correlation(err**2, u)
            rows["correlation"].append(
                {"head": head, "uncertainty": name, "pearson": corr.pearson, "spearman": corr.spearman}
            )
        except InvalidInputError as e:
            logger.warning(f"No correlation for {head}/{name}: {e}")
        if name in ("aleatoric", "aleatoric+ensemble") and np.all(u > 0):
            calib = calibration_bins(mean, np.sqrt(u), targets, min(CALIBRATION_BINS, len(u)))
            rows["calibration"].extend(
                {"head": head, "uncertainty": name, **r} for r in calib.bins.to_dict("records")
            )
            rows["coverage"].append(
                {"head": head, "uncertainty": name, "coverage_2sigma": calib.coverage_2sigma}
            )
    rows["_mean"] = [{"head": head, "mean": mean}]
    return rows


def evaluate_arrays(
    checkpoints: Sequence[ModelCheckpoint],
    data: ArrayDataset,
    name: str,
    sigma_y: float,
    bayes_optimal_mae: float,
    log_space: bool = False,
) -> EvalReport:
    """Compute every metric family for ``checkpoints`` on one set of records."""
    scale = Scale(log_space)
    targets = scale.values(data.y)
    first = checkpoints[0]
    report = EvalReport(
        name=name,
        provenance={
            "config_hash": first.config_hash,
            "package_version": __version__,
            "electrolyte": first.config.generator.electrolyte.value,
            "log_space": log_space,
            "n_checkpoints": len(checkpoints),
        },
    )

    reg_rows: list[dict[str, Any]] = []
    auroc_rows: list[dict[str, Any]] = []
    families: dict[str, list[MemberOutput]] = defaultdict(list)
    for ckpt in checkpoints:
        task = ckpt.task.value if ckpt.task else None
        if ckpt.head == RIDGE_HEAD or not HeadKind(ckpt.head).discretized:
            out = _regression_output(ckpt, data.x)
            families[ckpt.head].append(out)
            mean = out.mean
        else:
            pred = predict(ckpt.build_network(), data.x, ckpt.codec)
            mean = pred.mean
            classes = discretize(data.y, ckpt.codec.discretizer)
            try:
                cum = cumulative_macro_auroc(pred.cumulative_scores, classes, ckpt.codec.k)
                for i, value in enumerate(cum.per_threshold, start=1):
                    auroc_rows.append(
                        {"head": ckpt.head, "k": ckpt.k, "task": task, "seed": ckpt.seed,
                         "threshold": i, "AUROC": np.nan if value is None else value}
                    )
            except InvalidInputError as e:
                logger.warning(f"No AUROC for {ckpt.head} k={ckpt.k} seed {ckpt.seed}: {e}")
        m = regression_metrics(scale.values(mean), targets, sigma_y)
        reg_rows.append({"head": ckpt.head, "k": ckpt.k, "task": task, "seed": ckpt.seed, **m.as_dict()})

    regression = pd.DataFrame(reg_rows)
    report.add_table("regression", regression)
    report.add_table("regression_summary", summarize_seeds(regression, group=["head", "k", "task"]))
    summary: dict[str, Any] = {
        "n_examples": len(data),
        "bayes_optimal_mae": bayes_optimal_mae,
        "sigma_y": sigma_y,
        "MAE": {},
        "AUmROC": {},
        "uncertainty_means": {},
    }
    for (head, k), part in regression.groupby(["head", "k"], dropna=False, sort=False):
        key = head if pd.isna(k) else f"{head}-k{int(k)}"
        summary["MAE"][key] = {
            "mean": float(part["MAE"].mean()),
            "formatted": summarize_seeds(part[["MAE"]]).loc[0, "formatted"],
        }

    if auroc_rows:
        auroc_table = pd.DataFrame(auroc_rows)
        report.add_table("auroc", auroc_table)
        aumroc = (
            auroc_table.groupby(["head", "k", "seed"], sort=False)["AUROC"].mean().reset_index()
            .rename(columns={"AUROC": "AUmROC"})
        )
        report.add_table("aumroc_summary", summarize_seeds(aumroc, group=["head", "k"]))
        sweep = aumroc.groupby(["head", "k"], sort=False)["AUmROC"].agg(["mean", "std"]).reset_index()
        class_mae = regression.dropna(subset=["k"]).groupby(["head", "k"], sort=False)["MAE"].mean()
        sweep["class_MAE"] = [class_mae.get((h, k), np.nan) for h, k in zip(sweep["head"], sweep["k"], strict=True)]
        direct = regression[regression["head"] == HeadKind.DIRECT.value]["MAE"]
        sweep["direct_MAE"] = float(direct.mean()) if len(direct) else np.nan
        report.add_table("class_sweep", sweep.rename(columns={"mean": "AUmROC", "std": "AUmROC_sd"}))
        for row in sweep.itertuples():
            summary["AUmROC"][f"{row.head}-k{int(row.k)}"] = float(row.mean)

    merged: dict[str, list[dict[str, Any]]] = defaultdict(list)
    primary_mean = None
    for head in (HeadKind.GAUSSIAN.value, HeadKind.DIRECT.value, RIDGE_HEAD):
        if head not in families:
            continue
        tables = _uncertainty_tables(head, families[head], targets, scale)
        if primary_mean is None:
            primary_mean = tables["_mean"][0]["mean"]
        for family, rows in tables.items():
            if family != "_mean":
                merged[family].extend(rows)
    for family, rows in merged.items():
        report.add_table(family, pd.DataFrame(rows))
    for row in merged.get("uncertainty", []):
        summary["uncertainty_means"].setdefault(row["head"], {})[row["uncertainty"]] = row["mean"]
    for row in merged.get("ensemble", []):
        summary.setdefault("ensemble_MAE", {})[row["head"]] = row["MAE"]
    for row in merged.get("coverage", []):
        summary.setdefault("coverage_2sigma", {})[f"{row['head']}/{row['uncertainty']}"] = row["coverage_2sigma"]

    if primary_mean is not None:
        strata = stratified_mae(primary_mean, targets, data.meta)
        for key, table in strata.items():
            report.add_table(f"stratified_{key}", table)
    report.summary = summary
    return report


def _evaluation_context(
    checkpoint_paths: Sequence[str | Path], manifest: str | Path, log_space: bool
) -> tuple[list[ModelCheckpoint], CorpusStore, float, float]:
    store = corpus_store(manifest)
    checkpoints = load_checkpoints(checkpoint_paths, store)
    corpus = store.read()
    train_y = Scale(log_space).values(np.array([ex.y for ex in corpus.train]))
    return checkpoints, store, float(train_y.std()), corpus.bayes_optimal_mae


def _split_arrays(store: CorpusStore, split: str) -> ArrayDataset:
    examples = store.read().split(split)
    if not examples:
        raise InvalidInputError(f"Split {split!r} is absent from the corpus at {store.root}")
    return to_arrays(examples)


def evaluate(
    checkpoint_paths: Sequence[str | Path],
    manifest: str | Path,
    splits: Sequence[str],
    out_dir: str | Path,
    log_space: bool = False,
) -> list[Path]:
    """Write one report per split."""
    checkpoints, store, sigma_y, bayes = _evaluation_context(checkpoint_paths, manifest, log_space)
    written = []
    for split in splits:
        if split not in EVAL_SPLITS:
            raise InvalidInputError(f"Unknown evaluation split {split!r}; expected one of {EVAL_SPLITS}")
        with run_context(corpus=store.root, split=split):
            data = _split_arrays(store, split)
            report = evaluate_arrays(checkpoints, data, split, sigma_y, bayes, log_space)
            report.provenance["split"] = split
            written.append(report.write(out_dir))
    return written


def perturbation_label(snr: float | None = None, proportion: float | None = None) -> str:
    if snr is not None:
        return f"snr-{snr:g}"
    if proportion is not None:
        return f"mask-{round(proportion * 100):d}"
    return "clean"


def run_ood(
    checkpoint_paths: Sequence[str | Path],
    manifest: str | Path,
    split: str,
    out_dir: str | Path,
    snrs: Sequence[float] = (),
    masks: Sequence[float] = (),
    log_space: bool = False,
) -> list[Path]:
    """Evaluate on clean and perturbed copies of ``split``.

    Writes one report per perturbation under ``out_dir/ood`` and an ``ood``
    summary table with one row per perturbation (clean first, then SNRs, then
    masks).
    """
    if not snrs and not masks:
        raise InvalidInputError("Give at least one --snr or --mask value")
    checkpoints, store, sigma_y, bayes = _evaluation_context(checkpoint_paths, manifest, log_space)
    data = _split_arrays(store, split)
    settings: list[tuple[float | None, float | None]] = [(None, None)]
    settings += [(s, None) for s in snrs] + [(None, m) for m in masks]

    rows = []
    written = []
    for snr, proportion in settings:
        label = perturbation_label(snr, proportion)
        x = data.x
        if snr is not None or proportion is not None:
            rng = np.random.default_rng(PERTURBATION_SEED)
            x = perturb_batch(data.x, rng, snr=snr, proportion=proportion)
        with run_context(corpus=store.root, split=split, perturbation=label):
            report = evaluate_arrays(
                checkpoints, data.with_x(x), f"ood/{label}", sigma_y, bayes, log_space
            )
            report.provenance.update({"split": split, "perturbation": label})
            written.append(report.write(out_dir))
        row: dict[str, Any] = {"perturbation": label}
        for key, value in report.summary["MAE"].items():
            row[f"{key} MAE"] = value["formatted"]
        for head, values in report.summary["uncertainty_means"].items():
            for unc, mean in values.items():
                row[f"{head} {unc}"] = mean
        rows.append(row)
        logger.info(f"OOD {label}: " + ", ".join(f"{k}={v}" for k, v in row.items() if k != "perturbation"))

    summary = EvalReport(
        name="ood",
        provenance={
            "config_hash": checkpoints[0].config_hash,
            "package_version": __version__,
            "split": split,
            "perturbation_seed": PERTURBATION_SEED,
        },
    )
    summary.add_table("ood", pd.DataFrame(rows))
    written.append(summary.write(out_dir))
    return written


__all__ = [
    "EVAL_SPLITS",
    "HEAD_CHOICES",
    "TrainJob",
    "check_head",
    "checkpoint_name",
    "corpus_store",
    "evaluate",
    "evaluate_arrays",
    "generate_corpus",
    "load_checkpoints",
    "perturbation_label",
    "resolve_checkpoint_paths",
    "run_ood",
    "run_train_job",
    "train_models",
]
