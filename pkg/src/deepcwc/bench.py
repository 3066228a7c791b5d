"""Benchmark harness: fit, evaluate, dump residuals, and time runs.

Reports are plain data.  Accuracy is always recomputed from the confusion
matrix, the improvement of a fused run is the rate fused / max(single-view
accuracies), and every report embeds the full configuration needed to
regenerate it from the input files.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import crc, fusion
from .dataset import LabeledDataset, PairedDataset
from .errors import DimensionMismatch
from .linalg import DEFAULT_LAMBDA

DUMP_COLUMNS = ("query_id", "true_class", "class_id", "res_img", "res_deep", "res_fused")
DEFAULT_DUMP_CAP = 100


@dataclass(frozen=True)
class TimingRecord:
    """Wall-clock seconds of one fit + one full pass over the test queries."""

    fit_seconds: float
    query_seconds: float
    n_train: int
    n_test: int

    @property
    def total_seconds(self) -> float:
        return self.fit_seconds + self.query_seconds

    @property
    def seconds_per_query(self) -> float:
        return self.query_seconds / self.n_test

    @property
    def combined_seconds_per_sample(self) -> float:
        # Benchmark-style speed figure: total time over the whole dataset
        # size (train + test), conflating fit and query work on purpose.
        return self.total_seconds / (self.n_train + self.n_test)


@dataclass(frozen=True)
class EvalReport:
    """Outcome of one evaluation run (single view or fused)."""

    kind: str  # "single" or "fused"
    confusion: np.ndarray  # C x C counts, rows = true class
    lambda_image: float
    lambda_deep: float | None
    residual_variant: str
    timing: TimingRecord
    config_echo: dict
    accuracy_image: float | None = None
    accuracy_deep: float | None = None
    additive_fusion: bool = False

    @property
    def num_classes(self) -> int:
        return self.confusion.shape[0]

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    @property
    def per_class_accuracy(self) -> np.ndarray:
        totals = self.confusion.sum(axis=1)
        return np.diag(self.confusion) / totals

    @property
    def improvement(self) -> float | None:
        """Rate of the fused accuracy over the better single-view accuracy."""
        if self.kind != "fused":
            return None
        best = max(self.accuracy_image, self.accuracy_deep)
        if best == 0:
            return None
        return self.accuracy / best


def _fit_timed(train: LabeledDataset, lam: float, variant: str, view: str):
    start = time.perf_counter()
    model = crc.fit(train, lam=lam, residual_variant=variant, view=view)
    return model, time.perf_counter() - start


def eval_single(
    train: LabeledDataset,
    test: LabeledDataset,
    lam: float = DEFAULT_LAMBDA,
    residual_variant: str = "plain",
    view: str = "image",
    config: dict | None = None,
) -> EvalReport:
    """Fit on train, classify every test sample by minimum residual."""
    if train.d != test.d:
        raise DimensionMismatch(
            f"train has d={train.d} but test has d={test.d}"
        )
    model, fit_seconds = _fit_timed(train, lam, residual_variant, view)
    num_classes = model.num_classes
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    start = time.perf_counter()
    for i in range(test.n):
        decision = fusion.classify_single(crc.class_residuals(model, test.features.data[:, i]))
        confusion[test.labels[i], decision.predicted_class] += 1
    query_seconds = time.perf_counter() - start
    timing = TimingRecord(fit_seconds, query_seconds, train.n, test.n)
    echo = {
        "kind": "single",
        "view": view,
        "lambda": lam,
        "residual_variant": residual_variant,
        "n_train": train.n,
        "n_test": test.n,
        "num_classes": num_classes,
        "provenance": train.provenance,
    }
    echo.update(config or {})
    return EvalReport(
        kind="single",
        confusion=confusion,
        lambda_image=lam,
        lambda_deep=None,
        residual_variant=residual_variant,
        timing=timing,
        config_echo=echo,
    )


def _residual_pairs(model_image, model_deep, test: PairedDataset):
    """Yield (query index, true class, image residuals, deep residuals)."""
    for i in range(test.n):
        res_img = crc.class_residuals(model_image, test.image.features.data[:, i])
        res_deep = crc.class_residuals(model_deep, test.deep.features.data[:, i])
        yield i, int(test.labels[i]), res_img, res_deep


def eval_fused(
    train: PairedDataset,
    test: PairedDataset,
    lambda_image: float = DEFAULT_LAMBDA,
    lambda_deep: float | None = None,
    residual_variant: str = "plain",
    additive_fusion: bool = False,
    config: dict | None = None,
) -> EvalReport:
    """Two independent fits, per-query residual pair, fuse, classify.

    The report carries both single-view accuracies next to the fused one,
    plus the improvement rate fused / max(single).
    """
    if train.image.d != test.image.d or train.deep.d != test.deep.d:
        raise DimensionMismatch("train/test feature dimensions differ in some view")
    if lambda_deep is None:
        lambda_deep = lambda_image
    combine = fusion.fuse_additive if additive_fusion else fusion.fuse

    model_image, fit_img_s = _fit_timed(train.image, lambda_image, residual_variant, "image")
    model_deep, fit_deep_s = _fit_timed(train.deep, lambda_deep, residual_variant, "deep")
    num_classes = model_image.num_classes

    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    hits_image = 0
    hits_deep = 0
    start = time.perf_counter()
    for i, truth, res_img, res_deep in _residual_pairs(model_image, model_deep, test):
        fused = combine(res_img, res_deep)
        confusion[truth, fusion.classify(fused).predicted_class] += 1
        hits_image += fusion.classify_single(res_img).predicted_class == truth
        hits_deep += fusion.classify_single(res_deep).predicted_class == truth
    query_seconds = time.perf_counter() - start

    timing = TimingRecord(fit_img_s + fit_deep_s, query_seconds, train.n, test.n)
    echo = {
        "kind": "fused",
        "lambda": lambda_image,
        "lambda_deep": lambda_deep,
        "residual_variant": residual_variant,
        "additive_fusion": additive_fusion,
        "n_train": train.n,
        "n_test": test.n,
        "num_classes": num_classes,
        "provenance_image": train.image.provenance,
        "provenance_deep": train.deep.provenance,
    }
    echo.update(config or {})
    return EvalReport(
        kind="fused",
        confusion=confusion,
        lambda_image=lambda_image,
        lambda_deep=lambda_deep,
        residual_variant=residual_variant,
        timing=timing,
        config_echo=echo,
        accuracy_image=hits_image / test.n,
        accuracy_deep=hits_deep / test.n,
        additive_fusion=additive_fusion,
    )


def dump_residuals(
    test: PairedDataset,
    model_image,
    model_deep,
    out_path,
    max_queries: int = DEFAULT_DUMP_CAP,
) -> np.ndarray:
    """Write the per-query, per-class residual table as CSV.

    One row per (query, class): query_id, true_class, class_id, res_img,
    res_deep, res_fused (the element-wise product).  Queries beyond the cap
    are dropped; rows are ordered by query index, then class id.  Returns
    the table as a float array in the same column order.
    """
    rows = []
    for i, truth, res_img, res_deep in _residual_pairs(model_image, model_deep, test):
        if i >= max_queries:
            break
        fused = fusion.fuse(res_img, res_deep)
        for c in range(len(res_img)):
            rows.append(
                (i, truth, c, res_img.values[c], res_deep.values[c], fused.values[c])
            )
    table = np.array(rows, dtype=np.float64)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(DUMP_COLUMNS)
        for row in rows:
            writer.writerow(
                [int(row[0]), int(row[1]), int(row[2]),
                 f"{row[3]:.17g}", f"{row[4]:.17g}", f"{row[5]:.17g}"]
            )
    return table


def read_residual_dump(path) -> np.ndarray:
    """Read a residual dump back into the float table dump_residuals returns."""
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != DUMP_COLUMNS:
            raise ValueError(f"{path}: unexpected residual dump header {header}")
        return np.array([[float(x) for x in row] for row in reader])


@dataclass(frozen=True)
class TimingReport:
    """Repeated end-to-end timings of one fused evaluation."""

    records: tuple
    accuracy: float
    lambda_image: float
    lambda_deep: float
    residual_variant: str
    config_echo: dict = field(default_factory=dict)

    @property
    def reps(self) -> int:
        return len(self.records)

    @property
    def mean_total_seconds(self) -> float:
        return float(np.mean([r.total_seconds for r in self.records]))

    @property
    def best_total_seconds(self) -> float:
        return float(np.min([r.total_seconds for r in self.records]))

    @property
    def mean_seconds_per_query(self) -> float:
        return float(np.mean([r.seconds_per_query for r in self.records]))

    @property
    def mean_combined_seconds_per_sample(self) -> float:
        return float(np.mean([r.combined_seconds_per_sample for r in self.records]))


def time_runs(
    train: PairedDataset,
    test: PairedDataset,
    reps: int = 1,
    lambda_image: float = DEFAULT_LAMBDA,
    lambda_deep: float | None = None,
    residual_variant: str = "plain",
    config: dict | None = None,
) -> TimingReport:
    """Run the fused evaluation ``reps`` times and collect timings.

    Fit and query time are reported separately, plus the combined
    total/(n_train+n_test) speed figure.  Predictions must be identical
    across reps; only the clock may differ.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    records = []
    confusions = []
    report = None
    for _ in range(reps):
        report = eval_fused(
            train,
            test,
            lambda_image=lambda_image,
            lambda_deep=lambda_deep,
            residual_variant=residual_variant,
            config=config,
        )
        records.append(report.timing)
        confusions.append(report.confusion)
    for other in confusions[1:]:
        if not np.array_equal(confusions[0], other):
            raise AssertionError("identical inputs produced different predictions")
    return TimingReport(
        records=tuple(records),
        accuracy=report.accuracy,
        lambda_image=report.lambda_image,
        lambda_deep=report.lambda_deep,
        residual_variant=residual_variant,
        config_echo=report.config_echo,
    )


def _csv_block(name: str, header: list, rows) -> str:
    buf = io.StringIO()
    buf.write(f"[{name}]\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def render_report(report: EvalReport) -> str:
    """Render line-oriented key: value text plus machine-readable CSV blocks."""
    lines = [
        f"kind: {report.kind}",
        f"accuracy: {report.accuracy:.6f}",
    ]
    if report.kind == "fused":
        lines.append(f"accuracy_image: {report.accuracy_image:.6f}")
        lines.append(f"accuracy_deep: {report.accuracy_deep:.6f}")
        improvement = report.improvement
        if improvement is not None:
            lines.append(f"improvement: {improvement:.6f}")
            lines.append(f"improvement_pct: {100.0 * (improvement - 1.0):.2f}")
        lines.append(f"additive_fusion: {report.additive_fusion}")
    lines.append(f"lambda: {report.lambda_image:g}")
    if report.lambda_deep is not None:
        lines.append(f"lambda_deep: {report.lambda_deep:g}")
    lines.append(f"residual_variant: {report.residual_variant}")
    lines.append(f"num_classes: {report.num_classes}")
    t = report.timing
    lines.append(f"fit_seconds: {t.fit_seconds:.6f}")
    lines.append(f"query_seconds: {t.query_seconds:.6f}")
    lines.append(f"seconds_per_query: {t.seconds_per_query:.6g}")
    lines.append(f"combined_seconds_per_sample: {t.combined_seconds_per_sample:.6g}")
    lines.append(f"config: {json.dumps(report.config_echo, sort_keys=True)}")

    acc_block = _csv_block(
        "per_class_accuracy",
        ["class_id", "accuracy", "support"],
        [
            [c, f"{acc:.6f}", int(report.confusion[c].sum())]
            for c, acc in enumerate(report.per_class_accuracy)
        ],
    )
    conf_block = _csv_block(
        "confusion",
        ["true_class"] + [f"pred_{c}" for c in range(report.num_classes)],
        [[c] + list(map(int, report.confusion[c])) for c in range(report.num_classes)],
    )
    return "\n".join(lines) + "\n\n" + acc_block + "\n" + conf_block


def render_timing(timing: TimingReport) -> str:
    lines = [
        "kind: timing",
        f"reps: {timing.reps}",
        f"accuracy: {timing.accuracy:.6f}",
        f"lambda: {timing.lambda_image:g}",
        f"lambda_deep: {timing.lambda_deep:g}",
        f"residual_variant: {timing.residual_variant}",
        f"mean_total_seconds: {timing.mean_total_seconds:.6f}",
        f"best_total_seconds: {timing.best_total_seconds:.6f}",
        f"mean_seconds_per_query: {timing.mean_seconds_per_query:.6g}",
        f"mean_combined_seconds_per_sample: {timing.mean_combined_seconds_per_sample:.6g}",
        f"config: {json.dumps(timing.config_echo, sort_keys=True)}",
    ]
    block = _csv_block(
        "reps",
        ["rep", "fit_seconds", "query_seconds", "total_seconds", "seconds_per_query"],
        [
            [
                i,
                f"{r.fit_seconds:.6f}",
                f"{r.query_seconds:.6f}",
                f"{r.total_seconds:.6f}",
                f"{r.seconds_per_query:.6g}",
            ]
            for i, r in enumerate(timing.records)
        ],
    )
    return "\n".join(lines) + "\n\n" + block


def write_report(text: str, path) -> None:
    Path(path).write_text(text, encoding="utf-8")
