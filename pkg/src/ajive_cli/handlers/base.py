"""Output directory writers and the reader used by ``--verify``."""

import json
import os
from dataclasses import dataclass

import numpy as np
import polars as pl
from loguru import logger
from rich.progress import Progress

from ajive_cli.blocks import DataBlock, Manifest, ManifestEntry, MultiBlockDataset, export_block, write_manifest
from ajive_cli.decompose import InvariantReport, check_invariants
from ajive_cli.errors import AjiveError
from ajive_cli.formats.base import FormatHandler, IngestionOptions, LabeledMatrix
from ajive_cli.formats.csv import CsvFormat
from ajive_cli.pipeline import AnalysisResult, Diagnosis
from ajive_cli.synth.baselines import ConcatSvdResult, PlsResult
from ajive_cli.synth.coverage import CoverageResult
from ajive_cli.synth.truth import GroundTruth


def _component_labels(prefix: str, count: int) -> list[str]:
    return [f"{prefix}_{i + 1}" for i in range(count)]


def _labels(values: tuple[str, ...] | None) -> list[str] | None:
    return list(values) if values is not None else None


def _object_labels(dataset: MultiBlockDataset) -> list[str]:
    """Dataset object labels, or generated ones so that every output file has a header."""
    return _labels(dataset.object_labels) or _component_labels("object", dataset.n_objects)


@dataclass
class OutputDirectory:
    """Writes matrices, tables and JSON documents under one directory."""

    root: str
    format: FormatHandler = CsvFormat(",")

    def __post_init__(self) -> None:
        os.makedirs(self.root, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.root, name)

    def matrix(
        self,
        name: str,
        values: np.ndarray,
        row_labels: list[str] | None = None,
        column_labels: list[str] | None = None,
    ) -> str | None:
        if values.ndim != 2 or values.shape[1] == 0:
            logger.debug(f"Skipping {name}: no columns")
            return None
        path = self.path(f"{name}.{self.format.extension()}")
        self.format.write_matrix(LabeledMatrix(values=values, feature_labels=row_labels, object_labels=column_labels), path)
        return path

    def frame(self, name: str, frame: pl.DataFrame) -> str:
        path = self.path(f"{name}.csv")
        frame.write_csv(path)
        return path

    def json(self, name: str, document: dict) -> str:
        path = self.path(f"{name}.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump(document, f, indent=2)
        return path

    def subdirectory(self, name: str) -> "OutputDirectory":
        return OutputDirectory(self.path(name), self.format)


def write_scree(out: OutputDirectory, block: DataBlock, values: np.ndarray) -> str:
    frame = pl.DataFrame({"index": np.arange(1, values.size + 1), "singular_value": values})
    path = out.frame(f"scree_{block.name}", frame)
    logger.info(f"Wrote {path}")
    return path


def diagnosis_tag(diagnosis: Diagnosis) -> str:
    return "_".join(str(r) for r in diagnosis.ranks)


def write_diagnosis(out: OutputDirectory, diagnosis: Diagnosis, seed: int) -> str:
    """``diagnostics_<ranks>.json`` plus the sampled distributions as CSV."""
    tag = diagnosis_tag(diagnosis)
    if diagnosis.wedin is not None and diagnosis.random is not None:
        out.frame(f"wedin_{tag}", diagnosis.wedin.to_frame())
        out.frame(f"random_{tag}", diagnosis.random.to_frame())
    path = out.json(f"diagnostics_{tag}", {**diagnosis.to_dict(), "seed": seed})
    logger.info(f"Wrote {path}")
    return path


def write_decomposition(out: OutputDirectory, dataset: MultiBlockDataset, result: AnalysisResult) -> None:
    """Joint, individual and noise matrices with their score representations, then ``summary.json``."""
    decomposition = result.decomposition
    objects = _object_labels(dataset)
    joint_labels = _component_labels("joint", decomposition.joint_rank)

    with Progress() as progress:
        task = progress.add_task("Writing...", total=len(dataset) + 1)
        out.matrix("cns_scores", decomposition.cns_scores, row_labels=joint_labels, column_labels=objects)
        progress.update(task, advance=1)
        for block in dataset:
            part = decomposition[block.name]
            features = _labels(block.feature_labels)
            individual_labels = _component_labels("individual", part.individual_rank)
            out.matrix(f"joint_{block.name}", part.joint, row_labels=features, column_labels=objects)
            out.matrix(f"individual_{block.name}", part.individual, row_labels=features, column_labels=objects)
            out.matrix(f"noise_{block.name}", part.noise, row_labels=features, column_labels=objects)
            out.matrix(f"cns_loadings_{block.name}", part.cns_loadings, row_labels=features, column_labels=joint_labels)
            joint_parts = _component_labels("joint", part.joint_rank)
            out.matrix(f"bss_joint_scores_{block.name}", part.bss_joint_scores, row_labels=joint_parts, column_labels=objects)
            out.matrix(f"bss_joint_loadings_{block.name}", part.bss_joint_loadings, row_labels=features, column_labels=joint_parts)
            out.matrix(
                f"bss_individual_scores_{block.name}", part.bss_individual_scores, row_labels=individual_labels, column_labels=objects
            )
            out.matrix(
                f"bss_individual_loadings_{block.name}",
                part.bss_individual_loadings,
                row_labels=features,
                column_labels=individual_labels,
            )
            out.matrix(f"ins_scores_{block.name}", part.ins_scores, row_labels=individual_labels, column_labels=objects)
            progress.update(task, advance=1)

    out.json("summary", {**result.summary(), "blocks_order": dataset.names})
    write_diagnosis(out, result.diagnosis, result.settings.seed)
    logger.info(f"Wrote decomposition of {len(dataset)} blocks to {out.root}")


def verify_outputs(out_dir: str, dataset: MultiBlockDataset, tol: float = 1e-8) -> InvariantReport:
    """Reload a written decomposition and check its invariants against the input data."""
    summary_path = os.path.join(out_dir, "summary.json")
    if not os.path.exists(summary_path):
        raise AjiveError(f"No summary.json in {out_dir}")
    out = OutputDirectory(out_dir)
    options = IngestionOptions(header=True, label_column=None)

    def read(name: str) -> np.ndarray:
        return out.format.read_matrix(out.path(f"{name}.{out.format.extension()}"), options).values

    with open(summary_path, encoding="utf-8") as f:
        summary = json.load(f)
    joint_rank = summary["joint_rank"]
    basis = read("cns_scores").T if joint_rank else np.zeros((dataset.n_objects, 0))
    names = dataset.names

    def per_block(prefix: str, width: int | None = None) -> list[np.ndarray]:
        if width == 0:
            return [np.zeros((b.n_features, 0)) for b in dataset]
        return [read(f"{prefix}_{name}") for name in names]

    return check_invariants(
        names=names,
        data=[np.asarray(b.values) for b in dataset],
        joint=per_block("joint"),
        individual=per_block("individual"),
        noise=per_block("noise"),
        joint_basis=basis,
        cns_loadings=per_block("cns_loadings", joint_rank),
        tol=tol,
    )


def write_coverage(out: OutputDirectory, result: CoverageResult) -> list[str]:
    paths = [out.frame(f"coverage_{block}", result.table(block)) for block in result.blocks]
    paths.append(out.json("coverage", result.metadata()))
    for path in paths:
        logger.info(f"Wrote {path}")
    return paths


def write_toy(out: OutputDirectory, dataset: MultiBlockDataset, truth: GroundTruth, metadata: dict) -> str:
    """Data blocks with a manifest next to them, ground truth in ``truth/``."""
    entries = []
    for block in dataset:
        path = out.path(f"{block.name}.{out.format.extension()}")
        export_block(block, path, format=out.format.extension())
        entries.append(ManifestEntry(name=block.name, path=os.path.basename(path)))
    manifest_path = out.path("manifest.toml")
    write_manifest(Manifest(entries), manifest_path)

    truth_dir = out.subdirectory("truth")
    for part in truth.blocks:
        truth_dir.matrix(f"joint_{part.name}", part.joint)
        truth_dir.matrix(f"individual_{part.name}", part.individual)
        truth_dir.matrix(f"noise_{part.name}", part.noise)
    truth_dir.matrix("joint_scores", truth.joint_space.basis.T)
    for part, space in zip(truth.blocks, truth.individual_spaces):
        truth_dir.matrix(f"individual_scores_{part.name}", space.basis.T)
    truth_dir.json(
        "truth",
        {
            **metadata,
            "joint_rank": truth.joint_rank,
            "individual_ranks": dict(zip([b.name for b in truth.blocks], truth.individual_ranks)),
        },
    )
    logger.info(f"Wrote {len(dataset)} blocks and ground truth to {out.root}")
    return manifest_path


def write_concat_svd(out: OutputDirectory, dataset: MultiBlockDataset, result: ConcatSvdResult) -> None:
    objects = _object_labels(dataset)
    for block in dataset:
        out.matrix(
            f"concat_svd_{block.name}",
            result.approximations[block.name],
            row_labels=_labels(block.feature_labels),
            column_labels=objects,
        )
    out.frame("concat_svd_singular_values", pl.DataFrame({"singular_value": result.svd.singular_values}))
    logger.info(f"Wrote concatenated SVD approximations to {out.root}")


def write_pls(out: OutputDirectory, dataset: MultiBlockDataset, result: PlsResult) -> None:
    objects = _object_labels(dataset)
    first, second = dataset.blocks
    labels = _component_labels("pls", result.covariances.size)
    out.matrix(f"pls_weights_{first.name}", result.x_weights, row_labels=_labels(first.feature_labels), column_labels=labels)
    out.matrix(f"pls_weights_{second.name}", result.y_weights, row_labels=_labels(second.feature_labels), column_labels=labels)
    out.matrix(f"pls_scores_{first.name}", result.x_scores, row_labels=labels, column_labels=objects)
    out.matrix(f"pls_scores_{second.name}", result.y_scores, row_labels=labels, column_labels=objects)
    for block in dataset:
        out.matrix(
            f"pls_{block.name}", result.approximations[block.name], row_labels=_labels(block.feature_labels), column_labels=objects
        )
    out.frame("pls_covariances", pl.DataFrame({"component": labels, "covariance": result.covariances}))
    logger.info(f"Wrote {len(labels)} PLS components to {out.root}")
