"""Main CLI entry point using Typer."""

import sys
from dataclasses import asdict
from enum import StrEnum
from typing import Annotated, Optional

import numpy as np
import polars as pl
import typer
from loguru import logger
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import track

from ajive_cli import config
from ajive_cli.blocks import MultiBlockDataset, center_rows, load_dataset, load_manifest
from ajive_cli.config import DEFAULT_REPLICATES, OUTPUT_DIR_ENVVAR
from ajive_cli.errors import AjiveError
from ajive_cli.extract import parse_rank_specs, scree
from ajive_cli.formats.base import IngestionOptions
from ajive_cli.handlers.base import (
    OutputDirectory,
    verify_outputs,
    write_concat_svd,
    write_coverage,
    write_decomposition,
    write_diagnosis,
    write_pls,
    write_scree,
    write_toy,
)
from ajive_cli.handlers.cli_table import (
    analysis_summary,
    components_table,
    coverage_table,
    frame_table,
    rank_grid_table,
    scree_table,
)
from ajive_cli.pipeline import PipelineSettings, View, analyze as run_analysis, diagnose as run_diagnosis
from ajive_cli.synth.baselines import baseline_concat_svd, baseline_pls
from ajive_cli.synth.coverage import DEFAULT_LEVELS, coverage_simulation
from ajive_cli.synth.model import make_model
from ajive_cli.synth.toy import ToyConfig, make_toy

app = typer.Typer(
    help="Joint and individual variation explained for multi-block data.",
    no_args_is_help=True,
)

_FULL_TRIALS = 10_000


class ToyKind(StrEnum):
    TOY = "toy"
    MODEL = "model"


class BaselineMethod(StrEnum):
    CONCAT = "concat"
    PLS = "pls"


@app.callback()
def main_callback(
    log_level: Annotated[
        str,
        typer.Option("--log-level", help="Log level from {DEBUG, INFO, WARNING, ERROR, CRITICAL}"),
    ] = "INFO",
    jobs: Annotated[
        int,
        typer.Option("-j", "--jobs", help="Number of parallel workers for resampling and simulation"),
    ] = 1,
) -> None:
    """Global options for ajive CLI."""
    config.config.n_jobs = jobs
    logger.remove()
    logger.add(
        RichHandler(
            rich_tracebacks=True,
            tracebacks_show_locals=True,
            markup=True,
        ),
        format="{message}",
        level=log_level.upper(),
    )


BlocksArg = Annotated[Optional[list[str]], typer.Argument(help="One matrix file per block (features x objects)")]
ManifestOpt = Annotated[Optional[str], typer.Option("-m", "--manifest", help="TOML manifest listing the blocks")]
SeparatorOpt = Annotated[Optional[str], typer.Option("--separator", help="Field separator, sniffed if omitted")]
HeaderOpt = Annotated[
    Optional[bool], typer.Option("--header/--no-header", help="First row holds object labels; detected if omitted")
]
CenterOpt = Annotated[
    Optional[list[str]], typer.Option("--center", help="Row-center a block: NAME=yes or NAME=no (repeatable)")
]
OutOpt = Annotated[str, typer.Option("-o", "--out", envvar=OUTPUT_DIR_ENVVAR, help="Output directory")]
SeedOpt = Annotated[int, typer.Option("--seed", help="Root random seed")]
ReplicatesOpt = Annotated[int, typer.Option("--replicates", help="Resampling replicates per bound")]
WedinOpt = Annotated[float, typer.Option("--percentile-wedin", help="Percentile of the Wedin angle bound")]
RandomOpt = Annotated[float, typer.Option("--percentile-random", help="Percentile of the random-direction angle bound")]
ViewOpt = Annotated[View, typer.Option("--view", help="Segment on principal angles or squared singular values")]
ShuffleOpt = Annotated[
    bool, typer.Option("--shuffle-pairing", help="Combine block bound replicates in random order")
]

_DEFAULT_OUT = "ajive-output"
_YES = {"yes", "y", "true", "1"}
_NO = {"no", "n", "false", "0"}


def _parse_center(items: list[str] | None) -> dict[str, bool]:
    overrides = {}
    for item in items or []:
        name, sep, flag = item.partition("=")
        flag = flag.strip().lower() if sep else "yes"
        if flag not in _YES | _NO:
            raise AjiveError(f"Invalid --center value {item!r}; expected NAME=yes or NAME=no")
        overrides[name.strip()] = flag in _YES
    return overrides


def _load(
    blocks: list[str] | None,
    manifest: str | None,
    separator: str | None,
    header: bool | None,
    center: list[str] | None,
) -> MultiBlockDataset:
    options = IngestionOptions(separator=separator, header=header)
    overrides = _parse_center(center)
    if manifest is not None:
        if blocks:
            raise AjiveError("Give either block files or --manifest, not both")
        dataset = load_manifest(manifest, options=options, center_overrides=overrides)
    else:
        dataset = load_dataset(blocks or [], options=options)
        unknown = set(overrides) - set(dataset.names)
        if unknown:
            raise AjiveError(f"Centering given for unknown blocks: {', '.join(sorted(unknown))}")
        dataset = dataset.map(lambda b: center_rows(b) if overrides.get(b.name) else b)
    logger.info(f"Loaded {len(dataset)} blocks on {dataset.n_objects} objects: {', '.join(dataset.names)}")
    return dataset


def _component_frame(name: str, values: np.ndarray) -> pl.DataFrame:
    return pl.DataFrame({"component": np.arange(1, values.size + 1), name: values})


def _settings(
    replicates: int,
    seed: int,
    percentile_wedin: float,
    percentile_random: float,
    view: View,
    shuffle_pairing: bool,
) -> PipelineSettings:
    return PipelineSettings(
        n_replicates=replicates,
        seed=seed,
        wedin_percentile=percentile_wedin,
        random_percentile=percentile_random,
        view=view,
        shuffle_pairing=shuffle_pairing,
    )


@app.command("scree")
def scree_command(
    blocks: BlocksArg = None,
    manifest: ManifestOpt = None,
    separator: SeparatorOpt = None,
    header: HeaderOpt = None,
    center: CenterOpt = None,
    out: OutOpt = _DEFAULT_OUT,
    show: Annotated[int, typer.Option("--show", help="Singular values to print per block")] = 10,
) -> None:
    """Write the singular values of every block, for choosing initial ranks."""
    dataset = _load(blocks, manifest, separator, header, center)
    output = OutputDirectory(out)
    console = Console(force_terminal=True)
    for block in dataset:
        values = scree(block)
        write_scree(output, block, values)
        console.print(scree_table(block.name, values, limit=show))


@app.command("diagnose")
def diagnose_command(
    ranks: Annotated[list[str], typer.Option("-r", "--ranks", help="Initial ranks such as 2,3 (repeat for a grid)")],
    blocks: BlocksArg = None,
    manifest: ManifestOpt = None,
    separator: SeparatorOpt = None,
    header: HeaderOpt = None,
    center: CenterOpt = None,
    out: OutOpt = _DEFAULT_OUT,
    replicates: ReplicatesOpt = DEFAULT_REPLICATES,
    seed: SeedOpt = 0,
    percentile_wedin: WedinOpt = 95.0,
    percentile_random: RandomOpt = 5.0,
    view: ViewOpt = View.AUTO,
    shuffle_pairing: ShuffleOpt = False,
) -> None:
    """Run signal extraction and joint segmentation for one or more rank choices."""
    dataset = _load(blocks, manifest, separator, header, center)
    settings = _settings(replicates, seed, percentile_wedin, percentile_random, view, shuffle_pairing)
    grid = [parse_rank_specs(r) for r in ranks]
    output = OutputDirectory(out)
    diagnoses = []
    for specs in track(grid, description="Diagnosing...", disable=len(grid) == 1):
        diagnosis = run_diagnosis(dataset, specs, settings)
        write_diagnosis(output, diagnosis, seed)
        diagnoses.append(diagnosis)

    console = Console(force_terminal=True)
    for diagnosis in diagnoses:
        console.print(components_table(diagnosis))
    console.print(rank_grid_table(diagnoses))


@app.command("analyze")
def analyze_command(
    ranks: Annotated[str, typer.Option("-r", "--ranks", help="Initial ranks such as 2,3 or thresholds such as t=40")],
    blocks: BlocksArg = None,
    manifest: ManifestOpt = None,
    separator: SeparatorOpt = None,
    header: HeaderOpt = None,
    center: CenterOpt = None,
    out: OutOpt = _DEFAULT_OUT,
    replicates: ReplicatesOpt = DEFAULT_REPLICATES,
    seed: SeedOpt = 0,
    percentile_wedin: WedinOpt = 95.0,
    percentile_random: RandomOpt = 5.0,
    view: ViewOpt = View.AUTO,
    shuffle_pairing: ShuffleOpt = False,
    verify: Annotated[bool, typer.Option("--verify", help="Reload the written outputs and check the decomposition")] = False,
) -> None:
    """Full decomposition into joint, individual and noise matrices."""
    dataset = _load(blocks, manifest, separator, header, center)
    settings = _settings(replicates, seed, percentile_wedin, percentile_random, view, shuffle_pairing)
    result = run_analysis(dataset, parse_rank_specs(ranks), settings)
    output = OutputDirectory(out)
    write_decomposition(output, dataset, result)

    console = Console(force_terminal=True)
    console.print(components_table(result.diagnosis))
    console.print(analysis_summary(result))

    if verify:
        report = verify_outputs(out, dataset)
        if not report.ok:
            for violation in report.violations:
                logger.error(violation)
            raise AjiveError(f"Verification of {out} failed with {len(report.violations)} violations")
        logger.info(f"Verified decomposition in {out}")


@app.command("toy")
def toy_command(
    out: OutOpt = _DEFAULT_OUT,
    kind: Annotated[ToyKind, typer.Option("--kind", help="Fixed toy example or a random joint/individual model")] = ToyKind.TOY,
    seed: SeedOpt = 0,
    angle: Annotated[float, typer.Option("--angle", help="Angle between the toy individual score spaces (degrees)")] = 45.0,
    objects: Annotated[int, typer.Option("-n", "--objects", help="Number of objects")] = 100,
    joint_rank: Annotated[int, typer.Option("--joint-rank", help="Joint rank of a random model")] = 1,
    individual_ranks: Annotated[str, typer.Option("--individual-ranks", help="Individual ranks of a random model")] = "1,2",
    features: Annotated[Optional[str], typer.Option("--features", help="Features per block of a random model")] = None,
    noise: Annotated[float, typer.Option("--noise", help="Noise standard deviation of a random model")] = 0.0,
) -> None:
    """Generate a synthetic dataset together with its true decomposition."""
    output = OutputDirectory(out)
    if kind == ToyKind.TOY:
        toy_config = ToyConfig(n_objects=objects, individual_angle=angle)
        dataset, truth = make_toy(toy_config, seed)
        metadata = {"kind": str(kind), "seed": seed, "config": asdict(toy_config)}
    else:
        ranks = [int(r) for r in individual_ranks.split(",") if r.strip()]
        counts = [int(d) for d in features.split(",") if d.strip()] if features else None
        dataset, truth = make_model(objects, joint_rank, ranks, features=counts, noise_scale=noise, rng=seed)
        metadata = {"kind": str(kind), "seed": seed, "noise_scale": noise}
    manifest = write_toy(output, dataset, truth, metadata)
    logger.info(f"Manifest: {manifest}")


@app.command("simulate")
def simulate_command(
    out: OutOpt = _DEFAULT_OUT,
    trials: Annotated[int, typer.Option("--trials", help="Number of toy noise realizations")] = 500,
    full: Annotated[bool, typer.Option("--full", help=f"Run {_FULL_TRIALS} trials")] = False,
    replicates: ReplicatesOpt = DEFAULT_REPLICATES,
    seed: SeedOpt = 0,
    levels: Annotated[str, typer.Option("--levels", help="Nominal coverage levels in percent")] = ",".join(
        f"{p:g}" for p in DEFAULT_LEVELS
    ),
) -> None:
    """Estimate how often the resampled Wedin bound covers the true angle on the toy data."""
    result = coverage_simulation(
        _FULL_TRIALS if full else trials,
        percentiles=[float(p) for p in levels.split(",") if p.strip()],
        seed=seed,
        n_replicates=replicates,
        show_progress=True,
    )
    write_coverage(OutputDirectory(out), result)
    console = Console(force_terminal=True)
    for block in result.blocks:
        console.print(coverage_table(result.table(block), block))


@app.command("baseline")
def baseline_command(
    method: Annotated[BaselineMethod, typer.Argument(help="Concatenated SVD or partial least squares")],
    blocks: BlocksArg = None,
    manifest: ManifestOpt = None,
    separator: SeparatorOpt = None,
    header: HeaderOpt = None,
    center: CenterOpt = None,
    out: OutOpt = _DEFAULT_OUT,
    rank: Annotated[int, typer.Option("--rank", help="Rank of the concatenated SVD")] = 2,
    components: Annotated[int, typer.Option("--components", help="Number of PLS direction pairs")] = 3,
    pls_center: Annotated[bool, typer.Option("--pls-center/--no-pls-center", help="Center rows before PLS")] = True,
) -> None:
    """Decompose with a method that does not separate joint from individual variation."""
    dataset = _load(blocks, manifest, separator, header, center)
    output = OutputDirectory(out)
    console = Console(force_terminal=True)
    if method == BaselineMethod.CONCAT:
        concat = baseline_concat_svd(dataset, rank)
        write_concat_svd(output, dataset, concat)
        console.print(frame_table(_component_frame("singular_value", concat.svd.singular_values)))
    else:
        pls = baseline_pls(dataset, components, center=pls_center)
        write_pls(output, dataset, pls)
        console.print(frame_table(_component_frame("covariance", pls.covariances)))


def main() -> None:
    try:
        app()
    except AjiveError as e:
        logger.error(str(e))
        sys.exit(1)


if __name__ == "__main__":
    main()
