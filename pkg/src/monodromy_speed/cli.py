import asyncio
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator
from pydantic_settings import BaseSettings, CliApp, CliImplicitFlag, CliSubCommand, SettingsConfigDict

from monodromy_speed.api.exceptions import CellFileError, MethodFailedError
from monodromy_speed.api.results import ComputeRow, ConvergenceRow, Method, ResultRow, SweepRow, write_rows
from monodromy_speed.api.unit_cell import UnitCell, load_cell
from monodromy_speed.config import InverseRule, SolverConfig
from monodromy_speed.integrations.presets import EPOXY, STEEL
from monodromy_speed.runner import SpeedRunner, Truncations

logger = logging.getLogger(__name__)

PRESET_PHASES = {"steel": STEEL, "epoxy": EPOXY}


def summary_line(row: ComputeRow) -> str:
    """One human-readable line per compute or compare row."""
    label = row.method if row.d is None else f"{row.method} d={row.d}"
    if row.error:
        return f"{label}: failed ({row.error})"
    planar = (row.c_kappa1, row.c_kappa2)
    speeds = planar if row.c_kappa1 is not None else (row.c_alpha1, row.c_alpha2, row.c_alpha3)
    text = ", ".join(f"{c:.2f}" for c in speeds if c is not None)
    gap = "" if row.relative_gap is None else f", gap {row.relative_gap:.3%}"
    return f"{label}: c = {text} m/s{gap}"


def parse_f_range(value: str) -> list[float]:
    """Volume fractions from ``start:stop:steps``, endpoints included."""
    try:
        start, stop, steps = value.split(":")
        first, last, count = float(start), float(stop), int(steps)
    except ValueError as e:
        message = f"f-range must look like start:stop:steps, got {value!r}"
        raise ValueError(message) from e
    if count < 1 or not (0.0 <= first <= 1.0 and 0.0 <= last <= 1.0):
        message = f"f-range needs fractions in [0, 1] and at least one step, got {value!r}"
        raise ValueError(message)
    if count == 1:
        return [first]
    return [float(f) for f in np.linspace(first, last, count)]


class RunOptions(BaseModel):
    """Options shared by every subcommand."""

    model_config = ConfigDict(populate_by_name=True)

    methods: list[Method] = Field(default=[Method.MM], description="Methods to run, e.g. mm,pwe,estimate,oracle")
    n_values: list[int] = Field(default=[8], alias="N", description="Half-widths N for mm")
    g_values: list[PositiveInt] = Field(default=[16], alias="G", description="Plane-wave truncations G for pwe")
    grid: list[PositiveInt] = Field(default=[256], description="Grid sizes n for the finite-difference oracle")
    n2: int = Field(default=2, description="Transverse half-width N2 for elastic3d", ge=0)
    n3: int = Field(default=2, description="Transverse half-width N3 for elastic3d", ge=0)
    axis: int = Field(default=1, description="Propagation axis for elastic3d", ge=1, le=3)
    inverse_rule: InverseRule = Field(default=InverseRule.LAURENT, description="Truncated inverse-modulus rule")
    workers: PositiveInt = Field(default=1, description="Evaluations run at the same time")
    out: Path | None = Field(default=None, description="CSV output path, standard output when omitted")
    log_level: str = Field(default="INFO", description="Logging level")

    @field_validator("methods")
    @classmethod
    def validate_methods(cls, value: list[Method]) -> list[Method]:
        if not value:
            message = "select at least one method"
            raise ValueError(message)
        return value

    def runner(self) -> SpeedRunner:
        truncations = Truncations(
            n_values=tuple(self.n_values),
            g_values=tuple(self.g_values),
            grids=tuple(self.grid),
            transverse=(self.n2, self.n3),
            axis=self.axis,
        )
        return SpeedRunner(
            config=SolverConfig(inverse_rule=self.inverse_rule), truncations=truncations, workers=self.workers
        )

    def emit(self, rows: Sequence[ResultRow], row_type: type[ResultRow]) -> None:
        if self.out is None:
            write_rows(rows, row_type, sys.stdout)
            return
        self.out.parent.mkdir(parents=True, exist_ok=True)
        with self.out.open("w", newline="", encoding="utf-8") as handle:
            write_rows(rows, row_type, handle)
        logger.info(f'Wrote {len(rows)} rows to "{self.out}"')

    def configure_logging(self) -> None:
        logging.basicConfig(level=self.log_level.upper(), format="%(levelname)s %(name)s: %(message)s", force=True)


class CellOptions(RunOptions):
    cell: Path = Field(description="TOML cell file")

    def load(self) -> UnitCell:
        logger.info(f'Loading cell from "{self.cell}"')
        return load_cell(self.cell)


class Compute(CellOptions):
    def print_summary(self, rows: Sequence[ComputeRow]) -> None:
        """Print one line per row; to standard error when the CSV itself goes to standard output."""
        stream = sys.stdout if self.out is not None else sys.stderr
        for row in rows:
            print(summary_line(row), file=stream)

    async def run(self) -> list[ComputeRow]:
        async with self.runner() as runner:
            return await runner.compute(self.load(), self.methods)

    def cli_cmd(self) -> None:
        self.configure_logging()
        try:
            rows = asyncio.run(self.run())
        except CellFileError as e:
            logger.error(e.message)
            raise SystemExit(1) from e
        self.print_summary(rows)
        self.emit(rows, ComputeRow)
        failed = [row for row in rows if row.error]
        if failed:
            logger.error(f"{len(failed)} of {len(rows)} computations failed")
            raise SystemExit(1)


class Compare(Compute):
    methods: list[Method] = Field(
        default=[Method.MM, Method.PWE, Method.ESTIMATE], description="Methods to compare, e.g. mm,pwe,oracle"
    )

    async def run(self) -> list[ComputeRow]:
        async with self.runner() as runner:
            return await runner.compare(self.load(), self.methods)


class Sweep(RunOptions):
    methods: list[Method] = Field(default=[Method.MM, Method.ESTIMATE], description="Methods to sweep")
    f_range: str = Field(default="0:1:21", description="Volume fractions as start:stop:steps")
    matrix: str = Field(default="epoxy", description="Matrix phase preset (steel or epoxy)")
    rod: str = Field(default="steel", description="Rod phase preset (steel or epoxy)")
    swap_phases: CliImplicitFlag[bool] = Field(default=False, description="Exchange the matrix and rod phases")

    @field_validator("matrix", "rod")
    @classmethod
    def validate_preset(cls, value: str) -> str:
        if value not in PRESET_PHASES:
            message = f"unknown phase preset {value!r}, choose from {sorted(PRESET_PHASES)}"
            raise ValueError(message)
        return value

    @field_validator("f_range")
    @classmethod
    def validate_f_range(cls, value: str) -> str:
        parse_f_range(value)
        return value

    async def run(self) -> list[SweepRow]:
        matrix, rod = PRESET_PHASES[self.matrix], PRESET_PHASES[self.rod]
        if self.swap_phases:
            matrix, rod = rod, matrix
        async with self.runner() as runner:
            return await runner.sweep(matrix, rod, parse_f_range(self.f_range), self.methods)

    def cli_cmd(self) -> None:
        self.configure_logging()
        rows = asyncio.run(self.run())
        self.emit(rows, SweepRow)
        failed = sum(1 for row in rows if row.error)
        if failed:
            logger.warning(f"{failed} of {len(rows)} sweep points failed")


class Convergence(CellOptions):
    methods: list[Method] = Field(default=[Method.MM, Method.PWE], description="Methods to study (mm, pwe, oracle)")
    n_values: list[int] = Field(default=[1, 2, 4, 8], alias="N", description="Half-widths N for mm")
    g_values: list[PositiveInt] = Field(default=[4, 8, 16], alias="G", description="Plane-wave truncations G for pwe")

    async def run(self) -> list[ConvergenceRow]:
        async with self.runner() as runner:
            return await runner.convergence(self.load(), self.methods)

    def cli_cmd(self) -> None:
        self.configure_logging()
        try:
            rows = asyncio.run(self.run())
        except (CellFileError, MethodFailedError) as e:
            logger.error(e.message)
            raise SystemExit(1) from e
        self.emit(rows, ConvergenceRow)


class MonodromySpeed(BaseSettings):
    """Quasistatic effective speeds of phononic crystals."""

    model_config = SettingsConfigDict(cli_kebab_case=True)
    compute: CliSubCommand[Compute] = Field(description="Run the selected methods on a cell")
    sweep: CliSubCommand[Sweep] = Field(description="Sweep the square-rod volume fraction")
    convergence: CliSubCommand[Convergence] = Field(description="Measure error against truncation")
    compare: CliSubCommand[Compare] = Field(description="Run methods and report gaps to a reference")

    def cli_cmd(self) -> None:
        CliApp.run_subcommand(self)


def cli() -> None:
    if len(sys.argv) == 1:
        logger.error("No subcommand provided, showing help")
        args = ["--help"]
    else:
        args = sys.argv[1:]

    CliApp.run(MonodromySpeed, cli_args=args)
