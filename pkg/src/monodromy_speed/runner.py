"""
This module contains the speed runner, which dispatches solver methods over cells and
turns their results into CSV rows for single computations, comparisons, volume-fraction
sweeps and convergence studies. Evaluations run in worker threads, bounded by a semaphore.
"""

import asyncio
import logging
import math
import time
from collections.abc import Sequence
from typing import Any, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, PrivateAttr

from monodromy_speed.api.exceptions import MethodFailedError
from monodromy_speed.api.materials import MaterialPhase
from monodromy_speed.api.results import (
    ComputeRow,
    ConvergenceRow,
    EffectiveTensor,
    ElasticSpeeds,
    Method,
    SweepRow,
)
from monodromy_speed.api.unit_cell import UnitCell
from monodromy_speed.config import SolverConfig
from monodromy_speed.integrations.presets import square_rod_cell
from monodromy_speed.solvers.elastic3d import principal_speeds_3d
from monodromy_speed.solvers.fd_oracle import oracle_effective_tensor, richardson_speed
from monodromy_speed.solvers.monodromy import closed_form_estimate, effective_tensor, principal_speed
from monodromy_speed.solvers.pwe import pwe_effective_tensor

logger = logging.getLogger(__name__)

Result = EffectiveTensor | ElasticSpeeds


class Truncations(BaseModel):
    """Truncation values per method family."""

    model_config = ConfigDict(frozen=True)

    n_values: tuple[int, ...] = Field(default=(8,), description="Half-widths N for mm")
    g_values: tuple[int, ...] = Field(default=(16,), description="Plane-wave truncations G for pwe")
    grids: tuple[int, ...] = Field(default=(256,), description="Grid sizes n for oracle")
    transverse: tuple[int, int] = Field(default=(2, 2), description="(N₂, N₃) for elastic3d")
    axis: int = Field(default=1, description="Propagation axis for elastic3d", ge=1, le=3)

    def for_method(self, method: Method) -> tuple[int, ...]:
        """The truncations a method is run at; estimate and elastic3d have a single one."""
        match method:
            case Method.MM:
                return self.n_values
            case Method.PWE:
                return self.g_values
            case Method.ORACLE:
                return self.grids
            case Method.ELASTIC3D:
                return (self.transverse[0],)
            case _:
                return (0,)


class Evaluation(BaseModel):
    """The outcome of one method run: a result or an error, and the wall time."""

    model_config = ConfigDict(frozen=True)

    method: Method
    truncation: int
    result: Result | None = None
    error: str | None = None
    wall_time_ms: float

    @property
    def d(self) -> int | None:
        if self.method in (Method.MM, Method.PWE):
            return 2 * self.truncation + 1
        return None

    @property
    def speed(self) -> float:
        """Speed along the first axis, the fastest one for elastic3d."""
        if self.result is None:
            raise MethodFailedError(str(self.method), self.error or "no result")
        if isinstance(self.result, ElasticSpeeds):
            return self.result.speeds[0]
        return self.result.c_kappa1


def evaluate(
    cell: UnitCell, method: Method, truncation: int, truncations: Truncations, config: SolverConfig
) -> Result:
    """Run one method on a cell.

    Raises:
        MethodFailedError: Wrapping any solver error, tagged with the method.
    """
    try:
        match method:
            case Method.MM:
                return effective_tensor(cell, truncation, config)
            case Method.PWE:
                return pwe_effective_tensor(cell, truncation)
            case Method.ESTIMATE:
                return closed_form_estimate(cell)
            case Method.ORACLE:
                return oracle_effective_tensor(cell, truncation, config)
            case Method.ELASTIC3D:
                n2, n3 = truncations.transverse
                return principal_speeds_3d(cell, n2, n3, truncations.axis, config)
    except MethodFailedError:
        raise
    except (ValueError, ArithmeticError, RuntimeError) as e:
        raise MethodFailedError(str(method), str(e)) from e
    raise MethodFailedError(str(method), "unknown method")


def compute_row(evaluation: Evaluation) -> ComputeRow:
    """The compute/compare CSV row of an evaluation."""
    base: dict[str, Any] = {
        "method": str(evaluation.method),
        "truncation": evaluation.truncation,
        "d": evaluation.d,
        "wall_time_ms": evaluation.wall_time_ms,
    }
    result = evaluation.result
    if result is None:
        return ComputeRow(**base, error=evaluation.error)
    if isinstance(result, ElasticSpeeds):
        low, high = result.stiffness_bounds
        c1, c2, c3 = result.speeds
        return ComputeRow(
            **base,
            c_alpha1=c1,
            c_alpha2=c2,
            c_alpha3=c3,
            rho_mean=result.rho_mean,
            c_reuss=math.sqrt(low / result.rho_mean),
            c_voigt=math.sqrt(high / result.rho_mean),
        )
    try:
        speeds = {"c_kappa1": result.c_kappa1, "c_kappa2": result.c_kappa2}
    except ArithmeticError as e:
        return ComputeRow(**base, m11=result.m11, m22=result.m22, m12=result.m12, error=str(e))
    return ComputeRow(
        **base,
        m11=result.m11,
        m22=result.m22,
        m12=result.m12,
        **speeds,
        rho_mean=result.rho_mean,
        mu_mean=result.mu_mean,
        c_reuss=result.reuss_speed,
        c_voigt=result.voigt_speed,
    )


def fit_decay(points: Sequence[tuple[int, float]]) -> tuple[float | None, float | None]:
    """Decay exponents of error versus d: per unit d (log-linear) and log-log.

    Zero or non-finite errors are skipped; fewer than two usable points give None.
    """
    usable = [(d, error) for d, error in points if error > 0.0 and math.isfinite(error)]
    if len(usable) < 2 or len({d for d, _ in usable}) < 2:
        return None, None
    d_values = np.array([d for d, _ in usable], dtype=float)
    log_errors = np.log([error for _, error in usable])
    per_d = -float(np.polyfit(d_values, log_errors, 1)[0])
    loglog = -float(np.polyfit(np.log(d_values), log_errors, 1)[0])
    return per_d, loglog


class SpeedRunner(BaseModel):
    """
    Runner for effective-speed computations.

    It evaluates methods concurrently in worker threads and collects sorted rows.
    It implements the async context manager protocol for easy resource management.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    config: SolverConfig = Field(default_factory=SolverConfig, description="Numerical settings")
    truncations: Truncations = Field(default_factory=Truncations, description="Truncations per method")
    workers: PositiveInt = Field(default=1, description="Evaluations allowed to run at the same time")
    _semaphore: asyncio.Semaphore = PrivateAttr()

    async def __aenter__(self) -> Self:
        """Enter the async context manager."""
        self._semaphore = asyncio.Semaphore(self.workers)
        logger.info(f"Speed runner started with {self.workers} worker(s)")
        return self

    async def __aexit__(self, exc_type: Any, exc_val: Any, exc_tb: Any) -> None:
        """Exit the async context manager."""
        logger.info("Speed runner stopped")

    def _timed(self, cell: UnitCell, method: Method, truncation: int) -> Evaluation:
        start = time.perf_counter()
        try:
            result = evaluate(cell, method, truncation, self.truncations, self.config)
        except MethodFailedError as e:
            elapsed = 1e3 * (time.perf_counter() - start)
            logger.warning(f"{e.message} after {elapsed:.1f} ms")
            return Evaluation(method=method, truncation=truncation, error=e.message, wall_time_ms=elapsed)
        elapsed = 1e3 * (time.perf_counter() - start)
        logger.info(f"Method {method} at truncation {truncation} finished in {elapsed:.1f} ms")
        return Evaluation(method=method, truncation=truncation, result=result, wall_time_ms=elapsed)

    async def evaluate(self, cell: UnitCell, method: Method, truncation: int) -> Evaluation:
        """Evaluate one method in a worker thread."""
        if not hasattr(self, "_semaphore"):
            self._semaphore = asyncio.Semaphore(self.workers)
        async with self._semaphore:
            return await asyncio.to_thread(self._timed, cell, method, truncation)

    async def _evaluate_all(self, cell: UnitCell, methods: Sequence[Method]) -> list[Evaluation]:
        jobs = [
            self.evaluate(cell, method, truncation)
            for method in methods
            for truncation in self.truncations.for_method(method)
        ]
        return list(await asyncio.gather(*jobs))

    async def compute(self, cell: UnitCell, methods: Sequence[Method]) -> list[ComputeRow]:
        """One row per method and truncation, in request order."""
        return [compute_row(evaluation) for evaluation in await self._evaluate_all(cell, methods)]

    async def compare(self, cell: UnitCell, methods: Sequence[Method]) -> list[ComputeRow]:
        """Compute rows with the relative gap to a reference speed.

        The reference is the oracle on its finest grid when oracle is selected, otherwise
        the first successful row.
        """
        evaluations = await self._evaluate_all(cell, methods)
        succeeded = [evaluation for evaluation in evaluations if evaluation.result is not None]
        oracle = [evaluation for evaluation in succeeded if evaluation.method is Method.ORACLE]
        reference = max(oracle, key=lambda e: e.truncation) if oracle else (succeeded[0] if succeeded else None)
        rows: list[ComputeRow] = []
        for evaluation in evaluations:
            row = compute_row(evaluation)
            if reference is not None and evaluation.result is not None and row.error is None:
                gap = abs(evaluation.speed - reference.speed) / reference.speed
                row = row.model_copy(update={"relative_gap": gap})
            rows.append(row)
        return rows

    async def sweep(
        self, matrix: MaterialPhase, rod: MaterialPhase, fractions: Sequence[float], methods: Sequence[Method]
    ) -> list[SweepRow]:
        """Speeds of the centred square-rod family over volume fractions.

        Failed points become rows with an error marker. Rows are sorted by (f, method, d).
        """
        planar = [method for method in methods if method is not Method.ELASTIC3D]
        if len(planar) < len(methods):
            logger.warning("elastic3d is skipped in sweeps of 2D square-rod cells")
        jobs = []
        for f in fractions:
            cell, note = square_rod_cell(matrix, rod, f)
            if note is not None:
                logger.warning(f"f={f}: {note}")
            for method in planar:
                for truncation in self.truncations.for_method(method):
                    jobs.append(self._sweep_point(cell, f, note, method, truncation))
        rows = list(await asyncio.gather(*jobs))
        return sorted(rows, key=lambda row: (row.f, row.method, -1 if row.d is None else row.d))

    async def _sweep_point(
        self, cell: UnitCell, f: float, note: str | None, method: Method, truncation: int
    ) -> SweepRow:
        evaluation = await self.evaluate(cell, method, truncation)
        row = SweepRow(f=f, method=str(method), d=evaluation.d, note=note, error=evaluation.error)
        if not isinstance(evaluation.result, EffectiveTensor):
            return row
        try:
            speed = evaluation.result.c_kappa1
        except ArithmeticError as e:
            logger.warning(f"Sweep point f={f} method={method} failed: {e}")
            return row.model_copy(update={"error": str(e)})
        return row.model_copy(
            update={"c": speed, "c_reuss": evaluation.result.reuss_speed, "c_voigt": evaluation.result.voigt_speed}
        )

    async def reference_speed(self, cell: UnitCell, methods: Sequence[Method]) -> float:
        """Reference for convergence studies.

        Richardson-extrapolated oracle over the configured grids when oracle is selected,
        otherwise the monodromy speed at twice the largest requested N.
        """
        if Method.ORACLE in methods:
            grids = sorted(self.truncations.grids)
            if len(grids) >= 2:
                extrapolated = await asyncio.to_thread(richardson_speed, cell, grids, 1, self.config)
                return extrapolated.speed
            evaluation = await self.evaluate(cell, Method.ORACLE, grids[0])
            return evaluation.speed
        n_ref = 2 * max(self.truncations.n_values)
        speed, _ = await asyncio.to_thread(principal_speed, cell, n_ref, 1, self.config)
        logger.info(f"Reference speed {speed:.8g} m/s from monodromy at N={n_ref}")
        return speed

    async def convergence(self, cell: UnitCell, methods: Sequence[Method]) -> list[ConvergenceRow]:
        """Relative errors of mm and pwe against a reference, followed by fitted decay records.

        Raises:
            MethodFailedError: If the reference or any point fails.
        """
        studied = [method for method in methods if method in (Method.MM, Method.PWE)]
        try:
            reference = await self.reference_speed(cell, methods)
        except (ValueError, ArithmeticError, RuntimeError) as e:
            if isinstance(e, MethodFailedError):
                raise
            raise MethodFailedError("reference", str(e)) from e
        evaluations = await self._evaluate_all(cell, studied)
        points: list[ConvergenceRow] = []
        fits: list[ConvergenceRow] = []
        for method in studied:
            rows = []
            for evaluation in evaluations:
                if evaluation.method is not method:
                    continue
                error = abs(evaluation.speed - reference) / reference
                d = 2 * evaluation.truncation + 1
                matrix_dim = 2 * d if method is Method.MM else d * d - 1
                rows.append(
                    ConvergenceRow(
                        kind="point",
                        method=str(method),
                        d=d,
                        relative_error=error,
                        wall_time_ms=evaluation.wall_time_ms,
                        matrix_dim=matrix_dim,
                    )
                )
            rows.sort(key=lambda row: row.d or 0)
            points.extend(rows)
            per_d, loglog = fit_decay([(row.d or 0, row.relative_error or 0.0) for row in rows])
            fits.append(ConvergenceRow(kind="fit", method=str(method), decay_per_d=per_d, decay_loglog=loglog))
        return points + fits


__all__ = ["Evaluation", "SpeedRunner", "Truncations", "compute_row", "evaluate", "fit_decay"]
