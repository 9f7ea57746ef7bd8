"""Read-only HTTP facade over saved repertoires.

Serves archive summaries, downsampled grids, per-cell records, build
sheets, and a what-if simulation endpoint that re-solves a linkage with
optional beam-length overrides. Archives are loaded read-only and cached;
no endpoint mutates anything.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, model_validator

from .archive import (DEFAULT_PITCH_MM, LoadedArchive, build_sheet,
                      downsample, load_archive)
from .fitness import (angle_error, default_target_points, fitness_fp,
                      fitness_fsl, lift, step_length)
from .genome import EncodingConfig, Genome, decode
from .kinematics import (NODE_CRANK_TIP, NODE_MOTOR, STATIC_NODE_IDS,
                         path_metrics, solve)

log = logging.getLogger(__name__)

MAX_STEPS = 720
ARCHIVE_SUFFIX = ".jsonl"


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class RepertoireSummary(BaseModel):
    id: str
    algorithm: Optional[str] = None
    fitness: Optional[str] = None
    space: Optional[str] = None
    seed: Optional[int] = None
    evaluations: Optional[int] = None
    cells: Optional[int] = None
    coverage: Optional[float] = None
    best_fitness: Optional[float] = None
    error: Optional[str] = None


class GridCell(BaseModel):
    row: int
    col: int
    source_cell: List[int]
    fitness: float
    error_count: int
    foot_path: List[List[float]]
    width: float
    height: float
    scale: float


class GridPayload(BaseModel):
    id: str
    rows: int
    cols: int
    dims: List[int]
    fitness: str
    space: str
    cells: List[GridCell]


class CellRecord(BaseModel):
    cell: List[int]
    genes: List[float]
    sigma: float
    fitness: float
    objectives: List[float]
    descriptor: Optional[List[float]]
    error_count: int
    summary: Dict[str, float]


class GenomePayload(BaseModel):
    genes: List[float]
    sigma: float = Field(ge=0.0, le=1.0)


class SimRequest(BaseModel):
    """Either an archived cell or an inline genome, plus optional what-if
    beam-length overrides (beam index -> mm)."""

    archive: Optional[str] = None
    cell: Optional[List[int]] = None
    genome: Optional[GenomePayload] = None
    overrides: Dict[int, float] = Field(default_factory=dict)
    steps: int = Field(default=72, ge=3, le=MAX_STEPS)
    include_build_sheet: bool = False
    pitch: float = Field(default=DEFAULT_PITCH_MM, gt=0)

    @model_validator(mode="after")
    def _check_source(self):
        if self.genome is None and (self.archive is None or self.cell is None):
            raise ValueError("provide either an inline genome or archive + cell")
        return self


class BeamPayload(BaseModel):
    index: int
    node_a: int
    node_b: int
    length: float


class SimMetrics(BaseModel):
    width: float
    height: float
    min_y: float
    step_length: float
    lift: float
    angle_error: int


class SimResponse(BaseModel):
    steps: int
    node_count: int
    motor: int
    static_nodes: List[int]
    crank_tip: int
    foot_index: Optional[int]
    moving_nodes: List[int]
    beams: List[BeamPayload]
    node_positions: List[List[Optional[List[float]]]]  # [step][node] -> [x, y] | null
    feasible: List[bool]
    foot_path: List[List[float]]
    error_count: int
    fitness_fp: float
    fitness_fsl: float
    metrics: SimMetrics
    build_sheet: Optional[dict] = None


class ArchiveStore:
    """Read-only cache of archives in the serving directory."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self._cache: Dict[str, LoadedArchive] = {}

    def ids(self) -> List[str]:
        return sorted(p.stem for p in self.directory.glob(f"*{ARCHIVE_SUFFIX}"))

    def get(self, archive_id: str) -> LoadedArchive:
        if archive_id not in self._cache:
            path = self.directory / f"{archive_id}{ARCHIVE_SUFFIX}"
            if not path.exists():
                raise ApiError(404, "not_found", f"no archive named {archive_id!r}")
            try:
                self._cache[archive_id] = load_archive(path)
            except (ValueError, KeyError, OSError) as exc:
                raise ApiError(500, "unreadable_archive", f"{archive_id}: {exc}")
        return self._cache[archive_id]

    def summaries(self) -> List[RepertoireSummary]:
        out = []
        for archive_id in self.ids():
            try:
                loaded = self.get(archive_id)
            except ApiError as exc:
                log.warning("skipping unreadable archive %s: %s", archive_id, exc.message)
                out.append(RepertoireSummary(id=archive_id, error=exc.message))
                continue
            if not loaded.is_repertoire:
                out.append(RepertoireSummary(
                    id=archive_id, algorithm=loaded.header.get("algorithm"),
                    fitness=loaded.header.get("fitness"),
                    error="not a repertoire archive"))
                continue
            rep = loaded.repertoire
            best = rep.best()
            out.append(RepertoireSummary(
                id=archive_id,
                algorithm=loaded.header.get("algorithm"),
                fitness=loaded.header.get("fitness"),
                space=loaded.header.get("space"),
                seed=loaded.header.get("seed"),
                evaluations=loaded.header.get("evaluations"),
                cells=len(rep.cells),
                coverage=rep.coverage(),
                best_fitness=best.fitness if best else None,
            ))
        return out


def _repertoire_or_404(store: ArchiveStore, archive_id: str) -> LoadedArchive:
    loaded = store.get(archive_id)
    if not loaded.is_repertoire:
        raise ApiError(404, "not_a_repertoire",
                       f"{archive_id} holds a population, not a repertoire")
    return loaded


def _parse_cell(loaded: LoadedArchive, cell: List[int]) -> tuple:
    key = tuple(int(v) for v in cell)
    if key not in loaded.repertoire.cells:
        raise ApiError(404, "empty_cell", f"cell {list(key)} holds no elite")
    return key


def _simulate(req: SimRequest, store: ArchiveStore) -> SimResponse:
    if req.genome is not None:
        n = len(req.genome.genes)
        if n % 7 != 0 or n < 14:
            raise ApiError(422, "validation_error",
                           f"genome length must be 7*(1+n_joints), got {n}")
        if not all(0.0 <= g <= 1.0 for g in req.genome.genes):
            raise ApiError(422, "validation_error", "genes must lie in [0, 1]")
        encoding = EncodingConfig(n_joints=n // 7 - 1)
        targets = default_target_points()
        genome = Genome(np.asarray(req.genome.genes, dtype=float), req.genome.sigma)
    else:
        loaded = _repertoire_or_404(store, req.archive)
        key = _parse_cell(loaded, req.cell)
        elite = loaded.repertoire.cells[key]
        genome = elite.genome
        encoding = loaded.encoding()
        targets = loaded.targets()

    linkage = decode(genome, encoding)
    if req.overrides:
        try:
            linkage = linkage.with_beam_lengths(dict(req.overrides))
        except ValueError as exc:
            raise ApiError(422, "validation_error", str(exc))
    trace = solve(linkage, req.steps)
    metrics = path_metrics(trace)

    positions = []
    for k in range(req.steps):
        row = []
        for n in range(linkage.n_nodes):
            x, y = trace.node_positions[n, k]
            row.append(None if x != x else [float(x), float(y)])
        positions.append(row)

    sheet = None
    if req.include_build_sheet:
        sheet = build_sheet(genome, encoding, targets, req.steps, req.pitch).to_dict()

    return SimResponse(
        steps=req.steps,
        node_count=linkage.n_nodes,
        motor=NODE_MOTOR,
        static_nodes=list(STATIC_NODE_IDS),
        crank_tip=NODE_CRANK_TIP,
        foot_index=trace.foot_index,
        moving_nodes=[int(n) for n in trace.moving_nodes],
        beams=[BeamPayload(index=i, node_a=b.node_a, node_b=b.node_b, length=b.length)
               for i, b in enumerate(linkage.beams)],
        node_positions=positions,
        feasible=[bool(f) for f in trace.feasible],
        foot_path=[[float(x), float(y)] for x, y in trace.foot_path],
        error_count=trace.error_count,
        fitness_fp=fitness_fp(trace, targets),
        fitness_fsl=fitness_fsl(trace),
        metrics=SimMetrics(width=metrics.width, height=metrics.height,
                           min_y=metrics.min_y, step_length=step_length(trace),
                           lift=lift(trace), angle_error=angle_error(trace)),
        build_sheet=sheet,
    )


def create_app(archive_dir, static_dir=None) -> FastAPI:
    store = ArchiveStore(archive_dir)
    app = FastAPI(title="linksynth explorer API")

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422,
                            content={"code": "validation_error", "message": str(exc)})

    @app.get("/api/repertoires", response_model=List[RepertoireSummary])
    def list_repertoires():
        return store.summaries()

    @app.get("/api/repertoires/{archive_id}/grid", response_model=GridPayload)
    def get_grid(archive_id: str, rows: int = 5, cols: int = 5, dims: str = "0,1"):
        loaded = _repertoire_or_404(store, archive_id)
        try:
            display_dims = tuple(int(v) for v in dims.split(","))
            if len(display_dims) != 2:
                raise ValueError
        except ValueError:
            raise ApiError(422, "validation_error", f"bad dims {dims!r}")
        if not (1 <= rows <= 100 and 1 <= cols <= 100):
            raise ApiError(422, "validation_error", "rows/cols must be in 1..100")
        try:
            dmap = downsample(loaded.repertoire, rows, cols, display_dims,
                              loaded.encoding(), loaded.steps())
        except ValueError as exc:
            raise ApiError(422, "validation_error", str(exc))
        cells = [GridCell(row=c.row, col=c.col, source_cell=list(c.source_cell),
                          fitness=c.fitness, error_count=c.error_count,
                          foot_path=[[float(x), float(y)] for x, y in c.foot_path],
                          width=c.width, height=c.height, scale=c.scale)
                 for c in (dmap.cells[k] for k in sorted(dmap.cells))]
        return GridPayload(id=archive_id, rows=rows, cols=cols,
                           dims=list(display_dims),
                           fitness=loaded.header["fitness"],
                           space=loaded.header["space"], cells=cells)

    @app.get("/api/repertoires/{archive_id}/cells/{cell}", response_model=CellRecord)
    def get_cell(archive_id: str, cell: str):
        loaded = _repertoire_or_404(store, archive_id)
        try:
            indices = [int(v) for v in cell.split(",")]
        except ValueError:
            raise ApiError(422, "validation_error", f"bad cell index {cell!r}")
        key = _parse_cell(loaded, indices)
        e = loaded.repertoire.cells[key]
        return CellRecord(cell=list(key), genes=e.genome.genes.tolist(),
                          sigma=e.genome.sigma, fitness=e.fitness,
                          objectives=list(e.objectives),
                          descriptor=list(e.descriptor) if e.descriptor else None,
                          error_count=e.error_count,
                          summary={k: float(v) for k, v in e.summary.items()})

    @app.get("/api/repertoires/{archive_id}/cells/{cell}/buildsheet")
    def get_build_sheet(archive_id: str, cell: str, pitch: float = DEFAULT_PITCH_MM):
        if pitch <= 0:
            raise ApiError(422, "validation_error", "pitch must be positive")
        loaded = _repertoire_or_404(store, archive_id)
        try:
            indices = [int(v) for v in cell.split(",")]
        except ValueError:
            raise ApiError(422, "validation_error", f"bad cell index {cell!r}")
        key = _parse_cell(loaded, indices)
        e = loaded.repertoire.cells[key]
        sheet = build_sheet(e.genome, loaded.encoding(), loaded.targets(),
                            loaded.steps(), pitch)
        return sheet.to_dict()

    @app.post("/api/simulate", response_model=SimResponse, response_model_exclude_none=False)
    def simulate(req: SimRequest):
        return _simulate(req, store)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="explorer")
    return app
