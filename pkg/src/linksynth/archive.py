"""Repertoire persistence, human-browsable downsampling, and build sheets.

Archive files are line-delimited JSON: a self-describing header line
(encoding, grid, targets, run metadata) followed by one record per filled
cell, sorted by cell index so identical runs produce identical bytes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .descriptors import GridSpec
from .evolve import Evaluation, Repertoire, RunResult
from .fitness import TargetPointSet, fitness_fp, fitness_fsl, scalar_score
from .genome import EncodingConfig, Genome, decode
from .kinematics import solve

FORMAT_NAME = "linkage-archive"
FORMAT_VERSION = 1

DEFAULT_PITCH_MM = 8.0

# reference cell extent used when quoting how much a path was scaled to fit
DISPLAY_CELL_SIZE = 100.0


def _record_for(cell: tuple, e: Evaluation) -> dict:
    return {
        "cell": list(cell),
        "genes": e.genome.genes.tolist(),
        "sigma": e.genome.sigma,
        "fitness": e.fitness,
        "objectives": list(e.objectives),
        "descriptor": list(e.descriptor) if e.descriptor is not None else None,
        "error_count": e.error_count,
        "summary": {k: e.summary[k] for k in sorted(e.summary)},
    }


def save_archive(path, result: RunResult, aurora_checkpoint: Optional[str] = None):
    """Write a finished run to disk. MAP-Elites runs store the repertoire;
    EA/NSGA-II runs store their final population with null cells."""
    cfg = result.config
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        **cfg.to_dict(),
        "grid": result.repertoire.grid.to_dict() if result.repertoire is not None else None,
        "aurora_checkpoint": aurora_checkpoint,
        "evaluations": cfg.population * (1 + cfg.iterations),
    }
    lines = [json.dumps(header)]
    if result.repertoire is not None:
        for cell in sorted(result.repertoire.cells):
            lines.append(json.dumps(_record_for(cell, result.repertoire.cells[cell])))
    else:
        for e in result.population or []:
            record = _record_for((), e)
            record["cell"] = None
            lines.append(json.dumps(record))
    Path(path).write_text("\n".join(lines) + "\n")


def _evaluation_from_record(record: dict) -> Evaluation:
    genome = Genome(np.asarray(record["genes"], dtype=float), float(record["sigma"]))
    descriptor = record.get("descriptor")
    return Evaluation(
        genome=genome,
        fitness=float(record["fitness"]),
        objectives=tuple(record.get("objectives") or ()),
        descriptor=tuple(descriptor) if descriptor is not None else None,
        error_count=int(record["error_count"]),
        summary=dict(record.get("summary") or {}),
    )


@dataclass
class LoadedArchive:
    header: dict
    repertoire: Optional[Repertoire]  # None for population (ea/nsga2) files
    population: Optional[list]

    @property
    def is_repertoire(self) -> bool:
        return self.repertoire is not None

    def encoding(self) -> EncodingConfig:
        return EncodingConfig.from_dict(self.header["encoding"])

    def targets(self) -> TargetPointSet:
        return TargetPointSet.from_dict(self.header["targets"])

    def steps(self) -> int:
        return int(self.header["steps"])


def load_archive(path) -> LoadedArchive:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty archive")
    header = json.loads(lines[0])
    if header.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a {FORMAT_NAME} file")
    records = [json.loads(line) for line in lines[1:] if line.strip()]
    if header.get("algorithm") == "me":
        repertoire = Repertoire(GridSpec.from_dict(header["grid"]),
                                header["fitness"], meta=dict(header))
        for record in records:
            repertoire.cells[tuple(record["cell"])] = _evaluation_from_record(record)
        return LoadedArchive(header, repertoire, None)
    population = [_evaluation_from_record(r) for r in records]
    return LoadedArchive(header, None, population)


@dataclass
class DisplayCell:
    row: int
    col: int
    source_cell: tuple
    fitness: float
    genome: Genome
    error_count: int
    summary: dict
    foot_path: np.ndarray  # (M, 2)
    width: float
    height: float
    scale: float


@dataclass
class DownsampledMap:
    rows: int
    cols: int
    dims: tuple
    cells: dict  # (row, col) -> DisplayCell
    fitness_id: str


def path_scale(width: float, height: float,
               cell_size: float = DISPLAY_CELL_SIZE) -> float:
    """How much a path is magnified when scaled to fit a display cell."""
    extent = max(width, height)
    if extent <= 0:
        return 1.0
    return cell_size / extent


def _block_bounds(bins: int, blocks: int) -> np.ndarray:
    """Start offsets of `blocks` contiguous runs covering `bins` bins."""
    sizes = [len(part) for part in np.array_split(np.arange(bins), blocks)]
    return np.concatenate([[0], np.cumsum(sizes)])


def downsample(repertoire: Repertoire, rows: int = 5, cols: int = 5,
               display_dims: tuple = (0, 1),
               encoding: Optional[EncodingConfig] = None,
               steps: Optional[int] = None) -> DownsampledMap:
    """Coarsen a repertoire to a rows x cols view: the selected dimensions'
    bins split into contiguous blocks, every other dimension is aggregated
    entirely, and each display cell keeps its best-fitness elite with the
    foot path re-simulated for display."""
    grid = repertoire.grid
    d0, d1 = display_dims
    if d0 == d1 or not (0 <= d0 < grid.dims and 0 <= d1 < grid.dims):
        raise ValueError(f"display_dims {display_dims} invalid for {grid.dims}-D grid")
    row_bounds = _block_bounds(grid.bins[d0], rows)
    col_bounds = _block_bounds(grid.bins[d1], cols)
    best = {}
    for cell, e in repertoire.cells.items():
        r = int(np.searchsorted(row_bounds, cell[d0], side="right")) - 1
        c = int(np.searchsorted(col_bounds, cell[d1], side="right")) - 1
        key = (r, c)
        incumbent = best.get(key)
        if incumbent is None or (scalar_score(repertoire.fitness_id, e.fitness)
                                 > scalar_score(repertoire.fitness_id, incumbent[1].fitness)):
            best[key] = (cell, e)

    encoding = encoding or EncodingConfig.from_dict(repertoire.meta["encoding"])
    steps = steps or int(repertoire.meta.get("steps", 72))
    cells = {}
    for (r, c), (cell, e) in sorted(best.items()):
        trace = solve(decode(e.genome, encoding), steps)
        path = trace.foot_path
        width = float(path[:, 0].max() - path[:, 0].min()) if len(path) else 0.0
        height = float(path[:, 1].max() - path[:, 1].min()) if len(path) else 0.0
        cells[(r, c)] = DisplayCell(r, c, cell, e.fitness, e.genome,
                                    e.error_count, e.summary, path, width,
                                    height, path_scale(width, height))
    return DownsampledMap(rows, cols, display_dims, cells, repertoire.fitness_id)


@dataclass
class BeamEntry:
    beam_index: int
    node_a: int
    node_b: int
    length_mm: float
    snapped_mm: float
    holes: int


@dataclass
class BuildSheet:
    pitch_mm: float
    beams: list
    original_fitness_fp: float
    original_fitness_fsl: float
    original_error_count: int
    snapped_fitness_fp: float
    snapped_fitness_fsl: float
    snapped_error_count: int
    fully_infeasible: bool  # snapped linkage fails at every crank step

    def to_dict(self) -> dict:
        return {
            "pitch_mm": self.pitch_mm,
            "beams": [vars(b) for b in self.beams],
            "original": {"fitness_fp": self.original_fitness_fp,
                         "fitness_fsl": self.original_fitness_fsl,
                         "error_count": self.original_error_count},
            "snapped": {"fitness_fp": self.snapped_fitness_fp,
                        "fitness_fsl": self.snapped_fitness_fsl,
                        "error_count": self.snapped_error_count},
            "fully_infeasible": self.fully_infeasible,
        }


def snap_length(length: float, pitch: float) -> float:
    """Nearest multiple of the brick pitch, ties rounding up, never zero."""
    n = max(int(math.floor(length / pitch + 0.5)), 1)
    return n * pitch


def build_sheet(genome: Genome, encoding: EncodingConfig,
                targets: TargetPointSet, steps: int = 72,
                pitch: float = DEFAULT_PITCH_MM) -> BuildSheet:
    """Parts list with every beam snapped to the brick pitch, plus a
    re-simulation of the snapped linkage so the cost of snapping is visible."""
    if pitch <= 0:
        raise ValueError("pitch must be positive")
    linkage = decode(genome, encoding)
    entries = []
    overrides = {}
    for i, beam in enumerate(linkage.beams):
        snapped = snap_length(beam.length, pitch)
        overrides[i] = snapped
        entries.append(BeamEntry(i, beam.node_a, beam.node_b,
                                 float(beam.length), float(snapped),
                                 int(round(snapped / pitch))))
    original = solve(linkage, steps)
    snapped_trace = solve(linkage.with_beam_lengths(overrides), steps)
    return BuildSheet(
        pitch_mm=float(pitch),
        beams=entries,
        original_fitness_fp=fitness_fp(original, targets),
        original_fitness_fsl=fitness_fsl(original),
        original_error_count=original.error_count,
        snapped_fitness_fp=fitness_fp(snapped_trace, targets),
        snapped_fitness_fsl=fitness_fsl(snapped_trace),
        snapped_error_count=snapped_trace.error_count,
        fully_infeasible=snapped_trace.error_count == steps,
    )
