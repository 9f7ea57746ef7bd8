"""Command-line interface.

Evolution runs are batch jobs driven from here; the server only reads the
archives they produce. Worker count comes from the LINKSYNTH_WORKERS
environment variable and all randomness derives from --seed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .archive import (DEFAULT_PITCH_MM, build_sheet, downsample,
                      load_archive, save_archive)
from .evolve import RunConfig, run, workers_from_env
from .fitness import load_target_points
from .genome import EncodingConfig, Genome, decode
from .kinematics import solve
from .render import render_linkage, render_map


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linksynth",
                                     description="Evolve 2D leg linkages and explore the results")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="run an evolution batch job")
    p.add_argument("--algo", choices=("ea", "nsga2", "me"), default="me")
    p.add_argument("--fitness", choices=("fp", "fsl"), default="fp")
    p.add_argument("--space", choices=("wh", "lis", "st", "au"), default="lis")
    p.add_argument("--budget", type=int, default=50_000,
                   help="total evaluations, population*(1+iterations)")
    p.add_argument("--population", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=72)
    p.add_argument("--n-joints", type=int, default=8)
    p.add_argument("--points", type=Path, help="target point file (x y step|lift rows)")
    p.add_argument("--config", type=Path, help="JSON run-config file; flags override it")
    p.add_argument("--log", type=Path, help="write per-iteration metrics as JSON lines")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("simulate", help="solve one genome and render it")
    p.add_argument("--genome", type=Path, required=True,
                   help="JSON file with {genes: [...], sigma: s}")
    p.add_argument("--steps", type=int, default=72)
    p.add_argument("--svg", type=Path, help="write the linkage and foot path as SVG")

    p = sub.add_parser("map", help="repertoire map utilities")
    map_sub = p.add_subparsers(dest="map_command", required=True)
    r = map_sub.add_parser("render", help="render an archive as SVG")
    r.add_argument("--archive", type=Path, required=True)
    r.add_argument("--mode", choices=("heatmap", "paths"), default="heatmap")
    r.add_argument("--rows", type=int, default=5)
    r.add_argument("--cols", type=int, default=5)
    r.add_argument("--dims", default="0,1")
    r.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("buildsheet", help="brick-snapped parts list for one elite")
    p.add_argument("--archive", type=Path, required=True)
    p.add_argument("--cell", required=True, help="cell index, e.g. 12,40 or 1,2,3,4")
    p.add_argument("--pitch", type=float, default=DEFAULT_PITCH_MM)
    p.add_argument("--out", type=Path, help="write JSON here instead of stdout")

    p = sub.add_parser("serve", help="serve archives to the explorer UI")
    p.add_argument("--archive-dir", type=Path, required=True)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", type=Path, help="built explorer assets to serve at /")
    return parser


def _cmd_evolve(args) -> int:
    base = {}
    if args.config:
        base = json.loads(args.config.read_text())
    overrides = dict(
        algorithm=args.algo,
        fitness_id=args.fitness,
        space=args.space if args.algo == "me" else None,
        population=args.population,
        iterations=RunConfig.iterations_for_budget(args.budget, args.population),
        seed=args.seed,
        steps=args.steps,
        workers=workers_from_env(),
    )
    if args.n_joints != 8 or "encoding" not in base:
        overrides["encoding"] = EncodingConfig(n_joints=args.n_joints)
    if args.points:
        overrides["targets"] = load_target_points(args.points)
    cfg = RunConfig.from_dict(base, **overrides)

    log_file = args.log.open("w") if args.log else None

    def on_iteration(record):
        line = json.dumps(record)
        print(line)
        if log_file:
            log_file.write(line + "\n")

    try:
        result = run(cfg, on_iteration)
    finally:
        if log_file:
            log_file.close()

    checkpoint = None
    if result.autoencoder is not None:
        checkpoint = args.out.with_suffix(".aurora.json").name
        result.autoencoder.save(args.out.parent / checkpoint)
    save_archive(args.out, result, aurora_checkpoint=checkpoint)
    best = result.best
    print(f"wrote {args.out} (best fitness {best.fitness:.3f}, "
          f"errors {best.error_count})")
    return 0


def _cmd_simulate(args) -> int:
    payload = json.loads(args.genome.read_text())
    genome = Genome(np.asarray(payload["genes"], dtype=float),
                    float(payload.get("sigma", 0.1)))
    n = len(genome.genes)
    if n % 7 != 0 or n < 14:
        print(f"genome length must be 7*(1+n_joints), got {n}", file=sys.stderr)
        return 2
    encoding = EncodingConfig(n_joints=n // 7 - 1)
    linkage = decode(genome, encoding)
    trace = solve(linkage, args.steps)
    print(json.dumps({
        "error_count": trace.error_count,
        "foot_index": trace.foot_index,
        "foot_path": trace.foot_path.tolist(),
    }))
    if args.svg:
        args.svg.write_text(render_linkage(linkage, trace))
        print(f"wrote {args.svg}", file=sys.stderr)
    return 0


def _cmd_map_render(args) -> int:
    loaded = load_archive(args.archive)
    if loaded.repertoire is None:
        print(f"{args.archive} is not a repertoire archive", file=sys.stderr)
        return 2
    dims = tuple(int(v) for v in args.dims.split(","))
    if args.mode == "paths":
        dmap = downsample(loaded.repertoire, args.rows, args.cols, dims,
                          loaded.encoding(), loaded.steps())
        svg = render_map(dmap, "paths")
    else:
        svg = render_map(loaded.repertoire, "heatmap", dims=dims)
    args.out.write_text(svg)
    print(f"wrote {args.out}")
    return 0


def _cmd_buildsheet(args) -> int:
    loaded = load_archive(args.archive)
    if loaded.repertoire is None:
        print(f"{args.archive} is not a repertoire archive", file=sys.stderr)
        return 2
    cell = tuple(int(v) for v in args.cell.split(","))
    elite = loaded.repertoire.cells.get(cell)
    if elite is None:
        print(f"cell {list(cell)} holds no elite", file=sys.stderr)
        return 2
    sheet = build_sheet(elite.genome, loaded.encoding(), loaded.targets(),
                        loaded.steps(), args.pitch)
    text = json.dumps(sheet.to_dict(), indent=2)
    if args.out:
        args.out.write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(args.archive_dir, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    if args.command == "evolve":
        return _cmd_evolve(args)
    if args.command == "simulate":
        return _cmd_simulate(args)
    if args.command == "map":
        return _cmd_map_render(args)
    if args.command == "buildsheet":
        return _cmd_buildsheet(args)
    if args.command == "serve":
        return _cmd_serve(args)
    return 1


if __name__ == "__main__":
    sys.exit(main())
