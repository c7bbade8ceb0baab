"""Command-line pipeline: simulate, analyze, label, embed and compare.

Every subcommand accepts ``--out``, ``--jobs``, ``--format`` and
``--config``. Values resolve as flags, then the JSON config file, then
built-in defaults. The resolved values (except ``jobs``) are written to
``config.json`` in the output directory.

Exit codes: 0 on success, 1 for bad input or usage, 2 when an internal
consistency check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .conditioning import (
    WeightsFormatError,
    embed_phenotype,
    load_weights,
    random_weights,
    save_weights,
    write_embeddings,
)
from .core import MaskFormatError, read_mask_video, truncate_video, video_id_for, write_mask_video
from .morphology import COLUMNS as MORPHOLOGY_COLUMNS
from .morphology import frame_labels, measure_labels
from .movement import DEFAULT_MAX_LINK_DISTANCE, link_tracks, movement_metrics
from .phenotype import (
    AXES,
    PhenotypeScores,
    build_prompt,
    compute_thresholds,
    is_extreme,
    label_scores,
    min_max_ranges,
    normalize_phenotypes,
)
from .population import DEFAULT_TAU, population_stats
from .simulator import SimParams, export_ground_truth, simulate
from .stats import POOLING_MODES, ComparisonReport, build_report
from .tables import json_text, read_table, write_table

FORMATS = ("csv", "json", "md")

MORPHOLOGY_TABLE = ("video_id",) + MORPHOLOGY_COLUMNS
MOVEMENT_TABLE = ("video_id", "track_id", "n_obs", "total_distance", "net_displacement", "avg_speed", "directness")
POPULATION_TABLE = (
    "video_id", "initial_count", "final_count", "growth_ratio",
    "growth_absolute", "division_count", "avg_division_interval",
)
COUNTS_TABLE = ("video_id", "frame", "count")
TRACKS_TABLE = ("video_id", "track_id", "frame", "centroid_y", "centroid_x")
LABELS_TABLE = (
    "video_id", "label_count", "label_proliferation", "label_migration", "label_death", "extreme", "prompt",
)

# metric column -> the analyze table that holds it
METRIC_TABLES = {
    "area": "morphology",
    "eccentricity": "morphology",
    "solidity": "morphology",
    "perimeter": "morphology",
    "initial_count": "population",
    "final_count": "population",
    "growth_ratio": "population",
    "growth_absolute": "population",
    "division_count": "population",
    "avg_division_interval": "population",
    "total_distance": "movement",
    "net_displacement": "movement",
    "avg_speed": "movement",
    "directness": "movement",
}
GROUP_AXES = {"count": "label_count", "proliferation": "label_proliferation",
              "migration": "label_migration", "death": "label_death"}


class InputError(Exception):
    """Bad user input; maps to exit code 1."""


class InvariantError(Exception):
    """An internal consistency check failed; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _probability(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text} is not in [0, 1]")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"{text} must be > 0")
    return v


def _nonnegative_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be >= 1")
    return v


def _nonnegative_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} must be >= 0")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not a 64-bit unsigned seed")
    return v


# ---------------------------------------------------------------- analyze


def _analyze_video(task) -> dict:
    """Worker: every table's rows for one video, or an error message."""
    path, max_frames, tau, max_link = task
    vid = video_id_for(path)
    try:
        video = read_mask_video(path)
    except (OSError, MaskFormatError, ValueError) as exc:
        return {"error": f"{path}: {exc}"}
    if max_frames is not None:
        video = truncate_video(video, max_frames)

    # each frame is labeled once and the result feeds every metric
    regions = []
    for t in range(video.n_frames):
        labels = frame_labels(video, t)
        fr = measure_labels(labels, t)
        if video.kind == "binary" and int(fr.area.sum()) != int(np.count_nonzero(video.frames[t])):
            return {"invariant": f"{path}: frame {t} region areas do not cover the foreground"}
        regions.append(fr)

    morphology = []
    for fr in regions:
        cols = [fr.label, fr.area, fr.eccentricity, fr.solidity, fr.perimeter, fr.centroid_y, fr.centroid_x]
        for values in zip(*(c.tolist() for c in cols)):
            morphology.append(dict(zip(MORPHOLOGY_TABLE, (vid, fr.frame) + values)))

    counts = [len(fr) for fr in regions]
    stats = population_stats(counts, tau)
    population = [{
        "video_id": vid,
        "initial_count": stats.initial_count,
        "final_count": stats.final_count,
        "growth_ratio": stats.growth_ratio,
        "growth_absolute": stats.growth_absolute,
        "division_count": stats.division_count,
        "avg_division_interval": stats.avg_division_interval,
    }]

    tracks = link_tracks(regions, max_link)
    if sum(len(tr) for tr in tracks) != sum(counts):
        return {"invariant": f"{path}: tracks do not cover every detection exactly once"}
    movement, track_rows = [], []
    for tr in tracks:
        m = movement_metrics(tr)
        if m is not None:  # single observations carry no movement data
            movement.append({
                "video_id": vid, "track_id": m.track_id, "n_obs": m.n_obs,
                "total_distance": m.total_distance, "net_displacement": m.net_displacement,
                "avg_speed": m.avg_speed, "directness": m.directness,
            })
        for f, c in tr.observations:
            track_rows.append({"video_id": vid, "track_id": tr.track_id, "frame": f,
                               "centroid_y": c.y, "centroid_x": c.x})

    return {
        "video_id": vid,
        "morphology": morphology,
        "movement": movement,
        "population": population,
        "counts": [{"video_id": vid, "frame": t, "count": c} for t, c in enumerate(counts)],
        "tracks": track_rows,
    }


def _expand_inputs(paths: Sequence[str]) -> list[Path]:
    """Video paths; a directory holding .mskv files expands to those files."""
    out = []
    for p in map(Path, paths):
        if p.is_dir() and any(p.glob("*.mskv")):
            out.extend(sorted(p.glob("*.mskv")))
        else:
            out.append(p)
    return out


def _run_parallel(fn, tasks, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def cmd_analyze(args) -> int:
    paths = _expand_inputs(args.videos)
    ids = [video_id_for(p) for p in paths]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise InputError(f"duplicate video ids: {', '.join(dupes)}")
    tasks = [(str(p), args.max_frames, args.tau, args.max_link_distance) for p in paths]
    results = _run_parallel(_analyze_video, tasks, args.jobs)

    errors = [r["error"] for r in results if "error" in r]
    if errors:
        raise InputError("\n".join(errors))
    broken = [r["invariant"] for r in results if "invariant" in r]
    if broken:
        raise InvariantError("\n".join(broken))

    out = _out_dir(args)
    tables = [
        ("morphology", MORPHOLOGY_TABLE),
        ("movement", MOVEMENT_TABLE),
        ("population", POPULATION_TABLE),
        ("counts", COUNTS_TABLE),
    ]
    if args.write_tracks:
        tables.append(("tracks", TRACKS_TABLE))
    for name, columns in tables:
        rows = [row for r in results for row in r[name]]
        write_table(out / name, columns, rows, args.format)
    print(f"analyzed {len(results)} video(s) into {out}")
    return 0


# ---------------------------------------------------------------- label / embed


def _read_scores(path) -> tuple[list[str], list[PhenotypeScores]]:
    try:
        rows = read_table(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if rows and not {"video_id", *AXES} <= set(rows[0]):
        missing = sorted({"video_id", *AXES} - set(rows[0]))
        raise InputError(f"{path}: missing columns {', '.join(missing)}")
    ids, scores = [], []
    for k, row in enumerate(rows):
        try:
            scores.append(PhenotypeScores(**{a: float(row[a]) for a in AXES}))
        except (TypeError, ValueError) as exc:
            raise InputError(f"{path}: row {k + 1}: {exc}") from exc
        ids.append(str(row["video_id"]))
    return ids, scores


def cmd_label(args) -> int:
    ids, scores = _read_scores(args.scores)
    if len(scores) < 2:
        raise InputError(f"{args.scores}: need at least 2 rows to compute percentiles")
    thresholds = compute_thresholds(scores)
    rows = []
    for vid, s in zip(ids, scores):
        lab = label_scores(s, thresholds)
        extreme = is_extreme(lab)
        if args.extreme_only and not extreme:
            continue
        rows.append({
            "video_id": vid,
            "label_count": lab.cell_count.value,
            "label_proliferation": lab.proliferation.value,
            "label_migration": lab.migration.value,
            "label_death": lab.death.value,
            "extreme": extreme,
            "prompt": build_prompt(lab),
        })
    out = _out_dir(args)
    write_table(out / "labels", LABELS_TABLE, rows, args.format)
    (out / "normalization.json").write_text(json_text(min_max_ranges(scores)))
    (out / "thresholds.json").write_text(json_text(thresholds.as_dict()))
    print(f"labeled {len(scores)} row(s), {sum(r['extreme'] for r in rows)} extreme")
    return 0


def cmd_embed(args) -> int:
    ids, scores = _read_scores(args.scores)
    if not scores:
        raise InputError(f"{args.scores}: no rows")
    out = _out_dir(args)
    if args.normalization:
        try:
            ranges = json.loads(Path(args.normalization).read_text())
            for a in AXES:
                float(ranges[a]["min"]), float(ranges[a]["max"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"{args.normalization}: invalid normalization file ({exc})") from exc
    else:
        ranges = min_max_ranges(scores)
        (out / "normalization.json").write_text(json_text(ranges))
    if args.weights:
        try:
            weights = load_weights(args.weights)
        except (OSError, WeightsFormatError) as exc:
            raise InputError(str(exc)) from exc
    elif args.seed is not None:
        weights = random_weights(args.seed)
        save_weights(weights, out / "weights.pemb")
    else:
        raise InputError("embed needs --weights or --seed")
    vectors = np.array([normalize_phenotypes(s, ranges) for s in scores])
    emb = embed_phenotype(vectors, weights)
    if emb.shape != (len(scores), 4096):
        raise InvariantError(f"embedding has shape {emb.shape}")
    write_embeddings(emb, out / "embeddings.f32", ids)
    print(f"wrote {emb.shape[0]} x {emb.shape[1]} embeddings to {out / 'embeddings.f32'}")
    return 0


# ---------------------------------------------------------------- compare


def _find_table(directory: Path, name: str) -> Path:
    for ext in ("csv", "json"):
        p = directory / f"{name}.{ext}"
        if p.exists():
            return p
    raise InputError(f"{directory}: no {name}.csv or {name}.json")


def _load_side(directory: Path, tables: set[str], labels: Optional[dict]) -> dict[str, list[dict]]:
    out = {}
    for name in sorted(tables):
        path = _find_table(directory, name)
        try:
            rows = read_table(path)
        except (OSError, ValueError) as exc:
            raise InputError(f"{path}: {exc}") from exc
        if labels is not None:
            rows = [{**r, **labels.get(str(r.get("video_id")), {})} for r in rows]
        out[name] = rows
    return out


def _load_labels(path) -> dict[str, dict]:
    try:
        rows = read_table(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    if rows and "video_id" not in rows[0]:
        raise InputError(f"{path}: labels table has no video_id column")
    return {str(r["video_id"]): {c: r[c] for c in GROUP_AXES.values() if c in r} for r in rows}


def cmd_compare(args) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    unknown = [m for m in metrics if m not in METRIC_TABLES]
    if unknown:
        raise InputError(f"unknown metrics: {', '.join(unknown)}")
    group_col = GROUP_AXES[args.group_by] if args.group_by else None
    if group_col and not args.labels:
        raise InputError("--group-by needs --labels")
    real_labels = _load_labels(args.labels) if args.labels else None
    gen_labels = _load_labels(args.gen_labels) if args.gen_labels else real_labels
    needed = {METRIC_TABLES[m] for m in metrics}
    real = _load_side(Path(args.real), needed, real_labels)
    gen = _load_side(Path(args.generated), needed, gen_labels)

    for name in needed:
        for side, rows in (("real", real[name]), ("generated", gen[name])):
            for m in metrics:
                if METRIC_TABLES[m] == name and rows and m not in rows[0]:
                    raise InputError(f"{side} {name} table has no column {m!r}")
        if real[name] and gen[name]:
            rc = set(real[name][0]) - set(GROUP_AXES.values())
            gc = set(gen[name][0]) - set(GROUP_AXES.values())
            if rc != gc:
                raise InputError(f"{name} tables have different columns: {sorted(rc ^ gc)}")

    rows = []
    for m in metrics:
        t = METRIC_TABLES[m]
        rows.extend(build_report(real[t], gen[t], [m], group_col, args.pooling).rows)
    report = ComparisonReport(tuple(rows), args.pooling, group_col)
    out = _out_dir(args)
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.md").write_text(report.to_markdown())
    flagged = sum(r.flag is not None for r in report.rows)
    print(f"compared {len(metrics)} metric(s), {len(report.rows)} row(s), {flagged} flagged")
    return 0


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    try:
        params = SimParams(
            height=args.height, width=args.width, frames=args.frames,
            initial_count=args.initial, division_prob=args.div_prob, death_prob=args.death_prob,
            motion_std=args.motion_std, radius=args.radius, seed=args.seed,
        )
        video, truth = simulate(params, kind="labels" if args.labeled else "binary")
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Path(args.out or "video.mskv")
    out.parent.mkdir(parents=True, exist_ok=True)
    truth_path = Path(args.truth) if args.truth else out.with_suffix(".truth.json")
    try:
        truth.check()
    except ValueError as exc:
        raise InvariantError(str(exc)) from exc
    write_mask_video(video, out)
    export_ground_truth(truth, truth_path)
    print(f"simulated {params.frames} frame(s), {truth.counts[0]} -> {truth.counts[-1]} cells: {out}")
    return 0


# ---------------------------------------------------------------- parser and config


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    config = {k: v for k, v in vars(args).items() if k not in ("jobs", "config", "handler")}
    (out / "config.json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")
    return out


def _common(p: argparse.ArgumentParser, out_help: str) -> None:
    p.add_argument("--out", help=out_help)
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes (default 1)")
    p.add_argument("--format", choices=FORMATS, default="csv", help="table format (default csv)")
    p.add_argument("--config", help="JSON file of option defaults, keyed by option name")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="celldyn", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="morphology, movement and population tables", allow_abbrev=False)
    p.add_argument("videos", nargs="+", help="MSKV files, PGM frame directories, or directories of MSKV files")
    p.add_argument("--tau", type=_positive_float, default=DEFAULT_TAU, help="division threshold on the count derivative")
    p.add_argument("--max-link-distance", type=_positive_float, default=DEFAULT_MAX_LINK_DISTANCE,
                   help="largest centroid jump linked into a track, in pixels")
    p.add_argument("--max-frames", type=_positive_int, default=None, help="truncate each video to this many frames")
    p.add_argument("--write-tracks", action="store_true", help="also write tracks table")
    _common(p, "output directory")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("compare", help="W1 report between real and generated metric tables", allow_abbrev=False)
    p.add_argument("--real", required=True, help="analyze output directory of real videos")
    p.add_argument("--generated", "--gen", required=True, help="analyze output directory of generated videos")
    p.add_argument("--labels", help="labels table keyed by video_id (real side, and generated unless --gen-labels)")
    p.add_argument("--gen-labels", help="labels table for the generated side")
    p.add_argument("--group-by", choices=sorted(GROUP_AXES), help="phenotype axis whose labels define conditions")
    p.add_argument("--metrics", default=",".join(METRIC_TABLES), help="comma-separated metric columns")
    p.add_argument("--pooling", choices=POOLING_MODES, default="pooled",
                   help="pool all rows, or average each video first")
    _common(p, "output directory")
    p.set_defaults(handler=cmd_compare)

    p = sub.add_parser("label", help="HIGH/LOW/MED labels, extreme flags and prompts", allow_abbrev=False)
    p.add_argument("scores", help="scores table: video_id,cell_count,proliferation,migration,death")
    p.add_argument("--extreme-only", action="store_true", help="keep only extreme rows in the labels table")
    _common(p, "output directory")
    p.set_defaults(handler=cmd_label)

    p = sub.add_parser("embed", help="phenotype embeddings from scores", allow_abbrev=False)
    p.add_argument("scores", help="scores table: video_id,cell_count,proliferation,migration,death")
    p.add_argument("--normalization", help="per-axis min/max JSON (computed from the scores if omitted)")
    p.add_argument("--weights", help="PEMB weights file")
    p.add_argument("--seed", type=_seed, help="generate random weights from this seed instead")
    _common(p, "output directory")
    p.set_defaults(handler=cmd_embed)

    p = sub.add_parser("simulate", help="synthetic mask video with a ground-truth ledger", allow_abbrev=False)
    p.add_argument("--width", type=_positive_int, default=256)
    p.add_argument("--height", type=_positive_int, default=256)
    p.add_argument("--frames", type=_positive_int, default=81)
    p.add_argument("--initial", type=_nonnegative_int, default=20, help="initial cell count")
    p.add_argument("--div-prob", type=_probability, default=0.0, help="per cell per frame")
    p.add_argument("--death-prob", type=_probability, default=0.0, help="per cell per frame")
    p.add_argument("--motion-std", type=_nonnegative_float, default=1.0, help="pixels per frame")
    p.add_argument("--radius", type=_positive_int, default=5, help="nucleus radius in pixels")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--truth", help="ground-truth JSON path (default: next to the video)")
    p.add_argument("--labeled", action="store_true", help="write a labeled video (cell id + 1) instead of binary")
    _common(p, "video file to write (default video.mskv)")
    p.set_defaults(handler=cmd_simulate)
    return parser


def _given_dests(sub: argparse.ArgumentParser, argv: Sequence[str]) -> set[str]:
    flags = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    return {a.dest for a in sub._actions if flags & set(a.option_strings)}


def _apply_config(parser, args, argv) -> None:
    """Fill options not given on the command line from the ``--config`` JSON."""
    if not args.config:
        return
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    if not isinstance(config, dict):
        parser.error("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    given = _given_dests(sub, argv)
    for key, value in config.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            sub.error(f"unknown config key {key!r}")
        if dest in given:
            continue
        action = actions[dest]
        if action.type is not None and value is not None:
            try:
                value = action.type(str(value))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                sub.error(f"config key {key!r}: {exc}")
        if action.choices is not None and value not in action.choices:
            sub.error(f"config key {key!r}: {value!r} not in {sorted(action.choices)}")
        setattr(args, dest, value)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(parser, args, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvariantError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except (OSError, MaskFormatError, WeightsFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
