"""Command line entry points.

Subcommands cover the full pipeline: preprocess, edges, synth, simulate,
serve, analyze and replay.  Every randomized subcommand takes an
explicit --seed so outputs are reproducible byte for byte; exit status
is 0 on success, 1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import analysis, datasets, experiment, imaging, maskstore, simulator


def _add_edge_flags(p: argparse.ArgumentParser):
    p.add_argument("--low-threshold", type=float, default=25.0)
    p.add_argument("--high-threshold", type=float, default=50.0)
    p.add_argument("--gaussian-sigma", type=float, default=5.0)


def _add_sim_flags(p: argparse.ArgumentParser):
    p.add_argument("--n-electrodes", type=int, default=600)
    p.add_argument("--field-radius-deg", type=float, default=4.0)
    p.add_argument("--pulse-freq-hz", type=float, default=300.0)
    p.add_argument("--current-ua", type=float, default=60.0)
    p.add_argument("--frame-size", type=int, default=640)


def _sim_params(args) -> simulator.SimParams:
    return simulator.SimParams(
        n_electrodes=args.n_electrodes,
        field_radius_deg=args.field_radius_deg,
        pulse_freq_hz=args.pulse_freq_hz,
        current_ua=args.current_ua,
        frame_size=args.frame_size,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phosvis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="resize and luma-equalize a scene image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--height", type=int, default=1024)

    p = sub.add_parser("edges", help="Canny edge map of an image")
    p.add_argument("input")
    p.add_argument("output")
    _add_edge_flags(p)
    p.add_argument("--no-preprocess", action="store_true",
                   help="treat the input as an already prepared grayscale frame")
    p.add_argument("--width", type=int, default=1024)
    p.add_argument("--height", type=int, default=1024)

    p = sub.add_parser("synth", help="generate a synthetic scene dataset")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--images-per-stratum", type=int, default=10)
    p.add_argument("--size", type=int, default=1024)

    p = sub.add_parser("simulate", help="render one phosphene frame")
    p.add_argument("input", help="grayscale stimulus image")
    p.add_argument("output")
    p.add_argument("--gaze-x", type=float, required=True)
    p.add_argument("--gaze-y", type=float, required=True)
    p.add_argument("--seed", type=int, help="electrode layout seed")
    p.add_argument("--layout", help="electrode layout JSON (alternative to --seed)")
    p.add_argument("--save-layout", help="write the sampled layout JSON here")
    _add_sim_flags(p)

    p = sub.add_parser("serve", help="run the session server")
    p.add_argument("--dataset", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8414)
    p.add_argument("--selection-policy", choices=maskstore.SELECTION_POLICIES,
                   default="union")
    p.add_argument("--edge-gain", type=float, default=maskstore.DEFAULT_EDGE_GAIN)
    _add_edge_flags(p)
    _add_sim_flags(p)

    p = sub.add_parser("analyze", help="metrics and gaze maps from trial logs")
    p.add_argument("logs", nargs="+")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--fp-mapping", choices=analysis.FP_MAPPINGS, default="claim-only")
    p.add_argument("--grid-size", type=int, default=analysis.ENTROPY_GRID)
    p.add_argument("--stimulus-size", type=int, default=1024)

    p = sub.add_parser("replay", help="re-score a trial log through the state machine")
    p.add_argument("log")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="write the re-scored log here (default: stdout)")
    p.add_argument("--check", action="store_true",
                   help="fail unless the replay reproduces the log byte for byte")

    return parser


def cmd_preprocess(args) -> int:
    img = imaging.read_rgb(args.input)
    imaging.write_rgb(args.output, imaging.preprocess(img, args.width, args.height))
    return 0


def cmd_edges(args) -> int:
    params = imaging.EdgeParams(
        low_threshold=args.low_threshold,
        high_threshold=args.high_threshold,
        gaussian_sigma=args.gaussian_sigma,
    )
    if args.no_preprocess:
        frame = imaging.read_gray(args.input)
    else:
        frame = imaging.preprocess_luma(imaging.read_rgb(args.input),
                                        args.width, args.height)
    imaging.write_gray(args.output, imaging.canny_edges(frame, params))
    return 0


def cmd_synth(args) -> int:
    ids = datasets.make_synth_dataset(args.out_dir, seed=args.seed,
                                      images_per_stratum=args.images_per_stratum,
                                      size=args.size)
    print(f"wrote {len(ids)} scenes to {args.out_dir}")
    return 0


def cmd_simulate(args) -> int:
    params = _sim_params(args)
    if args.layout:
        layout = simulator.load_layout(args.layout)
    elif args.seed is not None:
        layout = simulator.sample_layout(params, args.seed)
    else:
        print("simulate: provide --seed or --layout", file=sys.stderr)
        return 2
    if args.save_layout:
        simulator.save_layout(layout, args.save_layout)
    stim = imaging.read_gray(args.input)
    frame = simulator.render_frame(stim, (args.gaze_x, args.gaze_y), layout, params)
    imaging.write_gray(args.output, frame)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from . import service

    config = service.ServiceConfig(
        dataset_dir=args.dataset,
        sim=_sim_params(args),
        edge_params=imaging.EdgeParams(
            low_threshold=args.low_threshold,
            high_threshold=args.high_threshold,
            gaussian_sigma=args.gaussian_sigma,
        ),
        edge_gain=args.edge_gain,
        selection_policy=args.selection_policy,
    )
    app = service.create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_analyze(args) -> int:
    records = []
    for path in args.logs:
        records.extend(experiment.parse_log(Path(path).read_text()))
    if not records:
        print("analyze: no trial records in the given logs", file=sys.stderr)
        return 1
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report = analysis.classification_report(records, args.fp_mapping)
    (out / "report.json").write_text(analysis.report_to_json(report))
    (out / "report.csv").write_text(analysis.report_to_csv(report))

    frame_size = (args.stimulus_size, args.stimulus_size)
    summary = {
        "fp_mapping": args.fp_mapping,
        "n_records": len(records),
        "trial_times": analysis.trial_time_stats(records),
        "breakdown_clutter": analysis.breakdown(records, "clutter"),
        "breakdown_shape": analysis.breakdown(records, "shape"),
        "breakdown_condition": analysis.breakdown(records, "condition"),
        "entropy_bits": {},
    }
    by_condition: dict = {}
    for r in records:
        by_condition.setdefault(r["condition"], []).extend(r["gaze"])
    for cond in sorted(by_condition):
        trace = by_condition[cond]
        if not trace:
            continue
        grid = analysis.gaze_entropy(trace, args.grid_size, frame_size)
        summary["entropy_bits"][cond] = grid.entropy_bits
        gmap = analysis.gaze_map(trace, grid_size=args.grid_size,
                                 frame_size=frame_size)
        analysis.heatmap_png(gmap, out / f"gaze_{cond}.png")
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"analysis written to {out}")
    return 0


def cmd_replay(args) -> int:
    dataset = experiment.Dataset.from_dir(args.dataset)
    text = Path(args.log).read_text()
    replayed = experiment.replay_log(text, dataset.archive)
    if args.out:
        Path(args.out).write_text(replayed)
    else:
        sys.stdout.write(replayed)
    original = "\n".join(
        json.dumps(d, separators=(",", ":")) for d in experiment.parse_log(text)
    )
    original = original + "\n" if original else ""
    identical = replayed == original
    print(f"replay: {'identical' if identical else 'DIVERGED'}", file=sys.stderr)
    if args.check and not identical:
        return 1
    return 0


_COMMANDS = {
    "preprocess": cmd_preprocess,
    "edges": cmd_edges,
    "synth": cmd_synth,
    "simulate": cmd_simulate,
    "serve": cmd_serve,
    "analyze": cmd_analyze,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"phosvis {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
