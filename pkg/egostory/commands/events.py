import json

from egostory.commands.common import pipeline_config, workers, write_text
from egostory.core import pipeline
from egostory.core.events import save_distance_matrix, stopping_threshold


THRESHOLD_SPACE_HELP = (
    "event stopping threshold (overrides events.threshold_space). chi2 (default): tau is the distance, at "
    "full temporal weight, of a pair whose color chi2 is omega + sigma_multiplier * std(chi2). d: tau is "
    "mean + sigma_multiplier * std of the frame distance matrix"
)


def register(subparsers) -> None:
    p = subparsers.add_parser("events", help="segment a bundle into events")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("--out", help="events JSON path (default: stdout)")
    p.add_argument("--matrix", help="also save the frame distance matrix as .npy")
    p.add_argument("--t-window", type=int, help="overrides events.t_window")
    p.add_argument("--threshold-space", choices=["chi2", "d"], help=THRESHOLD_SPACE_HELP)
    p.add_argument("--stride", type=int, help="overrides bundle.stride")
    p.set_defaults(func=run)


def run(args) -> int:
    cfg = pipeline_config(
        args,
        {"t_window": "events.t_window", "threshold_space": "events.threshold_space", "stride": "bundle.stride"},
    )
    bundle = pipeline.load(args.bundle, cfg)
    dm, evs = pipeline.segment(bundle, cfg, workers=workers(args))
    if args.matrix and dm is not None:
        save_distance_matrix(dm, args.matrix)
    document = {
        "header": pipeline.make_header(cfg).model_dump(mode="json"),
        "video_id": bundle.video_id,
        "omega": dm.omega if dm is not None else 0.0,
        "tau": stopping_threshold(dm, cfg.events) if dm is not None else None,
        "events": [e.model_dump(mode="json") for e in evs],
    }
    write_text(json.dumps(document, indent=2) + "\n", args.out)
    return 0
