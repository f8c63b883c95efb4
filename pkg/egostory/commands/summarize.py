import logging

from egostory.commands.common import pipeline_config, workers, write_text
from egostory.core import pipeline
from egostory.core.grouping import group_events
from egostory.core.importance import load_model
from egostory.core.storyboard import manifest_json, render_manifest

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    p = subparsers.add_parser(
        "summarize",
        help="build a storyboard manifest for a bundle",
        description=(
            "Build a storyboard manifest. Events are split with events.threshold_space: chi2 (default) "
            "thresholds in color chi-square space, d uses mean + sigma_multiplier * std of the frame "
            "distance matrix. --tau is in raw importance units."
        ),
    )
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--mode", choices=["criterion", "budget"], help="overrides summary.mode")
    p.add_argument("--tau", type=float, help="overrides summary.tau")
    p.add_argument("-k", type=int, help="overrides summary.k")
    p.add_argument("--no-events", action="store_true", default=None, help="budget mode over all frames")
    p.add_argument("--stats", choices=["model", "self"], help="overrides summary.stats")
    p.add_argument("--stride", type=int, help="overrides bundle.stride")
    p.add_argument("--out", help="manifest path (default: stdout)")
    p.add_argument("--dump-clusters", action="store_true", help="include object clusters in the manifest")
    p.add_argument("--allow-overlap", action="store_true", help="allow summarizing a training video")
    p.set_defaults(func=run)


def run(args) -> int:
    cfg = pipeline_config(
        args,
        {
            "mode": "summary.mode",
            "tau": "summary.tau",
            "k": "summary.k",
            "no_events": "summary.no_events",
            "stats": "summary.stats",
            "stride": "bundle.stride",
        },
    )
    n_workers = workers(args)
    model = load_model(args.model)
    bundle = pipeline.load(args.bundle, cfg)
    pipeline.check_protocol(bundle, model, args.allow_overlap)

    analysis = pipeline.analyze(bundle, model, cfg, workers=n_workers)
    board, clusters = pipeline.summarize(analysis, model, cfg, workers=n_workers)
    if args.dump_clusters and clusters is None:
        clusters = group_events(analysis.events, bundle, analysis.scores, cfg.grouping, workers=n_workers)
    manifest = render_manifest(
        board, bundle, analysis.events, pipeline.make_header(cfg), clusters if args.dump_clusters else None
    )
    write_text(manifest_json(manifest), args.out)
    logger.info(f"{bundle.video_id}: {len(board.entries)} keyframes ({board.mode} mode)")
    return 0
