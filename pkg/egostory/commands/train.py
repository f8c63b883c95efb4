import logging

import numpy as np

from egostory.commands.common import pipeline_config, workers
from egostory.core import pipeline
from egostory.core.cues import extract_cues
from egostory.core.importance import fit_arrays, save_model, training_arrays, with_energy_stats

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    p = subparsers.add_parser("train", help="fit the importance model on bundles with ground truth")
    p.add_argument("bundles", nargs="+", help="training bundle directories")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--linear-only", action="store_true", help="drop the pairwise cue interactions")
    p.add_argument("--stride", type=int, help="overrides bundle.stride")
    p.set_defaults(func=run)


def run(args) -> int:
    cfg = pipeline_config(args, {"stride": "bundle.stride"})
    n_workers = workers(args)
    bundles, tables, xs, ys = [], [], [], []
    for path in args.bundles:
        bundle = pipeline.load(path, cfg)
        table = extract_cues(bundle, cfg.cues, workers=n_workers)
        x, y = training_arrays(bundle, table)
        logger.info(f"{bundle.video_id}: {len(y)} training regions")
        bundles.append(bundle)
        tables.append(table)
        xs.append(x)
        ys.append(y)

    model = fit_arrays(
        np.vstack(xs),
        np.concatenate(ys),
        linear_only=args.linear_only,
        training_video_ids=[b.video_id for b in bundles],
        header=pipeline.make_header(cfg),
    )
    stats = pipeline.training_energy_stats(bundles, tables, model, cfg, workers=n_workers)
    save_model(with_energy_stats(model, stats), args.out)
    logger.info(f"Model written to {args.out}")
    return 0
