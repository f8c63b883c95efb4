import logging

from egostory.commands.common import pipeline_config, workers, write_text
from egostory.core import pipeline
from egostory.core.evaluation import evaluate_bundle, pr_table, report_json
from egostory.core.importance import load_model
from egostory.crud import run as run_crud
from egostory.database import get_db, init_db
from egostory.errors import ConfigError

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    p = subparsers.add_parser("evaluate", help="score a bundle against its ground truth")
    p.add_argument("bundle", help="bundle directory with ground truth")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--tau", type=float, help="overrides summary.tau")
    p.add_argument("--stride", type=int, help="overrides bundle.stride")
    p.add_argument("--lengths", help="comma-separated summary lengths for the recall curve")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--pr-table", help="write the precision/recall points as CSV")
    p.add_argument("--record", action="store_true", help="store the report in the run registry")
    p.add_argument("--allow-overlap", action="store_true", help="allow evaluating a training video")
    p.set_defaults(func=run)


def _lengths(raw):
    if not raw:
        return None
    try:
        return [int(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--lengths expects comma-separated integers, got {raw!r}")


def run(args) -> int:
    cfg = pipeline_config(args, {"tau": "summary.tau", "stride": "bundle.stride"})
    model = load_model(args.model)
    bundle = pipeline.load(args.bundle, cfg)
    pipeline.check_protocol(bundle, model, args.allow_overlap)

    report = evaluate_bundle(bundle, model, cfg, lengths=_lengths(args.lengths), workers=workers(args))
    write_text(report_json(report), args.out)
    if args.pr_table and report.pr_full is not None:
        write_text(pr_table(report.pr_full).to_csv(index=False), args.pr_table)

    if args.record:
        init_db()
        db = next(get_db())
        try:
            stored = run_crud.create_run(db, report, run_crud.model_hash(model))
            logger.info(f"Recorded evaluation run {stored.id} for {bundle.video_id}")
        finally:
            db.close()
    return 0
