import json
import sys

from egostory.crud import run as run_crud
from egostory.database import get_db, init_db
from egostory.errors import ConfigError
from egostory.schemas import EvaluationRunOut


def register(subparsers) -> None:
    p = subparsers.add_parser("runs", help="list or delete recorded evaluation runs")
    p.add_argument("--video-id", help="only runs of this video")
    p.add_argument("--delete", type=int, metavar="ID", help="delete a run")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=run)


def run(args) -> int:
    init_db()
    db = next(get_db())
    try:
        if args.delete is not None:
            if run_crud.delete_run(db, args.delete) is None:
                raise ConfigError(f"No evaluation run with id {args.delete}")
            sys.stdout.write(f"Deleted run {args.delete}\n")
            return 0
        runs = [EvaluationRunOut.model_validate(r) for r in run_crud.get_runs(db, args.video_id)]
    finally:
        db.close()

    if args.json:
        sys.stdout.write(json.dumps([r.model_dump(mode="json") for r in runs], indent=2) + "\n")
        return 0
    for r in runs:
        prominence = f"{r.mean_prominence:.1f}" if r.mean_prominence is not None else "-"
        sys.stdout.write(
            f"{r.id:>4}  {r.video_id:<24}  AP {r.average_precision:.3f}  objectness {r.objectness_ap:.3f}  "
            f"{r.n_keyframes:>3} frames  recall {r.object_recall:.2f}  prominence {prominence}\n"
        )
    return 0
