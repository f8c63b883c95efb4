import sys

from egostory.commands.common import pipeline_config, workers
from egostory.core import pipeline
from egostory.core.cues import export_cue_table, extract_cues


def register(subparsers) -> None:
    p = subparsers.add_parser("cues", help="export the per-region cue table as CSV")
    p.add_argument("bundle", help="bundle directory")
    p.add_argument("--out", help="CSV path (default: stdout, after a '# header' comment line)")
    p.add_argument("--stride", type=int, help="overrides bundle.stride")
    p.set_defaults(func=run)


def run(args) -> int:
    cfg = pipeline_config(args, {"stride": "bundle.stride"})
    bundle = pipeline.load(args.bundle, cfg)
    table = extract_cues(bundle, cfg.cues, workers=workers(args))
    header = pipeline.make_header(cfg)
    if args.out:
        export_cue_table(table, args.out, header)
    else:
        sys.stdout.write(f"# header {header.model_dump_json()}\n")
        table.to_csv(sys.stdout, index=False)
    return 0
