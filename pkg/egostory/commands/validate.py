import json
import sys

from egostory.core.bundle import bundle_json_schema, read_bundle, validate_bundle
from egostory.errors import ConfigError

# Exit statuses above 125 are reserved by shells.
MAX_STATUS = 125


def register(subparsers) -> None:
    p = subparsers.add_parser("validate", help="check a bundle; exit status is the violation count")
    p.add_argument("bundle", nargs="?", help="bundle directory")
    p.add_argument("--print-schema", action="store_true", help="print the bundle JSON schema and exit")
    p.add_argument("--json", action="store_true", help="report violations as JSON")
    p.set_defaults(func=run)


def run(args) -> int:
    if args.print_schema:
        sys.stdout.write(json.dumps(bundle_json_schema(), indent=2) + "\n")
        return 0
    if not args.bundle:
        raise ConfigError("validate needs a bundle directory")

    bundle = read_bundle(args.bundle)
    violations = validate_bundle(bundle)
    if args.json:
        sys.stdout.write(json.dumps([v.model_dump() for v in violations], indent=2) + "\n")
    else:
        for v in violations:
            sys.stdout.write(f"[{v.rule}] frame {v.frame_index} {v.entity}: {v.detail}\n")
        sys.stdout.write(f"{bundle.video_id}: {len(violations)} violation(s)\n")
    return min(len(violations), MAX_STATUS)
