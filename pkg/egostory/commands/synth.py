import logging
from pathlib import Path

from egostory.commands.common import pipeline_config
from egostory.core import pipeline
from egostory.core.bundle import save_bundle
from egostory.core.synth import (
    generate,
    load_scenario,
    planted_day,
    save_oracle,
    save_scenario,
    single_block_scenario,
    three_block_scenario,
)
from egostory.errors import ConfigError

logger = logging.getLogger(__name__)

PRESETS = {
    "planted-day": planted_day,
    "three-blocks": three_block_scenario,
    "one-block": single_block_scenario,
}


def register(subparsers) -> None:
    p = subparsers.add_parser("synth", help="generate a synthetic bundle with a planted oracle")
    p.add_argument("spec", nargs="?", help="scenario spec JSON file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--out", required=True, help="output bundle directory")
    p.add_argument("--oracle", help="oracle JSON path (default: <out>/oracle.json)")
    p.add_argument("--write-spec", help="also write the resolved scenario spec here")
    p.set_defaults(func=run)


def run(args) -> int:
    cfg = pipeline_config(args)
    if args.spec:
        spec = load_scenario(args.spec)
        if args.seed is not None:
            spec = spec.model_copy(update={"seed": args.seed})
    elif args.preset:
        spec = PRESETS[args.preset](seed=cfg.seed if args.seed is None else args.seed)
    else:
        raise ConfigError("synth needs a spec file or --preset")

    bundle, oracle = generate(spec, cfg.cues, cfg.bundle)
    header = pipeline.make_header(cfg).model_copy(update={"seed": spec.seed})
    bundle = bundle.model_copy(update={"header": header})
    oracle = oracle.model_copy(update={"header": header})
    out = save_bundle(bundle, args.out)
    oracle_path = save_oracle(oracle, args.oracle or Path(args.out) / "oracle.json")
    if args.write_spec:
        save_scenario(spec, args.write_spec)
    logger.info(f"Bundle written to {out}, oracle to {oracle_path}")
    return 0
