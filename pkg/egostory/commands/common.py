"""Helpers shared by the subcommand modules."""

import logging
import sys
from pathlib import Path
from typing import Dict, Optional

from egostory.config import PipelineConfig, apply_overrides, get_settings, load_config
from egostory.errors import ConfigError

logger = logging.getLogger(__name__)


def parse_sets(pairs) -> Dict[str, str]:
    overrides = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects dotted.path=value, got {pair!r}")
        overrides[key.strip()] = value.strip()
    return overrides


def pipeline_config(args, flag_fields: Optional[Dict[str, str]] = None) -> PipelineConfig:
    """Config file, then ``--set`` overrides, then the subcommand's own flags."""
    cfg = load_config(args.config)
    overrides = parse_sets(getattr(args, "set", None))
    for attr, dotted in (flag_fields or {}).items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[dotted] = value
    return apply_overrides(cfg, overrides) if overrides else cfg


def workers(args) -> int:
    return args.workers or get_settings().workers


def write_text(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    logger.info(f"Wrote {out}")
