#!/usr/bin/env python3
"""
Configuration loading and logging setup.

Config files are INI text: a ``[pipeline]`` section of ``key = value`` pairs named
like the ``PipelineConfig`` fields and optional ``[scene NAME]`` sections naming
the inputs of batch scenes. Relative paths resolve against the config file.
"""

import configparser
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from pydantic import ValidationError

from .exceptions import ConfigError
from .models.config import PipelineConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

PIPELINE_SECTION = "pipeline"
SCENE_PREFIX = "scene "
PATH_FIELDS = ("winter", "harvest", "winter_calib", "harvest_calib", "gt_labels", "gt_apples", "out_dir")
SCENE_KEYS = PATH_FIELDS[:-1]

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
_LEVELS = {"0": logging.DEBUG, "1": logging.INFO, "2": logging.WARNING, "3": logging.ERROR}


def configure_logging(level: Optional[str] = None) -> int:
    """Install one stream handler at the ORCHARD_LOG level (default WARNING)"""
    name = (level or os.environ.get("ORCHARD_LOG") or "WARNING").strip().upper()
    resolved = _LEVELS.get(name, getattr(logging, name, None))
    if not isinstance(resolved, int):
        raise ConfigError(f"unknown log level {name!r}")
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(resolved)
    return resolved


def _value(text: str) -> Any:
    """Config values: JSON for lists and objects, plain strings otherwise"""
    text = text.strip()
    if text[:1] in "[{":
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed value {text!r}: {e.msg}") from e
    return text


def _read(path: PathLike) -> configparser.ConfigParser:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from e
    for section in parser.sections():
        if section != PIPELINE_SECTION and not section.startswith(SCENE_PREFIX):
            raise ConfigError(f"{path}: unknown section [{section}]")
    return parser


def _section_values(parser: configparser.ConfigParser, section: str, base: Path) -> Dict[str, Any]:
    values = {key: _value(text) for key, text in parser.items(section)}
    for key in PATH_FIELDS:
        if key in values and not Path(values[key]).is_absolute():
            values[key] = str(base / values[key])
    return values


def build_config(values: Mapping[str, Any]) -> PipelineConfig:
    """Validated config; unknown keys and bad values become ConfigError"""
    unknown = sorted(set(values) - set(PipelineConfig.model_fields))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return PipelineConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "config"
        raise ConfigError(f"{where}: {first['msg']}") from e


def parse_overrides(pairs) -> Dict[str, Any]:
    """``key=value`` strings from the command line"""
    overrides = {}
    for pair in pairs or []:
        key, sep, text = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {pair!r} is not key=value")
        overrides[key.strip()] = _value(text)
    return overrides


def load_pipeline_config(
    path: Optional[PathLike] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    flags: Optional[Mapping[str, Any]] = None,
) -> PipelineConfig:
    """Defaults < config file < ``--set`` overrides < explicit flags"""
    values: Dict[str, Any] = {}
    if path is not None:
        parser = _read(path)
        if parser.has_section(PIPELINE_SECTION):
            values.update(_section_values(parser, PIPELINE_SECTION, Path(path).parent))
        logger.info(f"Loaded config file {path}")
    values.update(overrides or {})
    values.update({k: v for k, v in (flags or {}).items() if v is not None})
    return build_config(values)


def has_scenes(path: PathLike) -> bool:
    return any(s.startswith(SCENE_PREFIX) for s in _read(path).sections())


def load_batch(
    path: PathLike,
    overrides: Optional[Mapping[str, Any]] = None,
    flags: Optional[Mapping[str, Any]] = None,
) -> Dict[str, PipelineConfig]:
    """One config per ``[scene NAME]`` section; each scene writes to ``out_dir/NAME``"""
    parser = _read(path)
    base = load_pipeline_config(path, overrides, flags)
    scenes: Dict[str, PipelineConfig] = {}
    for section in parser.sections():
        if not section.startswith(SCENE_PREFIX):
            continue
        name = section[len(SCENE_PREFIX):].strip()
        if not name:
            raise ConfigError(f"{path}: scene section without a name")
        values = _section_values(parser, section, Path(path).parent)
        extra = sorted(set(values) - set(SCENE_KEYS))
        if extra:
            raise ConfigError(f"[{section}] may only name inputs, found {', '.join(extra)}")
        merged = base.model_dump()
        merged.update(values)
        merged["out_dir"] = str(base.out_dir / name)
        scenes[name] = build_config(merged)
    if not scenes:
        raise ConfigError(f"{path}: no [scene NAME] sections")
    print(f"📚 Loaded {len(scenes)} scenes from {path}")
    return scenes
