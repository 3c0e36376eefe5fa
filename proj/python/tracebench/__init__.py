"""Contact tracing protocol simulator (Python bindings).

Configs may be given as a dict, a JSON string, or a path to a JSON file.
Reports come back as dicts.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

from ._tracebench import (
    ArgumentError,
    ConfigError,
    LogError,
    protocols,
    sha256_hex,
)
from . import _tracebench as _native

ConfigLike = Union[Mapping[str, Any], str, os.PathLike]

__all__ = [
    "ArgumentError",
    "ConfigError",
    "LogError",
    "compare",
    "config_hash",
    "effective_config",
    "protocols",
    "report_from_log",
    "run",
    "sha256_hex",
    "simulate",
]


def _config_text(config: ConfigLike) -> tuple[str, str]:
    if isinstance(config, Mapping):
        return json.dumps(config), "<dict>"
    if isinstance(config, os.PathLike) or (isinstance(config, str) and not config.lstrip().startswith("{")):
        path = Path(config)
        return path.read_text(), path.name
    return str(config), "<config>"


def _with(config: ConfigLike, seed: int | None, protocol: str | None) -> tuple[str, str]:
    text, source = _config_text(config)
    if seed is None and protocol is None:
        return text, source
    data = json.loads(text)
    if seed is not None:
        data["seed"] = seed
    if protocol is not None:
        data.setdefault("protocol", {})["name"] = protocol
    return json.dumps(data), source


def effective_config(config: ConfigLike) -> dict:
    """The validated config with every default filled in."""
    return json.loads(_native.effective_config(*_config_text(config)))


def config_hash(config: ConfigLike) -> str:
    return _native.config_hash(*_config_text(config))


def simulate(config: ConfigLike, out_dir: Union[str, os.PathLike], *, seed: int | None = None,
             protocol: str | None = None) -> dict:
    """Runs one scenario into out_dir (event log, effective config, report) and returns the report."""
    text, source = _with(config, seed, protocol)
    return json.loads(_native.simulate_to_dir(text, os.fspath(out_dir), source))


def run(config: ConfigLike, *, seed: int | None = None, protocol: str | None = None) -> tuple[str, str]:
    """Runs one scenario in memory; returns (event log, DP-3T publications) as JSON Lines text."""
    log, pubs = _native.run_simulation(*_with(config, seed, protocol))
    return log.decode(), pubs.decode()


def report_from_log(log: Union[str, os.PathLike]) -> dict:
    """Rebuilds a report from an event log given as a path or as its text."""
    if isinstance(log, os.PathLike) or (isinstance(log, str) and "\n" not in log):
        path = Path(log)
        return json.loads(_native.report_from_log(path.read_text(), path.name))
    return json.loads(_native.report_from_log(log))


def compare(reports: Iterable[Union[Mapping[str, Any], str, os.PathLike]], *, force: bool = False,
            format: str = "markdown") -> str:
    texts = []
    for r in reports:
        texts.append(json.dumps(r) if isinstance(r, Mapping) else Path(r).read_text())
    return _native.compare(texts, force, format)
