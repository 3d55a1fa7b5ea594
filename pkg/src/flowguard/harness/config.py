"""key=value config files feeding argparse subcommands.

A config file holds one `key = value` pair per line; blank lines and
`#` comments are skipped. Keys name the long flags of the subcommand
(dashes and underscores are interchangeable). Values are coerced with the
same converters the flags use, so `frames = 2000` and `--frames 2000`
behave identically. Explicit command-line flags override config values.
"""

from __future__ import annotations

import argparse
from typing import Dict


class ConfigError(ValueError):
    """Config file rejected; message carries the file and line number."""


_BOOL_WORDS = {
    "1": True,
    "true": True,
    "yes": True,
    "on": True,
    "0": False,
    "false": False,
    "no": False,
    "off": False,
}


def read_config(path: str) -> Dict[str, str]:
    """Parse a key=value file into raw strings, in file order."""
    pairs: Dict[str, str] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, value = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            pairs[key] = value.strip()
    return pairs


def coerce_for_parser(pairs: Dict[str, str], parser: argparse.ArgumentParser, path: str) -> dict:
    """Convert raw config strings using the parser's own flag converters.

    Unknown keys are an error: a typo in a config file should fail loudly,
    not silently fall back to a default.
    """
    actions = {a.dest: a for a in parser._actions if a.dest != "help"}
    out = {}
    for key, raw in pairs.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None or dest == "config":
            raise ConfigError(f"{path}: unknown config key {key!r}")
        if isinstance(action.const, bool):
            word = _BOOL_WORDS.get(raw.lower())
            if word is None:
                raise ConfigError(f"{path}: {key!r} wants a boolean, got {raw!r}")
            out[dest] = word
        elif action.type is not None:
            try:
                out[dest] = action.type(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad value for {key!r}: {exc}") from exc
        else:
            out[dest] = raw
    return out


def parse_with_config(
    parser: argparse.ArgumentParser,
    subparsers: Dict[str, argparse.ArgumentParser],
    argv,
) -> argparse.Namespace:
    """Two-phase parse: config values become defaults, flags still win."""
    ns = parser.parse_args(argv)
    path = getattr(ns, "config", None)
    if not path:
        return ns
    sub = subparsers[ns.command]
    sub.set_defaults(**coerce_for_parser(read_config(path), sub, path))
    return parser.parse_args(argv)
