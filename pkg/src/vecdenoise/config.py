"""Flat key-value run configuration.

Config files hold "key = value" lines; '#' starts a comment (full line
or trailing) and blank lines are ignored. Every key can be overridden
by a command-line flag of the same name. Values stay strings until a
command asks for them through a typed accessor.
"""

import os

from .errors import ConfigError


def parse_config_text(text, source="<config>"):
    """Parse config text into an ordered {key: value} dict."""
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}: line {lineno}: expected 'key = value', "
                f"got {raw.strip()!r}"
            )
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{source}: line {lineno}: empty key")
        cfg[key] = value
    return cfg


def load_config(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)


class PipelineConfig:
    """Typed view over the flat key-value map."""

    def __init__(self, values=None):
        self.values = dict(values or {})

    def override(self, key, value):
        self.values[key] = value

    def has(self, key):
        return key in self.values and self.values[key] != ""

    def get_str(self, key, default=None):
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required config key: {key}")
            return default
        return self.values[key]

    def _convert(self, key, caster, kind, default):
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required config key: {key}")
            return default
        raw = self.values[key]
        try:
            return caster(raw)
        except ValueError:
            raise ConfigError(
                f"config key {key}: expected {kind}, got {raw!r}"
            ) from None

    def get_int(self, key, default=None):
        return self._convert(key, int, "an integer", default)

    def get_float(self, key, default=None):
        return self._convert(key, float, "a number", default)

    def get_bool(self, key, default=None):
        def cast(raw):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)

        return self._convert(key, cast, "a boolean", default)

    def get_list(self, key, caster=str, default=None):
        """Comma-separated list; empty entries dropped."""
        if not self.has(key):
            if default is None:
                raise ConfigError(f"missing required config key: {key}")
            return default
        out = []
        for part in self.values[key].split(","):
            part = part.strip()
            if not part:
                continue
            try:
                out.append(caster(part))
            except ValueError:
                raise ConfigError(
                    f"config key {key}: bad list entry {part!r}"
                ) from None
        return out
