"""key=value job configs with per-command schemas."""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _list(kind):
    def parse(s: str):
        items = [x.strip() for x in s.split(",") if x.strip()]
        return [kind(x) for x in items]
    return parse


def _opt_str(s: str):
    return s.strip() or None


PARSERS = {"int": int, "float": float, "bool": _bool, "str": str.strip, "opt": _opt_str,
           "ints": _list(int), "floats": _list(float), "strs": _list(str)}


def parse_text(text: str) -> dict:
    """Raw key -> string map; '#' starts a comment, blank lines ignored."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def resolve(schema: dict, raw: dict) -> dict:
    """Typed config: defaults from ``schema`` (key -> (kind, default)) overlaid with ``raw``."""
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            try:
                cfg[key] = PARSERS[kind](raw[key])
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{key}: {exc}") from None
        else:
            cfg[key] = default
    return cfg


def load(schema: dict, path=None, overrides=()) -> dict:
    raw = parse_text(Path(path).read_text()) if path else {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    return resolve(schema, raw)


def format_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return ",".join(format_value(x) for x in v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def dump(cfg: dict) -> str:
    return "".join(f"{k}={format_value(v)}\n" for k, v in cfg.items())
