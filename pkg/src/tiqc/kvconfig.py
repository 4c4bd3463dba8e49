"""Flat ``key = value`` config files (``#`` starts a comment, SI units)."""

from __future__ import annotations


def loads(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, (tuple, list, set, frozenset)):
        items = sorted(v) if isinstance(v, (set, frozenset)) else v
        return ", ".join(str(x) for x in items)
    return str(v)


def dumps(d: dict) -> str:
    return "".join(f"{k} = {_fmt(v)}\n" for k, v in d.items())


def parse_bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def parse_list(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def coerce(value: str, default):
    """Convert ``value`` to the type of ``default``."""
    if isinstance(default, bool):
        return parse_bool(value)
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, (tuple, list)):
        return parse_list(value)
    if isinstance(default, (set, frozenset)):
        return frozenset(parse_list(value))
    return value
