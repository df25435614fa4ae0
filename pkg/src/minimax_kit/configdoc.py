"""Flat key=value text documents.

One `key=value` pair per line, `#` starts a comment, blank lines ignored, dots
in keys act as section separators by convention (`problem.kappa_target=16`).
Values never contain `#` or newlines. Used for config files, problem files, and
run meta sidecars; every file the package writes is re-parseable here.
"""

from __future__ import annotations

from .core import ValidationError

__all__ = ["parse_text", "format_text", "load", "save"]


def parse_text(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse a document into an insertion-ordered dict. Duplicate keys are an
    error (overrides belong in `--set`, not in the file)."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ValidationError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ValidationError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def format_text(entries: dict[str, str]) -> str:
    """Render a document. LF endings, one trailing newline."""
    lines = []
    for key, value in entries.items():
        value = str(value)
        if "\n" in value or "#" in value:
            raise ValidationError(f"value for {key!r} may not contain '#' or newlines")
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def load(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_text(fh.read(), source=str(path))


def save(entries: dict[str, str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_text(entries))
