"""Deterministic CSV output: fixed column order, 17-significant-digit floats."""

from __future__ import annotations

from pathlib import Path


def format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def render_csv(header: list[str], rows: list[tuple]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header: list[str], rows: list[tuple]) -> str:
    """Write and also return the rendered text (handy for byte comparisons)."""
    text = render_csv(header, rows)
    if path is not None:
        Path(path).write_text(text)
    return text
