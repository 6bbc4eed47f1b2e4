"""Shipped experiment configs, addressable by name (``ftpl run killer``)."""

from __future__ import annotations

from pathlib import Path

HERE = Path(__file__).resolve().parent


def preset_names() -> list[str]:
    return sorted(p.stem for p in HERE.glob("*.yaml"))


def preset_path(name: str) -> Path | None:
    p = HERE / f"{name}.yaml"
    return p if p.exists() else None
