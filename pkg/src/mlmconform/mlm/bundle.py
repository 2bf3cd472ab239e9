from __future__ import annotations

from pathlib import Path

from .errors import MlmError
from .model import Mlm
from .parser import parse_mlm
from .validate import validate_model


def load_bundle(files: dict[str, str]) -> tuple[list[Mlm], list[dict]]:
    """Parse a {filename: text} bundle into rules plus diagnostics.

    A file that fails to parse is left out and reported as an error;
    cross-rule findings come from :func:`validate_model`.
    """
    mlms, diagnostics = [], []
    for fname in sorted(files):
        try:
            mlms.append(parse_mlm(files[fname], strict=False))
        except MlmError as exc:
            diagnostics.append({"severity": "error", "file": fname, **exc.to_dict()})
    for d in validate_model(mlms):
        diagnostics.append({"file": None, **d.to_dict()})
    return mlms, diagnostics


def read_model_dir(path: str | Path) -> dict[str, str]:
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"model directory {root} does not exist")
    return {p.name: p.read_text(encoding="utf-8") for p in sorted(root.glob("*.mlm"))}


def format_diagnostic(d: dict) -> str:
    where = d.get("file") or d.get("mlm") or "-"
    if d.get("line") is not None:
        where += f":{d['line']}:{d['column']}"
    slot = f" [{d['slot']}]" if d.get("slot") else ""
    return f"{where}: {d['severity']} {d['code']}{slot}: {d['message']}"
