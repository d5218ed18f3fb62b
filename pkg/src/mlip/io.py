"""JSON/CSV serialization with atomic writes.

CSV: ``,`` delimiter, ``.`` decimal, LF line endings, floats with 17
significant digits so values round-trip exactly.
"""

from __future__ import annotations

import json
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

TRACE_HEADER = ("t", "domain", "p", "L", "p_zmp", "u_cmd")
STEP_HEADER = ("k", "p_R", "L_R", "u_R", "w_p", "w_L")
PHASE_HEADER = ("t", "domain", "p", "L", "p_zmp")
REFERENCE_HEADER = ("t", "x_com_ref", "v_com_ref", "p_zmp_ref", "theta_st_ref", "theta_sw_ref")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def json_text(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True, default=_default) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to ``path`` via a temp file in the same directory + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_artifacts(out_dir: str | os.PathLike, artifacts: dict[str, str]) -> list[Path]:
    """Write every artifact atomically; nothing is written until all are rendered."""
    return [atomic_write(Path(out_dir) / name, text) for name, text in artifacts.items()]


def load_json(path: str | os.PathLike) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def packaged_config(name: str) -> dict:
    """Load one of the JSON configs shipped in ``mlip/configs``."""
    text = resources.files("mlip").joinpath("configs", name).read_text(encoding="utf-8")
    return json.loads(text)


def read_csv(path: str | os.PathLike) -> tuple[list[str], list[list[str]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]
