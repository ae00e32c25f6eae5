"""Line-delimited JSON helpers with stable 9-significant-digit floats.

Every float is rounded to 9 significant digits before it is written, so a
file read back and written again is byte-identical.
"""

import json
import math
from pathlib import Path

SIG_DIGITS = 9


def fmt_float(v) -> float:
    """Round to ``SIG_DIGITS`` significant digits (idempotent)."""
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"cannot serialize non-finite value {v}")
    q = float(f"{v:.{SIG_DIGITS}g}")
    return 0.0 if q == 0.0 else q


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def write_jsonl(path, records) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps(rec))
            fh.write("\n")


def read_jsonl(path) -> list:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed record: {exc}") from exc
    return out
