"""Reports and byte-stable JSON/CSV emission."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .isoperimetry import Check

FLOAT_DIGITS = 12


def fmt_float(x):
    """Float rounded to 12 significant digits (non-finite values as strings)."""
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return float(f"{x:.{FLOAT_DIGITS}g}")


def jsonable(obj):
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Check):
        return jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if dataclasses.is_dataclass(obj) and hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialise {type(obj).__name__}")


@dataclass
class Report:
    command: str
    config: dict
    payload: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    timestamp: str | None = None

    @property
    def ok(self):
        return all(c.passed for c in self.checks if c.asserted)

    def failed(self):
        return [c.name for c in self.checks if c.asserted and not c.passed]

    def to_dict(self):
        out = dict(self.payload)
        out.update(
            command=self.command,
            config=self.config,
            tool="isolab",
            version=__version__,
            timestamp=self.timestamp,
            checks=[c.to_dict() for c in self.checks],
            ok=self.ok,
        )
        return jsonable(out)


def dumps(report):
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


PROFILE_HEADER = ["n", "ball", "boundary", "ratio_num", "ratio_den", "ratio_float"]


def profile_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for r in rows:
        w.writerow([r.n, r.ball, r.boundary, r.ratio.numerator, r.ratio.denominator,
                    repr(fmt_float(float(r.ratio)))])
    return buf.getvalue()


def emit(text, path=None):
    """Write ``text`` to ``path`` (stdout when ``path`` is None or '-')."""
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
