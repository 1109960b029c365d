"""JSON/CSV persistence: complex-aware encoding, result records and atomic writes."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, is_dataclass
from datetime import datetime, timezone
from enum import Enum
from importlib import resources

import numpy as np

SCHEMA_VERSION = "1.0"


def to_jsonable(obj):
    """Recursively convert to plain JSON types; complex numbers become {"re", "im"}."""
    if isinstance(obj, (bool, str)) or obj is None:
        return obj
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: to_jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _hook(d):
    if set(d) == {"re", "im"}:
        return complex(d["re"], d["im"])
    return d


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True)


def loads(text: str):
    return json.loads(text, object_hook=_hook)


@dataclass
class ResultRecord:
    command: str
    inputs: dict
    outputs: dict
    paperRefs: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    schemaVersion: str = SCHEMA_VERSION

    def __post_init__(self):
        if not self.provenance:
            self.provenance = provenance()

    def to_json(self) -> str:
        return dumps(asdict(self))

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls(**loads(text))


def provenance() -> dict:
    from . import __version__

    return {"codeVersion": __version__, "timestamp": datetime.now(timezone.utc).isoformat()}


def schema() -> dict:
    text = resources.files("ptwell").joinpath("schemas/result_record.schema.json").read_text()
    return json.loads(text)


def validate(record: ResultRecord | dict) -> None:
    import jsonschema

    doc = json.loads(record.to_json()) if isinstance(record, ResultRecord) else record
    jsonschema.validate(doc, schema())


def atomic_write(path, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    atomic_write(path, csv_text(header, rows))


def write_record(path, record: ResultRecord) -> None:
    atomic_write(path, record.to_json() + "\n")


def to_jsonable_safe(obj):
    """to_jsonable with a string fallback for objects that have no JSON form."""
    try:
        return to_jsonable(obj)
    except TypeError:
        if isinstance(obj, dict):
            return {str(k): to_jsonable_safe(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [to_jsonable_safe(v) for v in obj]
        return repr(obj)
