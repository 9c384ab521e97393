"""CSV / JSON emission of sweep results.

CSV columns: ``receiver, grid_value, ber, ber_ci95, nmse, nmse_ci95, n_bits,
runtime_s``. With ``timing=False`` runtimes are written as 0 so repeated runs
are byte-identical.
"""

import csv
import io
import json
from dataclasses import asdict, fields

from .experiments import MetricRecord

CSV_COLUMNS = ("receiver", "grid_value", "ber", "ber_ci95", "nmse", "nmse_ci95", "n_bits",
               "runtime_s")


def _rows(records, timing):
    for r in records:
        d = asdict(r)
        if not timing:
            d["runtime_s"] = 0.0
        yield d


def emit_results(records, fmt: str, path, spec=None, timing: bool = True) -> None:
    """Write ``records`` (``MetricRecord`` or other dataclass rows) to ``path``."""
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    if fmt == "csv":
        buf = io.StringIO()
        cols = CSV_COLUMNS if isinstance(records[0], MetricRecord) else \
            tuple(f.name for f in fields(records[0]))
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for d in _rows(records, timing):
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in d.items()})
        text = buf.getvalue()
    elif fmt == "json":
        doc = {"records": list(_rows(records, timing))}
        if spec is not None:
            doc["spec"] = spec.to_dict()
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_records(path) -> list:
    """Read back the records of a JSON result file."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [MetricRecord(**d) for d in doc["records"]]
