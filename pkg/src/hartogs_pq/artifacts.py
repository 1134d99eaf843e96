"""Atomic CSV/JSON writers and the run manifest."""
import csv
import hashlib
import io
import json
import os
import tempfile

from . import __version__

SWEEP_HEADER = ["m", "lambda_nonmagnetic", "lambda_magnetic", "residual_nm", "residual_m",
                "iters_nm", "iters_m", "h"]
GROWTH_HEADER = ["width", "lambda", "strip_bound"]


def atomic_write(path, data):
    """Write bytes or text to ``path`` through a temp file in the same directory."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def json_text(obj):
    return json.dumps(_plain(obj), indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def _plain(obj):
    """Non-finite floats become strings so the output stays strict JSON."""
    if isinstance(obj, float):
        if obj != obj:
            return "nan"
        if obj in (float("inf"), float("-inf")):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _plain(obj.item())
    return obj


def sweep_rows(sweep):
    return [(r.m, r.lambda_nonmagnetic, r.lambda_magnetic, r.residual_nm, r.residual_m,
             r.iters_nm, r.iters_m, sweep.h) for r in sweep.rows]


def write_sweep_csv(path, sweep):
    rows = [[float(v) if i not in (0, 5, 6) else v for i, v in enumerate(r)]
            for r in sweep_rows(sweep)]
    return atomic_write(path, csv_text(SWEEP_HEADER, rows))


def write_growth_csv(path, report):
    return atomic_write(path, csv_text(GROWTH_HEADER, [[float(v) for v in r]
                                                       for r in report.csv_rows()]))


def write_json(path, obj):
    return atomic_write(path, json_text(obj))


def file_sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_manifest(out_dir, subcommand, cfg_hash, seeds, outputs, backend):
    """Manifest without timestamps so identical runs give identical bytes."""
    man = {"tool": "hartogs_pq", "version": __version__, "subcommand": subcommand,
           "config_sha256": cfg_hash, "seeds": seeds, "backend": backend,
           "outputs": {os.path.basename(p): file_sha256(p) for p in sorted(outputs)}}
    return write_json(os.path.join(out_dir, "manifest.json"), man)
