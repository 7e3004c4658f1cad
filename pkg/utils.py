import io
import json
import math
import os
import tempfile

import numpy as np

OUTPUT_DIR = "output"


def json_safe(value):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def write_text_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path


def render_json(data):
    return json.dumps(json_safe(data), ensure_ascii=False, indent=2) + "\n"


def write_json(path, data):
    return write_text_atomic(path, render_json(data))


def render_csv(header, columns, fmt="%.12g"):
    buf = io.StringIO()
    np.savetxt(buf, np.column_stack(columns), fmt=fmt, delimiter=",", header=",".join(header), comments="")
    return buf.getvalue()


def write_csv(path, header, columns, fmt="%.12g"):
    return write_text_atomic(path, render_csv(header, columns, fmt))
