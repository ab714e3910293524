"""Plain-text file formats: event datasets and reconstruction tables.

Both formats are UTF-8 text with LF line endings and `# key=value` header
lines, followed by tab-separated numeric records.  Floats are written with
17 significant digits so that write -> read -> write reproduces a file
byte for byte.
"""

import numpy as np

from .simulate import Dataset

DATASET_VERSION = 1


class DataFormatError(ValueError):
    """Raised when a data file does not conform to the expected format."""


def _format_float(v):
    return "%.16e" % float(v)


def save_dataset(path, data):
    """Write a Dataset in the versioned text format."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# format_version={DATASET_VERSION}\n")
        f.write(f"# state={data.state_desc}\n")
        f.write(f"# eta={data.eta!r}\n")
        f.write(f"# seed={data.seed}\n")
        f.write(f"# phases={data.phases}\n")
        f.write(f"# per_phase={data.per_phase}\n")
        np.savetxt(f, np.column_stack([data.thetas, data.xs]), fmt="%.16e", delimiter="\t", newline="\n")


def _read_headers(f):
    headers = {}
    pos = f.tell()
    while True:
        line = f.readline()
        if not line.startswith("#"):
            f.seek(pos)
            return headers
        key, sep, value = line[1:].strip().partition("=")
        if not sep:
            raise DataFormatError(f"malformed header line {line.strip()!r}")
        headers[key.strip()] = value.strip()
        pos = f.tell()


def load_dataset(path):
    """Read a Dataset written by save_dataset."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            headers = _read_headers(f)
            try:
                if int(headers["format_version"]) != DATASET_VERSION:
                    raise DataFormatError(f"unsupported format_version {headers['format_version']}")
                meta = dict(
                    eta=float(headers["eta"]),
                    state_desc=headers["state"],
                    seed=int(headers["seed"]),
                    phases=int(headers["phases"]),
                    per_phase=int(headers["per_phase"]),
                )
            except KeyError as exc:
                raise DataFormatError(f"missing dataset header {exc}") from exc
            body = np.loadtxt(f, delimiter="\t", ndmin=2)
    except (OSError, ValueError) as exc:
        if isinstance(exc, DataFormatError):
            raise
        raise DataFormatError(f"cannot read dataset {path}: {exc}") from exc
    if body.size == 0 or body.shape[1] != 2:
        raise DataFormatError(f"dataset {path} has no theta/x records")
    return Dataset(thetas=body[:, 0], xs=body[:, 1], **meta)


def write_table(path, headers, rows):
    """Write a reconstruction/truth table.

    rows are (q, p, W, iterations, final_loglik) tuples; headers is an
    ordered mapping echoed as `# key=value` lines.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# format_version={DATASET_VERSION}\n")
        for key, value in headers.items():
            f.write(f"# {key}={value}\n")
        for q, p, w, iters, loglik in rows:
            f.write("%s\t%s\t%s\t%d\t%s\n"
                    % (_format_float(q), _format_float(p), _format_float(w), int(iters), _format_float(loglik)))


def read_table(path):
    """Read a table written by write_table; returns (headers, (n, 5) array)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            headers = _read_headers(f)
            body = np.loadtxt(f, delimiter="\t", ndmin=2)
    except (OSError, ValueError) as exc:
        if isinstance(exc, DataFormatError):
            raise
        raise DataFormatError(f"cannot read table {path}: {exc}") from exc
    if body.size == 0 or body.shape[1] != 5:
        raise DataFormatError(f"table {path} is not a 5-column reconstruction table")
    return headers, body
