"""Result tables and their CSV form.

A CSV file starts with ``#``-prefixed metadata lines (config echo, config hash,
code version, sign convention), then a header row, then data rows. Floats are
written with 17 significant digits so they round-trip exactly. Nothing
time-dependent goes into the file, so identical runs give identical bytes.
"""
import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

CONVENTION = ("Jz=(n_excited-n_ground)/2 in the instantaneous diagonal frame; "
              "ground state <Jz>=-N/2; J- moves a boson from excited to ground mode")

COLUMNS = {
    "discrete": ("n", "success_probability", "lower_bound", "bound_valid", "max_step_ratio"),
    "meanfield": ("t", "jz", "re_jplus", "im_jplus", "p_a"),
    "exact": ("t", "jz", "re_jplus", "im_jplus", "p_a", "purity"),
    "readout": ("N", "required_p", "failure_probability"),
    "tmin": ("N", "T_min", "p_final", "certificate_lo", "certificate_hi", "required_p"),
    "sweep": ("N", "gamma_x", "gamma_z", "p_final", "failure_probability"),
}


def format_value(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    return "%.17g" % value


def config_hash(config_dict):
    canonical = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class ResultTable:
    mode: str
    rows: list
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self):
        return COLUMNS[self.mode]

    def __post_init__(self):
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise ValueError(f"row has {len(row)} fields, {self.mode} tables have {width}")

    def to_csv(self):
        from . import __version__

        out = io.StringIO()
        meta = {"mode": self.mode, "code_version": __version__, "convention": CONVENTION}
        meta.update(self.metadata)
        for key in sorted(meta):
            value = meta[key]
            if not isinstance(value, str):
                value = json.dumps(value, sort_keys=True, separators=(",", ":"))
            out.write(f"# {key}: {value}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return out.getvalue()

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        return path


def read_csv(path):
    """Parse a CSV written by ``ResultTable``; returns ``(metadata, columns, rows)``."""
    metadata = {}
    body = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                metadata[key] = value
            else:
                body.append(line)
    reader = csv.reader(body)
    columns = tuple(next(reader))
    rows = [[float(x) for x in row] for row in reader]
    return metadata, columns, rows
