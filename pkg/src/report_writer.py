import csv
import dataclasses
import io
import json
import os
from fractions import Fraction

import numpy as np

from .constants import SCHEMA_VERSION


class ReportEncoder(json.JSONEncoder):
    """JSON encoder for fractions, numpy values, sets and dataclasses."""
    def default(self, obj):
        if isinstance(obj, Fraction):
            return float(obj)
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (set, frozenset)):
            return sorted(obj)
        if hasattr(obj, "to_dict"):
            return obj.to_dict()
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return dataclasses.asdict(obj)
        return super().default(obj)


def dumps_report(report) -> str:
    """Sorted keys, indent 2 and a schema_version field on every report"""
    if isinstance(report, dict) and "schema_version" not in report:
        report = dict(report, schema_version=SCHEMA_VERSION)
    return json.dumps(report, cls=ReportEncoder, indent=2, sort_keys=True)


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, Fraction):
        return repr(float(value))
    return value


def rows_to_csv(rows, columns=None) -> str:
    """Rows are dicts; missing cells stay empty and extra columns follow in first-seen order"""
    rows = [row.to_dict() if hasattr(row, "to_dict") else dict(row) for row in rows]
    if columns is None:
        columns = []
    columns = list(columns)
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_cell(row.get(column)) for column in columns])
    return buffer.getvalue()


class ReportWriter:
    def __init__(self, output_dir=None):
        self.output_dir = output_dir
        if output_dir and not os.path.exists(output_dir):
            os.makedirs(output_dir)

    def write_json(self, stem, report, stream=None):
        """Write <stem>.json to the output directory, or to ``stream`` when there is none"""
        text = dumps_report(report)
        if not self.output_dir:
            if stream is not None:
                stream.write(text + "\n")
            return None
        path = os.path.join(self.output_dir, f"{stem}.json")
        with open(path, 'w') as f:
            f.write(text + "\n")
        return path

    def write_csv(self, stem, rows, columns=None, stream=None):
        text = rows_to_csv(rows, columns)
        if not self.output_dir:
            if stream is not None:
                stream.write(text)
            return None
        path = os.path.join(self.output_dir, f"{stem}.csv")
        with open(path, 'w', newline='') as f:
            f.write(text)
        return path
