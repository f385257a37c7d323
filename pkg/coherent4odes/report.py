"""
Deterministic serialization of reports.

JSON keys are sorted, floats use their shortest round-trip repr,
and non-finite floats are written as the strings "inf", "-inf" or "nan".
"""
import csv
from enum import Enum
import io
import json
import logging
import math
import os
import sys
import tempfile

import numpy as np

LOG = logging.getLogger(__name__)

SCHEMA_PATH = os.path.join(os.path.dirname(__file__), 'schemas',
                           'report.schema.json')


def load_schema():
    with open(SCHEMA_PATH, encoding='utf-8') as f:
        return json.load(f)


def to_json_data(obj):
    """Plain JSON data from nested reports, numpy values and enums."""
    if hasattr(obj, 'export_as_dict'):
        return to_json_data(obj.export_as_dict())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return dict((str(k), to_json_data(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [to_json_data(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return obj


def dumps(obj):
    return json.dumps(to_json_data(obj), sort_keys=True, indent=2,
                      allow_nan=False) + '\n'


def trajectory_csv(traj):
    """The ``t,x1,...,xn`` table of a trajectory."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    n = traj.states.shape[1]
    writer.writerow(['t'] + ['x%d' % k for k in range(1, n + 1)])
    for t, x in zip(traj.times, traj.states):
        writer.writerow([repr(float(t))] + [repr(float(v)) for v in x])
    return out.getvalue()


def write_output(text, path=None):
    """Write ``text`` to ``path`` atomically, or to stdout."""
    if path is None or path == '-':
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-',
                               suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
    LOG.debug('wrote %d characters to %s', len(text), path)
