'''
Writes the files of a run and rebuilds a RunReport from them

All files are deterministic functions of the report: CSVs use RFC-4180
framing with CRLF line ends and JSON is written with sorted keys, so equal
runs give byte-identical artifacts.
'''
from json import JSONEncoder
import json
import logging
import os

import numpy as np
import pandas as pd

from microgrid.config import Scenario, ValidationException
from microgrid.harness import build_report


logger = logging.getLogger(__name__)


class Files:
    CONFIG = 'config.json'
    VOLTAGE = 'voltage_trace.csv'
    ELECTIONS = 'election_trace.csv'
    COSTS = 'cost_report.csv'
    COST_CURVE = 'cost_curve.csv'
    DAILY = 'daily_voltage.csv'
    CHAIN = 'chain_dump.jsonl'
    SUMMARY = 'summary.json'

    ALL = (CONFIG, VOLTAGE, ELECTIONS, COSTS, COST_CURVE, DAILY, CHAIN, SUMMARY)


class ReportEncoder(JSONEncoder):

    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        return o.__dict__



def emit_artifacts(report, out_dir):
    '''
    Writes every artifact of the report into out_dir and returns their paths

    :raises ArtifactException: if a file cannot be written
    '''
    try:
        os.makedirs(out_dir, exist_ok=True)
        paths = {name: os.path.join(out_dir, name) for name in Files.ALL}

        _write_json(paths[Files.CONFIG], report.scenario.to_dict())
        _write_csv(paths[Files.VOLTAGE], report.voltage)
        _write_csv(paths[Files.ELECTIONS], report.elections)
        _write_csv(paths[Files.COSTS], report.costs)
        _write_csv(paths[Files.COST_CURVE], report.cost_curve)
        _write_csv(paths[Files.DAILY], report.daily_stats)
        with open(paths[Files.CHAIN], mode='w', encoding='utf-8', newline='\n') as f:
            for block in report.chain_dump:
                f.write(json.dumps(block, sort_keys=True, cls=ReportEncoder) + '\n')
        _write_json(paths[Files.SUMMARY], report.summary())
    except OSError as e:
        raise ArtifactException('cannot write artifacts to {}: {}'.format(out_dir, e)) from e

    logger.info(f'wrote {len(paths)} artifacts to {out_dir}')
    return paths


def load_report(out_dir):
    '''
    Returns the RunReport recomputed from the artifacts in out_dir

    :raises ArtifactException: if a file is missing or malformed
    '''
    path = lambda name: os.path.join(out_dir, name)
    try:
        with open(path(Files.CONFIG), mode='r', encoding='utf-8') as f:
            scenario = Scenario(json.load(f))
        with open(path(Files.SUMMARY), mode='r', encoding='utf-8') as f:
            summary = json.load(f)
        with open(path(Files.CHAIN), mode='r', encoding='utf-8') as f:
            chain_dump = [json.loads(line) for line in f if line.strip()]

        voltage = _read_csv(path(Files.VOLTAGE), {'vsc': str})
        elections = _read_csv(path(Files.ELECTIONS), {'elected': str, 'ders': str, 'demands': str})
        costs = _read_csv(path(Files.COSTS), {'agent': str})
    except (OSError, ValueError, ValidationException) as e:
        raise ArtifactException('cannot load the report in {}: {}'.format(out_dir, e)) from e

    try:
        return build_report(scenario, voltage, elections, costs, chain_dump, summary.get('chain'))
    except (KeyError, ValueError, TypeError) as e:
        raise ArtifactException('malformed report in {}: {}'.format(out_dir, e)) from e


def _write_csv(path, frame):
    frame.to_csv(path, index=False, lineterminator='\r\n', encoding='utf-8')


def _write_json(path, values):
    with open(path, mode='w', encoding='utf-8', newline='\n') as f:
        f.write(json.dumps(values, sort_keys=True, indent=2, cls=ReportEncoder) + '\n')


def _read_csv(path, dtypes):
    return pd.read_csv(path, dtype=dtypes, keep_default_na=False, float_precision='round_trip')



########## Exceptions ##########
class ArtifactException(Exception):
    pass
