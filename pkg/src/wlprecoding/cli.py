"""Command line experiment runner.

Examples
--------
::

    wlprecoding --preset fig1 --out fig1.csv
    wlprecoding --preset fig3 --trials 200 --out counts.csv
    wlprecoding --config my_scenario.json --out run.json --format json

Every run writes the result table plus ``<out>.config.json``, which records
the fully resolved experiment and can be fed back through ``--config`` to
reproduce the table byte for byte.
"""

import argparse
import csv
from dataclasses import dataclass, field, replace
import io
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .errors import InvalidConfig
from .precoding import METHODS
from .simulate import ScenarioConfig, run_sweep, run_selection_census, DEFAULT_SNR_GRID

__all__ = ['ExperimentSpec', 'CensusConfig', 'PRESETS', 'preset', 'validate_config',
           'run_experiment', 'main', 'COLUMNS']

logger = logging.getLogger(__name__)

COLUMNS = ('method', 'x_value', 'avg_ser', 'avg_sum_rate_bits',
           'avg_selected_users', 'n_trials', 'seed')

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
MAX_FAILURE_RATE = 0.01

_WL_DIM = {'wl_zf', 'wl_mmse', 'wl_mmse_iter'}     # K <= 2M
_LIN_DIM = {'zf', 'mmse', 'mmse_iter'}             # K <= M


@dataclass
class CensusConfig:
    """Selected-user census over a grid of candidate counts."""
    M_values: tuple = (2, 4)
    K_T_grid: tuple = (2, 5, 10, 20, 50, 100, 200, 500, 1000)
    alpha: float = 0.5
    n_trials: int = 1000
    algorithms: tuple = ('sus', 'susom')
    seed: int = 0

    def to_dict(self):
        return {'M_values': list(self.M_values), 'K_T_grid': list(self.K_T_grid),
                'alpha': self.alpha, 'n_trials': self.n_trials,
                'algorithms': list(self.algorithms), 'seed': self.seed}


@dataclass
class ExperimentSpec:
    scenarios: list = field(default_factory=list)
    census: CensusConfig = None
    metrics: tuple = ('ser', 'rate')
    preset: str = None
    output_path: str = None
    output_format: str = 'csv'

    def to_dict(self):
        return {'version': __version__, 'preset': self.preset,
                'metrics': list(self.metrics),
                'scenarios': [s.to_dict() for s in self.scenarios],
                'census': self.census.to_dict() if self.census else None}


def _fig1():
    methods = ['mrt', 'zf', 'mmse', 'mmse_iter', 'mslnr',
               'wl_mrt', 'wl_zf', 'wl_mmse', 'wl_mmse_iter', 'wl_mslnr']
    return ExperimentSpec([ScenarioConfig(M=4, K=4, method=m) for m in methods],
                          metrics=('ser',))


def _fig2():
    pam = ['wl_mrt', 'wl_zf', 'wl_mmse', 'wl_mmse_iter', 'wl_mslnr',
           'zf', 'mmse', 'mmse_iter', 'mslnr']
    scen = [ScenarioConfig(M=4, K=4, method=m) for m in pam]
    scen += [ScenarioConfig(M=4, K=2, modulation='qam', order=16, method=m)
             for m in ('zf', 'mmse')]
    return ExperimentSpec(scen, metrics=('rate',))


def _fig3():
    return ExperimentSpec([], census=CensusConfig(), metrics=())


def _fig4():
    methods = ['mrt', 'mslnr', 'wl_zf', 'wl_mmse', 'wl_mmse_iter', 'wl_mslnr']
    return ExperimentSpec([ScenarioConfig(M=4, K=100, selection='susom', method=m)
                           for m in methods], metrics=('ser',))


def _fig5():
    scen = [ScenarioConfig(M=4, K=100, selection='sus', method='mmse'),
            ScenarioConfig(M=4, K=100, selection='sus', method='wl_mmse'),
            ScenarioConfig(M=4, K=100, selection='susom', method='wl_mmse'),
            ScenarioConfig(M=4, K=100, selection='sus', method='mmse',
                           modulation='qam', order=16)]
    return ExperimentSpec(scen, metrics=('rate',))


PRESETS = {'fig1': _fig1, 'fig2': _fig2, 'fig3': _fig3, 'fig4': _fig4, 'fig5': _fig5}


def preset(name):
    """Fresh :class:`ExperimentSpec` for a named figure setup."""
    try:
        spec = PRESETS[name]()
    except KeyError:
        raise InvalidConfig("preset: unknown preset {0!r}, choose from {1}".format(
            name, sorted(PRESETS))) from None
    spec.preset = name
    return spec


def validate_config(spec):
    """Return a list of human-readable violations; empty means valid."""
    out = []
    for i, s in enumerate(spec.scenarios):
        where = 'scenarios[{0}] ({1})'.format(i, s.name)
        if s.method not in METHODS:
            out.append('{0}.method: unknown method {1!r}'.format(where, s.method))
        if s.M < 1 or s.K < 1:
            out.append('{0}.M/K: need M >= 1 and K >= 1'.format(where))
        if s.modulation not in ('pam', 'qam'):
            out.append("{0}.modulation: must be 'pam' or 'qam'".format(where))
        else:
            try:
                s.constellation()
            except ValueError as exc:
                out.append('{0}.order: {1}'.format(where, exc))
        if s.modulation == 'qam' and s.method not in ('zf', 'mmse'):
            out.append("{0}.method: QAM links support only 'zf' and 'mmse'".format(where))
        if s.selection not in (None, 'sus', 'susom'):
            out.append("{0}.selection: must be null, 'sus' or 'susom'".format(where))
        if not 0.0 <= s.alpha < 1.0:
            out.append('{0}.alpha: must lie in [0, 1), got {1}'.format(where, s.alpha))
        if not s.snr_grid_db:
            out.append('{0}.snr_grid_db: grid is empty'.format(where))
        if s.n_channels < 1 or s.n_symbols < 1:
            out.append('{0}.n_channels/n_symbols: must be >= 1'.format(where))
        if not s.tau > 0:
            out.append('{0}.tau: must be > 0'.format(where))
        # served users: K itself, or the selection's upper bound
        served = {None: s.K, 'sus': min(s.K, s.M),
                  'susom': min(s.K, 2 * s.M)}.get(s.selection, s.K)
        if s.method in _WL_DIM and served > 2 * s.M:
            out.append('{0}.K: {1} needs K <= 2M (K={2}, M={3})'.format(
                where, s.method, served, s.M))
        if s.method in _LIN_DIM and served > s.M:
            out.append('{0}.K: linear {1} needs K <= M (K={2}, M={3})'.format(
                where, s.method, served, s.M))
    c = spec.census
    if c is not None:
        if not c.K_T_grid or min(c.K_T_grid) < 1:
            out.append('census.K_T_grid: must be a nonempty list of counts >= 1')
        if not c.M_values or min(c.M_values) < 1:
            out.append('census.M_values: must be a nonempty list of counts >= 1')
        if not 0.0 <= c.alpha < 1.0:
            out.append('census.alpha: must lie in [0, 1), got {0}'.format(c.alpha))
        if c.n_trials < 1:
            out.append('census.n_trials: must be >= 1')
        bad = set(c.algorithms) - {'sus', 'susom'}
        if bad:
            out.append('census.algorithms: unknown {0}'.format(sorted(bad)))
    if not spec.scenarios and c is None:
        out.append('scenarios: nothing to run')
    if spec.output_format not in ('csv', 'json'):
        out.append("output_format: must be 'csv' or 'json'")
    return out


def _num(x):
    if x is None or math.isnan(x):
        return None
    return float(x)


def _rows(spec):
    rows = []
    failure = 0.0
    for s in spec.scenarios:
        res = run_sweep(s, ser='ser' in spec.metrics, rate='rate' in spec.metrics)
        failure = max(failure, res.failure_rate)
        for p in res.points:
            rows.append({'method': s.name, 'x_value': p.x_value,
                         'avg_ser': _num(p.avg_ser),
                         'avg_sum_rate_bits': _num(p.avg_sum_rate),
                         'avg_selected_users': _num(p.avg_selected_users),
                         'n_trials': p.n_trials, 'seed': s.seed})
    c = spec.census
    if c is not None:
        for M in c.M_values:
            counts = run_selection_census(M, c.K_T_grid, c.alpha, c.n_trials,
                                          c.algorithms, c.seed)
            for alg in c.algorithms:
                for K_T, v in zip(c.K_T_grid, counts[alg]):
                    rows.append({'method': '{0}-M{1}'.format(alg, M), 'x_value': float(K_T),
                                 'avg_ser': None, 'avg_sum_rate_bits': None,
                                 'avg_selected_users': float(v),
                                 'n_trials': c.n_trials, 'seed': c.seed})
    return rows, failure


def _format(rows, fmt):
    if fmt == 'json':
        return json.dumps({'columns': list(COLUMNS), 'rows': rows}, indent=1) + '\n'
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(['' if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                    for c in COLUMNS])
    return buf.getvalue()


def run_experiment(spec):
    """Validate, run and write one experiment.

    Returns
    -------
    int
        Exit status: 0 on success, 3 when more than 1% of channel
        realizations had to be skipped as numerically degenerate.

    Raises
    ------
    InvalidConfig
        If :func:`validate_config` reports violations.
    OSError
        If the output cannot be written.
    """
    problems = validate_config(spec)
    if problems:
        raise InvalidConfig(problems)
    rows, failure = _rows(spec)
    text = _format(rows, spec.output_format)
    if spec.output_path in (None, '-'):
        sys.stdout.write(text)
    else:
        with open(spec.output_path, 'w', newline='') as fh:
            fh.write(text)
        with open(spec.output_path + '.config.json', 'w') as fh:
            json.dump(spec.to_dict(), fh, indent=1)
            fh.write('\n')
    if failure > MAX_FAILURE_RATE:
        logger.error("%.1f%% of realizations failed numerically", 100 * failure)
        return EXIT_NUMERICAL
    return EXIT_OK


def load_config(path):
    """Read a flat scenario document or a recorded experiment sidecar."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig('config: not valid JSON ({0})'.format(exc)) from None
    if not isinstance(doc, dict):
        raise InvalidConfig('config: top level must be an object')
    try:
        if 'scenarios' in doc or 'census' in doc:
            census = doc.get('census')
            return ExperimentSpec(
                [ScenarioConfig.from_dict(s) for s in doc.get('scenarios', [])],
                CensusConfig(**{k: tuple(v) if isinstance(v, list) else v
                                for k, v in census.items()}) if census else None,
                tuple(doc.get('metrics', ('ser', 'rate'))), doc.get('preset'))
        doc = dict(doc)
        metrics = tuple(doc.pop('metrics', ('ser', 'rate')))
        return ExperimentSpec([ScenarioConfig.from_dict(doc)], metrics=metrics)
    except (KeyError, TypeError) as exc:
        raise InvalidConfig('config: {0}'.format(exc)) from None


def _snr_grid(old, lo, hi, step):
    lo = old[0] if lo is None else lo
    hi = old[-1] if hi is None else hi
    if step is None:
        step = old[1] - old[0] if len(old) > 1 else 1.0
    if step <= 0:
        raise InvalidConfig('snr-step: must be > 0')
    return tuple(float(x) for x in np.round(np.arange(lo, hi + step / 2, step), 10))


def apply_overrides(spec, args):
    scen = []
    for s in spec.scenarios:
        kw = {}
        if args.seed is not None:
            kw['seed'] = args.seed
        if args.trials is not None:
            kw['n_channels'] = args.trials
        if args.symbols is not None:
            kw['n_symbols'] = args.symbols
        if args.alpha is not None:
            kw['alpha'] = args.alpha
        if any(v is not None for v in (args.snr_min, args.snr_max, args.snr_step)):
            kw['snr_grid_db'] = _snr_grid(s.snr_grid_db or DEFAULT_SNR_GRID,
                                          args.snr_min, args.snr_max, args.snr_step)
        scen.append(replace(s, **kw))
    spec.scenarios = scen
    if spec.census is not None:
        kw = {}
        if args.seed is not None:
            kw['seed'] = args.seed
        if args.trials is not None:
            kw['n_trials'] = args.trials
        if args.alpha is not None:
            kw['alpha'] = args.alpha
        spec.census = replace(spec.census, **kw)
    return spec


def build_parser():
    p = argparse.ArgumentParser(
        prog='wlprecoding',
        description='Monte Carlo experiments for widely linear multiuser '
                    'precoding and semi-orthogonal user selection.')
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument('--preset', choices=sorted(PRESETS), help='figure setup to run')
    src.add_argument('--config', help='JSON scenario file or a recorded .config.json')
    p.add_argument('--out', default='-', help="output file ('-' for stdout)")
    p.add_argument('--format', choices=('csv', 'json'), default='csv')
    p.add_argument('--seed', type=int)
    p.add_argument('--trials', type=int, help='channel realizations per point')
    p.add_argument('--symbols', type=int, help='symbols per user per realization')
    p.add_argument('--alpha', type=float, help='selection pruning threshold')
    p.add_argument('--snr-min', type=float)
    p.add_argument('--snr-max', type=float)
    p.add_argument('--snr-step', type=float)
    p.add_argument('-v', '--verbose', action='store_true')
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        spec = preset(args.preset) if args.preset else load_config(args.config)
        spec = apply_overrides(spec, args)
        spec.output_path = args.out
        spec.output_format = args.format
        return run_experiment(spec)
    except InvalidConfig as exc:
        for v in exc.violations:
            print('invalid config: {0}'.format(v), file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print('error: {0}'.format(exc), file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
