'''
Command line entry point

    microgrid run scenario.json [--seed S] [--mode M] [--out DIR]
    microgrid sweep scenario.json --param network.n_peers --values 1,2,3 [--jobs J]
    microgrid report DIR

Exit codes: 0 on success, 1 if artifacts cannot be written or read, 2 on an
invalid configuration and 3 when a run exceeds its desync budget.
'''
from concurrent.futures import ProcessPoolExecutor
import argparse
import logging
import os
import sys

from dotenv import load_dotenv

from microgrid.artifacts import ArtifactException, emit_artifacts, load_report
from microgrid.config import ConfigParseException, Modes, Scenario, ValidationException, load_config, parse_value
from microgrid.harness import DesyncBudgetExceeded, run


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ARTIFACT = 1
EXIT_CONFIG = 2
EXIT_DESYNC = 3

DEFAULT_OUT_DIR = 'runs'


def build_parser():
    parser = argparse.ArgumentParser(prog='microgrid', description='Fair VSC election in LV microgrids')
    parser.add_argument('--log-level', default=None, help='logging level, e.g. DEBUG or INFO')
    commands = parser.add_subparsers(dest='command', required=True)

    def scenario_args(command):
        command.add_argument('config', help='JSON scenario file')
        command.add_argument('--seed', type=int, default=None, help='overrides the scenario seed')
        command.add_argument('--mode', choices=Modes.ALL, default=None, help='overrides the scenario mode')
        command.add_argument('--out', default=None, help='artifact directory')

    scenario_args(commands.add_parser('run', help='run one scenario'))

    sweep = commands.add_parser('sweep', help='run a scenario for several values of one parameter')
    scenario_args(sweep)
    sweep.add_argument('--param', required=True, help='dotted parameter path, e.g. network.n_peers')
    sweep.add_argument('--values', required=True, help='comma separated values, parsed as JSON')
    sweep.add_argument('--jobs', type=int, default=1, help='simulations run in parallel')

    report = commands.add_parser('report', help='recompute the report of an artifact directory')
    report.add_argument('dir', help='artifact directory of a run')
    return parser


def load_scenario(args):
    scenario = load_config(args.config)
    if args.seed is not None:
        scenario = scenario.override('seed', args.seed)
    if args.mode is not None:
        scenario = scenario.override('mode', args.mode)
    return scenario


def run_and_emit(values, out_dir):
    '''
    Runs one scenario given as a dict and writes its artifacts; the unit of
    work of a sweep
    '''
    report = run(Scenario(values))
    emit_artifacts(report, out_dir)
    return report.summary()


def print_summary(title, summary, out_dir=None):
    print('\n' + '=' * 50)
    print(title)
    print('=' * 50)
    print(f"Mode: {summary['mode']}  seed: {summary['seed']}  periods: {summary['periods']}  DERs: {summary['u_total']}")
    if summary['max_fairness_gap'] is not None:
        print(f"Max fairness gap: {summary['max_fairness_gap']:.4f}")
    print(f"Overvoltage minutes: {summary['overvoltage_minutes']:.0f} "
          f"(without control: {summary['overvoltage_minutes_no_control']:.0f})")
    print(f"Undervoltage minutes: {summary['undervoltage_minutes']:.0f} "
          f"(without control: {summary['undervoltage_minutes_no_control']:.0f})")
    print(f"Max voltage: {summary['max_voltage']:.4f} PU "
          f"(without control: {summary['max_voltage_no_control']:.4f} PU)")
    if summary['costs']:
        print(f"Mean cost: {summary['costs']['fleet_mean_bits']:.0f} bits per DER and period "
              f"(lower bound {summary['costs']['analytic_lb']:.0f}, centralized {summary['costs']['analytic_c']:.0f})")
    if summary['chain']:
        print(f"Chain: {summary['chain']['blocks']} blocks, {summary['chain']['stale_blocks']} stale, "
              f"{summary['chain']['reorgs']} reorgs")
    mark = '✅' if summary['desyncs'] == 0 else '❌'
    print(f"{mark} Desyncs: {summary['desyncs']}")
    if out_dir:
        print(f"\nArtifacts: {out_dir}")


def command_run(args, out_root):
    scenario = load_scenario(args)
    out_dir = args.out or os.path.join(out_root, '{}-seed{}'.format(scenario.mode, scenario.seed))
    report = run(scenario)
    emit_artifacts(report, out_dir)
    print_summary('RUN SUMMARY', report.summary(), out_dir)
    return EXIT_OK


def command_sweep(args, out_root):
    scenario = load_scenario(args)
    out_root = args.out or out_root
    values = [parse_value(text) for text in args.values.split(',')]
    jobs = {}
    for value in values:
        variant = scenario.override(args.param, value)
        jobs['{}={}'.format(args.param, value)] = variant.to_dict()

    def out_dir(name):
        return os.path.join(out_root, name)

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {name: pool.submit(run_and_emit, job, out_dir(name)) for name, job in jobs.items()}
            summaries = {name: future.result() for name, future in futures.items()}
    else:
        summaries = {name: run_and_emit(job, out_dir(name)) for name, job in jobs.items()}

    for name, summary in summaries.items():
        print_summary('SWEEP {}'.format(name), summary, out_dir(name))
    return EXIT_OK


def command_report(args):
    report = load_report(args.dir)
    print_summary('REPORT', report.summary())
    return EXIT_OK


def main(argv=None):
    load_dotenv()
    args = build_parser().parse_args(argv)
    level = args.log_level or os.getenv('MICROGRID_LOG_LEVEL', 'INFO')
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO))
    out_root = os.getenv('MICROGRID_OUT_DIR', DEFAULT_OUT_DIR)

    try:
        if args.command == 'run':
            return command_run(args, out_root)
        if args.command == 'sweep':
            return command_sweep(args, out_root)
        return command_report(args)
    except (ConfigParseException, ValidationException) as e:
        logger.error(f'❌ invalid configuration: {e}')
        return EXIT_CONFIG
    except DesyncBudgetExceeded as e:
        logger.error(f'❌ {e}')
        return EXIT_DESYNC
    except ArtifactException as e:
        logger.error(f'❌ {e}')
        return EXIT_ARTIFACT


if __name__ == "__main__":
    sys.exit(main())
