"""
GapWiz Command Line
Certified upper bounds for the rank-n max-cut integrality gap, bad instances
built from certificates, and plot data for the known kernels
"""

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import certificate, config
from .cutpoly import WeightedInstance, load_custom_inequalities, max_cut_exact
from .exceptions import (
    DomainError, GapWizError, InvalidConfigurationError, SampleCountError,
    get_error_category, get_exit_code
)
from .gapbound import bound_loop, default_grid, point_mass_certificate, verify_certificate
from .instances import MODE_HEURISTIC, instance_from_certificate, ratio_trend, write_ratio_csv
from .kernels import (
    alpha_gw, avidor_zwick_mix, best_single_degree, gw_kernel, ratio_curve, windmill_reynolds
)
from .logger import RunLogger, setup_logging

logger = logging.getLogger(__name__)

STOCHASTIC_COMMANDS = ('bound', 'instance', 'trend')


# ==================== RUN CONFIGURATION ====================

@dataclass
class RunConfig:
    """Everything one CLI invocation needs, checked before any work starts"""
    command: str
    n: int = 4
    degree: int = config.EXPLORATION_DEGREE
    grid_size: int = config.DEFAULT_GRID_SIZE
    families: List[str] = field(default_factory=lambda: list(config.DEFAULT_FAMILIES))
    rounds: int = config.DEFAULT_ROUNDS
    seed: Optional[int] = None
    precision: int = config.VERIFY_DIGITS
    samples: int = config.DEFAULT_MC_SAMPLES
    cells: List[int] = field(default_factory=lambda: list(config.DEFAULT_CELLS))
    k_check: Optional[int] = None
    require_tail: bool = False
    restarts: int = config.SEARCH_RESTARTS
    threads: Optional[int] = None
    input: Optional[str] = None
    custom: Optional[str] = None
    out: Optional[str] = None
    report: Optional[str] = None
    format: str = 'json'
    t: Optional[float] = None

    def validate(self):
        if self.command in STOCHASTIC_COMMANDS and self.seed is None:
            raise InvalidConfigurationError('seed', 'missing', config.ERROR_MESSAGES['missing_seed'])
        if self.n < 2:
            raise DomainError("n", self.n, "integers >= 2")
        if self.degree < 1:
            raise DomainError("degree", self.degree, "integers >= 1")
        if self.grid_size < 2:
            raise DomainError("grid size", self.grid_size, "integers >= 2")
        if self.rounds < 0:
            raise DomainError("rounds", self.rounds, "integers >= 0")
        if self.precision < 15:
            raise DomainError("precision", self.precision, "integers >= 15")
        if self.k_check is not None and self.k_check < self.degree and self.command == 'bound':
            raise DomainError("K_check", self.k_check, f"integers >= degree {self.degree}")
        if self.command in ('instance', 'trend') and self.samples < config.MIN_AZ_SAMPLES:
            raise SampleCountError(self.samples, config.MIN_AZ_SAMPLES)
        if any(m < 1 for m in self.cells):
            raise DomainError("cells", self.cells, "positive integers")
        if self.format not in config.OUTPUT_FORMATS:
            raise InvalidConfigurationError('format', self.format, ' or '.join(config.OUTPUT_FORMATS))
        unknown = [f for f in self.families if not config.is_supported_family(f)]
        if unknown:
            raise InvalidConfigurationError('families', ','.join(unknown), ', '.join(config.get_family_names()))
        return self

    @classmethod
    def from_args(cls, args):
        families = [f.strip() for f in (args.families or '').split(',') if f.strip()]
        return cls(
            command=args.command,
            n=args.n,
            degree=args.degree,
            grid_size=args.grid_size,
            families=families if args.families is not None else list(config.DEFAULT_FAMILIES),
            rounds=args.rounds,
            seed=args.seed,
            precision=args.precision,
            samples=args.samples,
            cells=args.cells or list(config.DEFAULT_CELLS),
            k_check=args.k_check,
            require_tail=args.require_tail,
            restarts=args.restarts,
            threads=args.threads,
            input=getattr(args, 'input', None),
            custom=args.custom,
            out=args.out,
            report=args.report,
            format=args.format,
            t=args.t,
        ).validate()


# ==================== OUTPUT HELPERS ====================

def _fmt(value):
    return f"{float(value):.{config.CONSOLE_DIGITS}f}"


def _write_json(path, data):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=config.JSON_INDENT)
        f.write('\n')


def _write_rows(path, fields, rows):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


def kernel_rows(kernel, grid_size=config.DEFAULT_GRID_SIZE):
    """Plot rows t, K(t), (1 - K(t)) / (1 - t) on [-1, GRID_TOP]"""
    ts = np.linspace(-1.0, config.GRID_TOP, grid_size)
    columns = [ts, kernel.evaluate(ts), ratio_curve(kernel.evaluate, ts)]
    return [dict(zip(config.KERNEL_CSV_FIELDS, (repr(float(v)) for v in values)))
            for values in zip(*columns)]


def _progress(rnd, max_rounds, bound):
    logger.info("bound loop %d/%d: %.9f", rnd, max_rounds, bound)


# ==================== COMMANDS ====================

def cmd_bound(cfg: RunConfig):
    """Bound loop, verification, certificate file"""
    extra = load_custom_inequalities(cfg.custom) if cfg.custom else []
    result = bound_loop(cfg.n, cfg.degree, default_grid(cfg.grid_size), cfg.families, cfg.rounds,
                        seed=cfg.seed, restarts=cfg.restarts, threads=cfg.threads,
                        extra_inequalities=extra, progress_callback=_progress, k_check=cfg.k_check)
    cert = result.certificate

    bound, report = verify_certificate(cert, cfg.precision, cert.k_check, cfg.require_tail)
    cert.verification_level = report.level
    out = cfg.out or f"bound_n{cfg.n}.json"
    certificate.save(cert, out)

    print(f"n = {cfg.n}, degree = {cfg.degree}, rounds = {len(result.history) - 1}")
    print(f"LP bound:       {_fmt(result.bound)}")
    print(f"verified bound: {_fmt(bound)} ({report.level})")
    print(f"constraints:    {len(cert.constraints)}")
    print(f"certificate:    {out}")
    if cfg.report:
        _write_rows(cfg.report, config.KERNEL_CSV_FIELDS, kernel_rows(result.kernel, cfg.grid_size))
        print(f"plot data:      {cfg.report}")
    return bound


def cmd_verify(cfg: RunConfig):
    """Re-check a certificate file"""
    cert = certificate.load(cfg.input)
    bound, report = verify_certificate(cert, cfg.precision, cfg.k_check, cfg.require_tail)

    for step in report.steps:
        mark = 'ok' if step.ok else 'FAILED'
        print(f"  step {step.step} {step.name:<12} {mark}  {step.detail}")
    print(f"verified bound: {_fmt(bound)} ({report.level}, K_check = {report.k_check})")
    if cfg.out:
        _write_json(cfg.out, report.to_dict())
    return bound


def _instance_output(cfg, report):
    out = cfg.out or f"instance_m{report.m}.json"
    report.instance.save(out)
    if cfg.report:
        write_ratio_csv(cfg.report, [report])
    return out


def cmd_instance(cfg: RunConfig):
    """Weighted instance from a certificate's grid weights"""
    cert = certificate.load(cfg.input)
    m = cfg.cells[-1]
    report = instance_from_certificate(cert, m, cfg.samples, cfg.seed, threads=cfg.threads)
    out = _instance_output(cfg, report)

    print(f"cells:     {report.m}")
    print(f"sdp1:      {_fmt(report.sdp1)} [{report.sdp1_mode}]")
    print(f"sdp{cert.n}:      {_fmt(report.sdpn)} [{MODE_HEURISTIC}]")
    print(f"ratio:     {_fmt(report.ratio)}")
    if report.noise:
        print(f"noise:     {_fmt(report.noise)}")
    print(f"instance:  {out}")
    return report.ratio


def cmd_trend(cfg: RunConfig):
    """Ratios along nested refinements"""
    cert = certificate.load(cfg.input)
    reports = ratio_trend(cert, cfg.cells, cfg.samples, cfg.seed, threads=cfg.threads)
    out = cfg.out or ('trend.csv' if cfg.format == 'csv' else 'trend.json')
    if cfg.format == 'csv':
        write_ratio_csv(out, reports)
    else:
        _write_json(out, [r.row() for r in reports])

    print(f"{'m':>5} {'sdp1':>12} {'sdpn':>12} {'ratio':>10}  mode")
    for r in reports:
        print(f"{r.m:>5} {_fmt(r.sdp1):>12} {_fmt(r.sdpn):>12} {_fmt(r.ratio):>10}  {r.sdp1_mode}")
    print(f"trend:     {out}")
    return reports[-1].ratio


def cmd_maxcut(cfg: RunConfig):
    """Exact sdp_1 of an instance file"""
    instance = WeightedInstance.load(cfg.input)
    value, assignment = max_cut_exact(instance)
    print(f"vertices:  {instance.n_vertices}")
    print(f"sdp1:      {_fmt(value)}")
    print(f"cut:       {_fmt(value / 4.0)}")
    print("assignment: " + ' '.join('+' if s > 0 else '-' for s in assignment))
    if cfg.out:
        _write_json(cfg.out, {'sdp1': repr(float(value)),
                              'assignment': [int(s) for s in assignment]})
    return value


def cmd_constants(cfg: RunConfig):
    """alpha_GW, t_GW, alpha_2 and the single-degree table"""
    gw = alpha_gw()
    table = []
    for n in config.CONSTANTS_TABLE_DIMENSIONS:
        best = best_single_degree(n, gw.minimizer)
        table.append({'n': n, 'k': best.k, 'objective': repr(best.objective)})

    print(f"alpha_GW:  {_fmt(gw.value)}")
    print(f"t_GW:      {_fmt(gw.minimizer)}")
    print(f"alpha_2:   {_fmt(config.ALPHA_2_CLOSED_FORM)}")
    print(f"{'n':>3} {'k':>3} {'1 - R_k(t_GW)':>14}")
    for row in table:
        print(f"{row['n']:>3} {row['k']:>3} {_fmt(float(row['objective'])):>14}")

    if cfg.out:
        if cfg.format == 'csv':
            _write_rows(cfg.out, ['n', 'k', 'objective'], table)
        else:
            _write_json(cfg.out, {'alpha_gw': repr(gw.value), 't_gw': repr(gw.minimizer),
                                  'alpha_2': repr(config.ALPHA_2_CLOSED_FORM), 'single_degree': table})
    return gw.value


def windmill_rows(mix, grid_size=config.WINDMILL_GRID_SIZE):
    """Plot rows for the three kernels on [-1, GRID_TOP]"""
    ts = np.linspace(-1.0, config.GRID_TOP, grid_size)
    gw = gw_kernel(ts)
    wm = windmill_reynolds(ts)
    mixed = mix.kernel(ts)
    columns = [ts, gw, wm, mixed, ratio_curve(gw_kernel, ts), ratio_curve(windmill_reynolds, ts),
               ratio_curve(mix.kernel, ts)]
    return [dict(zip(config.WINDMILL_CSV_FIELDS, (repr(float(v)) for v in values)))
            for values in zip(*columns)]


def cmd_windmill(cfg: RunConfig):
    """Mixed windmill / halfspace kernel and its plot data"""
    mix = avidor_zwick_mix()
    grid_size = cfg.grid_size if cfg.grid_size != config.DEFAULT_GRID_SIZE else config.WINDMILL_GRID_SIZE
    rows = windmill_rows(mix, grid_size)
    out = cfg.out or 'windmill.csv'
    _write_rows(out, config.WINDMILL_CSV_FIELDS, rows)

    print(f"lambda*:   {_fmt(mix.lam)}")
    print(f"alpha:     {_fmt(mix.alpha)} (closed form {_fmt(config.ALPHA_2_CLOSED_FORM)})")
    print(f"worst t:   {_fmt(mix.worst_t)}")
    print(f"plot data: {out} ({len(rows)} rows)")
    return mix.alpha


def cmd_pointmass(cfg: RunConfig):
    """Demo certificate with all grid weight at one inner product"""
    cert = point_mass_certificate(cfg.n, cfg.t)
    out = cfg.out or f"pointmass_n{cfg.n}.json"
    certificate.save(cert, out)
    print(f"t:           {_fmt(cert.grid.ts[0])}")
    print(f"certificate: {out}")
    return cert.alpha


def cmd_history(cfg: RunConfig, run_logger: RunLogger):
    """Summary of logged runs; --out exports them"""
    stats = run_logger.get_stats()
    print(f"runs:      {stats['total']}")
    print(f"succeeded: {stats['successful']}")
    print(f"failed:    {stats['failed']}")
    if cfg.out:
        if not run_logger.export_history(cfg.out, cfg.format):
            raise InvalidConfigurationError('out', cfg.out, 'a writable path')
        print(f"exported:  {cfg.out}")
    return stats['total']


COMMANDS = {
    'bound': cmd_bound,
    'verify': cmd_verify,
    'instance': cmd_instance,
    'trend': cmd_trend,
    'maxcut': cmd_maxcut,
    'constants': cmd_constants,
    'windmill': cmd_windmill,
    'pointmass': cmd_pointmass,
}


# ==================== ARGUMENT PARSING ====================

def _cells(value):
    try:
        return [int(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {value!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=None, help='master seed for all random streams')
    common.add_argument('--threads', type=int, default=None, help='worker threads (default: all cores)')
    common.add_argument('--precision', '--digits', dest='precision', type=int, default=config.VERIFY_DIGITS,
                        help='decimal digits for high-precision verification')
    common.add_argument('--out', default=None, help='output file')
    common.add_argument('--format', choices=config.OUTPUT_FORMATS, default='json')
    common.add_argument('--log-level', default=config.DEFAULT_LOG_LEVEL)
    common.add_argument('--log-file', default=None)
    common.add_argument('--history', action='store_true', help='record this run in the run history')

    parser = argparse.ArgumentParser(prog='gapwiz', description=config.APP_DESCRIPTION)
    parser.add_argument('--version', action='version', version=f"%(prog)s {config.APP_VERSION}")
    sub = parser.add_subparsers(dest='command', required=True)

    def add(name, help_text, with_input=False):
        p = sub.add_parser(name, parents=[common], help=help_text)
        if with_input:
            p.add_argument('input', help='input file')
        p.add_argument('--n', type=int, default=4, help='sphere dimension')
        p.add_argument('--degree', type=int, default=config.EXPLORATION_DEGREE)
        p.add_argument('--grid-size', type=int, default=config.DEFAULT_GRID_SIZE)
        p.add_argument('--families', default=None,
                       help=f"comma separated, from {', '.join(config.get_family_names())}")
        p.add_argument('--rounds', type=int, default=config.DEFAULT_ROUNDS)
        p.add_argument('--restarts', type=int, default=config.SEARCH_RESTARTS)
        p.add_argument('--custom', default=None, help='JSON file of extra inequalities')
        p.add_argument('--k-check', type=int, default=None)
        p.add_argument('--require-tail', action='store_true')
        p.add_argument('--samples', type=int, default=config.DEFAULT_MC_SAMPLES)
        p.add_argument('--cells', type=_cells, default=None)
        p.add_argument('--report', default=None, help='ratio CSV (instance) or kernel plot CSV (bound)')
        p.add_argument('--t', type=float, default=None, help='point-mass location (default t_GW)')
        return p

    add('bound', 'run the bound loop and write a verified certificate')
    add('verify', 'verify a certificate file', with_input=True)
    add('instance', 'build a weighted instance from a certificate', with_input=True)
    add('trend', 'ratio trend along nested partitions', with_input=True)
    add('maxcut', 'exact max-cut of an instance file', with_input=True)
    add('constants', 'print alpha_GW, t_GW, alpha_2 and the single-degree table')
    add('windmill', 'mixed windmill kernel and plot data')
    add('pointmass', 'write the point-mass demo certificate')
    add('history', 'show or export the run history')
    return parser


# ==================== ENTRY POINT ====================

def main(argv=None):
    """Parse arguments, run one command and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return config.EXIT_SUCCESS if e.code == 0 else config.EXIT_INVALID_INPUT

    setup_logging(args.log_level, args.log_file)
    run_logger = RunLogger() if args.history or args.command == 'history' else None

    try:
        cfg = RunConfig.from_args(args)
        if args.command == 'history':
            cmd_history(cfg, run_logger)
            return config.EXIT_SUCCESS
        value = COMMANDS[args.command](cfg)
    except (GapWizError, FileNotFoundError, ValueError) as e:
        code = get_exit_code(e)
        message = e.get_full_message() if isinstance(e, GapWizError) else str(e)
        print(f"{get_error_category(e)}: {message}", file=sys.stderr)
        if run_logger:
            run_logger.log_run(args.command, False, str(e), n=args.n, seed=args.seed)
        return code

    if run_logger:
        run_logger.log_run(args.command, True, 'ok', n=args.n, seed=args.seed, value=float(value))
    return config.EXIT_SUCCESS


if __name__ == '__main__':
    sys.exit(main())
