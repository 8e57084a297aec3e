"""Command-line entry point.

Exit codes: 0 success, 1 failed verification or numerical breakdown, 2 usage
or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from affine_area import sconcave
from affine_area.config import (
    Component,
    JobConfig,
    config_key_help,
    load_job_config,
    load_suite_config,
    parse_function,
    parse_h,
    parse_weight,
    suggest,
)
from affine_area.errors import NumericalError
from affine_area.funcrep import FunctionRep, auto_grid, save_csv
from affine_area.harness import ALL_CHECKS, DEFAULT_TOLERANCES, TestSuiteConfig, run_suite
from affine_area.mixed import ith_mixed_as, ith_mixed_gm, mixed_orlicz_as, mixed_orlicz_gm
from affine_area.orlicz_core import asp_direct, asp_variational, functional_sample, gp, orlicz_as, orlicz_gm
from affine_area.quadrature import integral_f_s, integrate_weight
from affine_area.settings import ENV_KEYS, MAX_WORKERS, log
from affine_area.transforms import legendre, s_dual


FORMATS = ('table', 'json', 'csv')


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


def _flat(record: dict) -> dict:
    flat = {}
    for key, value in record.items():
        if isinstance(value, (dict, list, tuple)):
            flat[key] = json.dumps(value, sort_keys=True, default=_jsonable)
        elif isinstance(value, float):
            flat[key] = repr(value)
        else:
            flat[key] = value
    return flat


def render(records: Sequence[dict], fmt: str) -> str:
    if fmt == 'json':
        return ''.join(json.dumps(r, sort_keys=True, default=_jsonable) + '\n' for r in records)
    if fmt == 'csv':
        columns: List[str] = []
        for record in records:
            columns.extend(k for k in record if k not in columns)
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator='\n')
        writer.writeheader()
        for record in records:
            writer.writerow(_flat(record))
        return buffer.getvalue()
    lines = []
    for record in records:
        lines.append('=' * 60)
        for key, value in record.items():
            if isinstance(value, (dict, list)):
                value = json.dumps(value, sort_keys=True, default=_jsonable)
            lines.append(f"{key:24s} {value}")
    lines.append('=' * 60)
    return '\n'.join(lines) + '\n'


def emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding='utf-8')
        log('main', f"Wrote {out}")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# ---------------------------------------------------------------------------
# Inputs
# ---------------------------------------------------------------------------

def _job(args) -> JobConfig:
    job = load_job_config(args.config) if getattr(args, 'config', None) else JobConfig()
    overrides = {}
    for name in ('psi', 'h', 'F1', 'F2', 's', 'p', 'i', 'dim', 'grid_points'):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, 'component', None):
        overrides['components'] = tuple(_component(text) for text in args.component)
    return replace(job, **overrides)


def _component(text: str) -> Component:
    parts = text.split()
    if not 2 <= len(parts) <= 4:
        raise ValueError(f"--component expects 'PSI H [F1 [F2]]', got {text!r}")
    return Component(*parts)


def _require(job: JobConfig, *names: str) -> None:
    missing = [name for name in names if getattr(job, name) is None]
    if missing:
        raise ValueError(f"Missing required input(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _psi(job: JobConfig) -> FunctionRep:
    _require(job, 'psi')
    return parse_function(job.psi, job.dim)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_legendre(args) -> int:
    job = _job(args)
    psi = _psi(job)
    pair = legendre(psi, counts=job.grid_points)
    if args.out:
        save_csv(pair.dual, args.out, None if not pair.dual.closed_form else pair.dual_grid)
        log('main', f"Wrote dual samples to {args.out}")
    record = {
        'psi': psi.describe(),
        'dual': pair.dual.describe(),
        'involution_error': pair.involution_error,
        'young_violation': pair.young_violation(),
        'dual_grid': pair.dual_grid.describe(),
    }
    emit(render([record], args.format), None)
    return 0


def cmd_sdual(args) -> int:
    job = _job(args)
    _require(job, 's')
    psi = _psi(job)
    pair = s_dual(psi, float(job.s), counts=job.grid_points)
    if args.out:
        save_csv(pair.dual, args.out, None if not pair.dual.closed_form else pair.dual_grid)
        log('main', f"Wrote s-dual samples to {args.out}")
    record = {
        'psi': psi.describe(),
        's': float(job.s),
        'dual': pair.dual.describe(),
        'involution_error': pair.involution_error,
        'flagged_points': pair.flagged_points,
        'dual_grid': pair.dual_grid.describe(),
    }
    emit(render([record], args.format), None)
    return 0


def cmd_integrate(args) -> int:
    job = _job(args)
    psi = _psi(job)
    if job.s is not None:
        result = integral_f_s(s_dual(psi, float(job.s), counts=job.grid_points), strict=False)
        record = {'psi': psi.describe(), 's': float(job.s), 'value': result.value, 'agrees': result.agrees, **result.to_record()}
    else:
        F = parse_weight(job.F1)
        result = integrate_weight(F, psi, auto_grid(psi, job.grid_points))
        record = {'psi': psi.describe(), 'F': F.describe(), **result.to_record()}
    emit(render([record], args.format), args.out)
    return 0


def cmd_asp(args) -> int:
    job = _job(args)
    _require(job, 'p')
    psi = _psi(job)
    F1, F2 = parse_weight(job.F1), parse_weight(job.F2)
    sample = functional_sample(psi, F1, F2, auto_grid(psi, job.grid_points))
    record = {'psi': psi.describe(), 'p': float(job.p), 'asp_direct': asp_direct(float(job.p), F1, F2, psi, sample=sample)}
    if args.variational:
        record['variational'] = asp_variational(float(job.p), F1, F2, psi, sample=sample).to_record()
    emit(render([record], args.format), args.out)
    return 0


def _orlicz_command(fn: Callable) -> Callable:
    def command(args) -> int:
        job = _job(args)
        _require(job, 'h')
        psi = _psi(job)
        h = parse_h(job.h, psi.dim)
        F1, F2 = parse_weight(job.F1), parse_weight(job.F2)
        result = fn(h, F1, F2, psi, grid=auto_grid(psi, job.grid_points))
        record = {'psi': psi.describe(), 'h': h.describe(), 'F1': F1.describe(), 'F2': F2.describe(), **result.to_record()}
        emit(render([record], args.format), args.out)
        return 0
    return command


def cmd_gp(args) -> int:
    job = _job(args)
    _require(job, 'p')
    psi = _psi(job)
    F1, F2 = parse_weight(job.F1), parse_weight(job.F2)
    result = gp(float(job.p), F1, F2, psi, grid=auto_grid(psi, job.grid_points))
    record = {'psi': psi.describe(), 'p': float(job.p), **result.to_record()}
    emit(render([record], args.format), args.out)
    return 0


def cmd_sconcave(args) -> int:
    job = _job(args)
    _require(job, 's')
    psi = _psi(job)
    s = float(job.s)
    sp = sconcave.sconcave_pair(psi, s, grid=auto_grid(psi, job.grid_points))
    fi = integral_f_s(sp.sdual, strict=False)
    record = {
        'psi': psi.describe(),
        's': s,
        'integral_f': fi.to_record(),
        'integral_polar': sconcave.integral_polar(sp).value,
        'c_s': sconcave.c_s(sp),
        'c_bar_s': sconcave.c_bar_s(sp),
        'g1_logconcave': sconcave.g1_is_logconcave(sp),
        'regularity': sp.regularity_flags,
    }
    if job.h is not None:
        h = parse_h(job.h, sp.dim)
        record['orlicz_as_s'] = sconcave.orlicz_as_s(h, sp).to_record()
        record['as_s_bound'] = sconcave.as_s_bound(h, sp)
    if job.p is not None:
        p = float(job.p)
        record['asp_s_direct'] = sconcave.asp_s_direct(p, sp)
        record['gp_s'] = sconcave.gp_s(p, sp).to_record()
    emit(render([record], args.format), args.out)
    return 0


def cmd_mixed(args) -> int:
    job = _job(args)
    spec = job.mixed_spec()
    if job.i is not None:
        run = ith_mixed_gm if args.geominimal else ith_mixed_as
        result = run(spec, int(job.i))
    else:
        run = mixed_orlicz_gm if args.geominimal else mixed_orlicz_as
        result = run(spec)
    record = {
        'components': [psi.describe() for psi in spec.psis],
        'hs': [h.describe() for h in spec.hs],
        'i': job.i,
        'geominimal': bool(args.geominimal),
        **result.to_record(),
    }
    emit(render([record], args.format), args.out)
    return 0


def parse_tolerances(items: Sequence[str]) -> Dict[str, float]:
    """['inequality=0.02', ...] -> {'inequality': 0.02}; classes as in DEFAULT_TOLERANCES."""
    out = {}
    for item in items:
        key, sep, raw = item.partition('=')
        key = key.strip()
        if not sep:
            raise ValueError(f"--tolerance expects class=value, got {item!r}")
        if key not in DEFAULT_TOLERANCES:
            hint = suggest(key, DEFAULT_TOLERANCES)
            raise ValueError(f"Unknown tolerance class {key!r}" + (f" (did you mean {hint!r}?)" if hint else ''))
        try:
            out[key] = float(raw)
        except ValueError as exc:
            raise ValueError(f"--tolerance {key}: {raw!r} is not a number") from exc
    return out


def cmd_verify(args) -> int:
    config = load_suite_config(args.config) if args.config else TestSuiteConfig()
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.dims:
        overrides['dims'] = tuple(int(d) for d in args.dims.split(','))
    if args.checks:
        checks = tuple(c.strip() for c in args.checks.split(',') if c.strip())
        for check in checks:
            if check not in ALL_CHECKS:
                hint = suggest(check, ALL_CHECKS)
                raise ValueError(f"Unknown check {check!r}" + (f" (did you mean {hint!r}?)" if hint else ''))
        overrides['checks'] = checks
    if args.grid_points:
        overrides['grid_points'] = {n: args.grid_points for n in overrides.get('dims', config.dims)}
    if args.tolerance:
        overrides['tolerances'] = {**config.tolerances, **parse_tolerances(args.tolerance)}
    config = replace(config, **overrides)

    print('=' * 60, file=sys.stderr)
    log('verify', f"dims={list(config.dims)} seed={config.seed} checks={len(config.checks)}")
    print('=' * 60, file=sys.stderr)
    suite = run_suite(config, workers=args.workers)
    if args.format == 'json':
        text = suite.to_jsonl(args.timings)
    elif args.format == 'csv':
        text = render([r.to_record(args.timings) for r in suite.reports], 'csv')
    else:
        text = suite.to_table(args.timings)
    emit(text, args.out)
    return suite.exit_code


COMMANDS: Dict[str, Callable] = {
    'legendre': cmd_legendre,
    'sdual': cmd_sdual,
    'integrate': cmd_integrate,
    'asp': cmd_asp,
    'orlicz-as': _orlicz_command(orlicz_as),
    'orlicz-gm': _orlicz_command(orlicz_gm),
    'gp': cmd_gp,
    'sconcave': cmd_sconcave,
    'mixed': cmd_mixed,
    'verify': cmd_verify,
}

HELP = {
    'legendre': 'Legendre transform of psi; --out writes the dual samples as CSV',
    'sdual': 's-dual of psi; --out writes the dual samples as CSV',
    'integrate': 'I(F o psi), or I(f) for f = (1 - s psi)^{1/s} with --s',
    'asp': 'L_p affine surface area (direct, optionally variational)',
    'orlicz-as': 'Orlicz L_{h,F1,F2} affine surface area',
    'orlicz-gm': 'Orlicz L_{h,F1,F2} geominimal surface area',
    'gp': 'L_p geominimal surface area',
    'sconcave': 's-concave integrals, constants and Orlicz / L_p areas',
    'mixed': 'mixed (or i-th mixed with --i) Orlicz affine / geominimal areas',
    'verify': 'run the verification suite (exit 1 if any check fails)',
}


def _epilog() -> str:
    env = '\n'.join(f"  {key} (current: {value})" for key, value in ENV_KEYS.items())
    return (
        "function specs: gaussian:c=1 | quad:A=[[1,0],[0,2]],a=0 | senv:s=0.5,c=1 | perturbed:A=[[1]],eps=0.1 | sampled:path=f.csv\n"
        "weights: exp | power:alpha=3 | one | shifted:a=2,b=0.5\n"
        "Orlicz functions: power:p=2 | const:k=1,cls=Phi | sqrt | square | inv | log1p | inv1p\n\n"
        f"environment:\n{env}\n\n{config_key_help()}"
    )


def _add_inputs(sub: argparse.ArgumentParser) -> None:
    sub.add_argument('--config', help='JSON config (path, or name under the config directory)')
    sub.add_argument('--psi', help='function spec, e.g. gaussian:c=1')
    sub.add_argument('--h', help='Orlicz function spec, e.g. power:p=2')
    sub.add_argument('--F1', help='weight F1 (default exp)')
    sub.add_argument('--F2', help='weight F2 (default exp)')
    sub.add_argument('--s', type=float, help='s-concavity parameter')
    sub.add_argument('--p', type=float, help='L_p exponent')
    sub.add_argument('--dim', type=int, help='dimension for specs that do not fix it (default 1)')


def _add_output(sub: argparse.ArgumentParser) -> None:
    sub.add_argument('--format', choices=FORMATS, default='table', help='output format (default table)')
    sub.add_argument('--out', help='write output to this file instead of stdout')
    sub.add_argument('--grid-points', dest='grid_points', type=int, help='samples per axis (overrides the env default)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='affine_area',
        description='Orlicz and L_p affine / geominimal surface areas of log-concave and s-concave functions',
        epilog=_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest='command', required=True, metavar='subcommand')
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=HELP[name], description=HELP[name])
        _add_output(sub)
        if name == 'verify':
            sub.add_argument('--config', help='suite config (path, or name under the config directory)')
            sub.add_argument('--seed', type=int, help='roster seed')
            sub.add_argument('--dims', help='comma-separated dimensions, e.g. 1,2')
            sub.add_argument('--checks', help=f"comma-separated subset of: {', '.join(ALL_CHECKS)}")
            sub.add_argument('--workers', type=int, default=MAX_WORKERS, help=f"worker threads (default {MAX_WORKERS})")
            sub.add_argument('--timings', action='store_true', help='include per-report runtime in the output')
            sub.add_argument(
                '--tolerance', action='append', metavar='CLASS=VALUE',
                help=f"override a tolerance class, repeatable ({', '.join(DEFAULT_TOLERANCES)})",
            )
            continue
        _add_inputs(sub)
        if name == 'asp':
            sub.add_argument('--variational', action='store_true', help='also run the variational formula')
        if name == 'mixed':
            sub.add_argument('--component', action='append', help="'PSI H [F1 [F2]]', repeatable")
            sub.add_argument('--i', type=int, help='i for the i-th mixed quantity (two components)')
            sub.add_argument('--geominimal', action='store_true', help='optimise over log-concave g only')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith('-') and argv[0] not in COMMANDS:
        hint = suggest(argv[0], COMMANDS)
        log('main', f"error: unknown subcommand {argv[0]!r}" + (f" (did you mean {hint!r}?)" if hint else ''))
        return 2
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValueError as exc:
        log('main', f"error: {exc}")
        return 2
    except NumericalError as exc:
        log('main', f"numerical failure: {exc}")
        return 1


if __name__ == '__main__':
    sys.exit(main())
