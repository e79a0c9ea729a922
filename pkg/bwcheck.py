#!/usr/bin/env python3
"""
bwcheck - Betke-Weil inequality toolkit
=======================================
Mixed areas, hexagon decompositions, distance from regular triangles,
certified verification of the hexagon-lemma Hessian bounds, the stability
scan and the deformation moves, all from one command.

Usage:
    python bwcheck.py mixed-area P.json Q.json [--method all]
    python bwcheck.py deficit K.json
    python bwcheck.py hexagons K.json
    python bwcheck.py dtr K.json [--tol 1e-6]
    python bwcheck.py verify-lemma --ineq norm [--workers 4] [--max-subsets N]
    python bwcheck.py stability-scan [--samples 200] [--seed S]
    python bwcheck.py deform P.json

Examples:
    # Both mixed-area formulas and the Minkowski-sum oracle
    python bwcheck.py mixed-area square.json square.json --method all

    # Certify the norm form with 4 worker processes, per-subset log at -vv
    BW_LOG_DIR=./logs python bwcheck.py verify-lemma --ineq norm --workers 4 -vv

Polygon files:
    {"vertices": [[0, 0], [1, 0], [0, 1]]}      counterclockwise

Exit codes:
    0  success / VERIFIED
    1  a check failed (FAILED verification, violated invariant)
    2  bad input (missing file, malformed JSON, non-convex polygon, bad flag)
    3  budget exhausted before verification finished

The JSON report goes to stdout (and --out); status lines go to stderr.
"""

import os
import sys
import time
import logging
import argparse

import config
from config import RunConfig, log_level_for
from deformation_lab import EquiangularPolygon, descent_move, regular_polygon_stats
from errors import BWError, DomainError, InputError, InvariantViolation, NotApplicable
from hexagon_construction import (
    build_hexagons, chain_check, decomposition_report, max_inscribed_triangle, width_params,
)
from interval_core import set_rounding_backend
from lemma_verifier import (
    INEQUALITIES, MODES, VerifyConfig, check_basis_containment, check_lemma_conclusion,
    spot_check_gradient, verify,
)
from polygon_geometry import (
    area, bw_deficit, d_tr, mixed_area_betke, mixed_area_minkowski, mixed_area_oracle,
    perimeter, reflect, triangle_containment_gap,
)
from reports import make_report, read_polygon, write_report
from stability_scan import scan

logger = logging.getLogger('bwcheck')

METHODS = ('minkowski', 'betke', 'oracle', 'all')
EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


def status(message):
    print(message, file=sys.stderr)


def cmd_mixed_area(cfg, method):
    P, Q = (read_polygon(path) for path in cfg.inputs)
    routines = {
        'minkowski': mixed_area_minkowski,
        'betke': mixed_area_betke,
        'oracle': mixed_area_oracle,
    }
    names = list(routines) if method == 'all' else [method]
    values = {name: routines[name](P, Q) for name in names}
    payload = dict(values)
    if method == 'all':
        vals = list(values.values())
        payload['max_disc'] = max(abs(a - b) for a in vals for b in vals)
        status(f"📊 A(P,Q) = {values['minkowski']:.12g} (max discrepancy {payload['max_disc']:.3g})")
    else:
        status(f"📊 A(P,Q) = {values[method]:.12g} ({method})")
    return make_report('mixed-area', payload), EXIT_OK


def cmd_deficit(cfg):
    K = read_polygon(cfg.inputs[0])
    L = perimeter(K)
    A = mixed_area_minkowski(K, reflect(K))
    deficit = bw_deficit(K)
    payload = {'perimeter': L, 'mixed_area_reflection': A, 'deficit': deficit,
               'eps': L * L / (6 * 3 ** 0.5 * A) - 1}
    status(f"📊 L^2 - 6 sqrt(3) A(K,-K) = {deficit:.12g}")
    return make_report('deficit', payload), EXIT_OK


def cmd_hexagons(cfg):
    K = read_polygon(cfg.inputs[0])
    T = max_inscribed_triangle(K)
    dec = build_hexagons(K, T, width_params(K, T))
    payload = {'decomposition': decomposition_report(dec), 'chain': chain_check(K)}
    status(f"✅ Chain holds: deficit(K) {payload['chain']['deficit_K']:.6g} >= "
           f"{payload['chain']['deficit_H1_H2']:.6g} >= {payload['chain']['deficit_H0_H2']:.6g}")
    return make_report('hexagons', payload), EXIT_OK


def cmd_dtr(cfg, tol):
    K = read_polygon(cfg.inputs[0])
    rho, triangle = d_tr(K, tol)
    payload = {
        'd_tr': rho,
        'approximate': True,
        'tol': tol,
        'triangle': triangle.to_json()['vertices'],
        'containment_gap': triangle_containment_gap(K, triangle, rho),
    }
    status(f"📊 d_tr ~ {rho:.9g} (approximate)")
    return make_report('dtr', payload), EXIT_OK


def _attach_subset_log(cfg):
    """Per-subset lines go to BW_LOG_DIR/verify-<ineq>.log, never to stderr"""
    os.makedirs(cfg.log_dir, exist_ok=True)
    path = os.path.join(cfg.log_dir, f"verify-{cfg.inequality}.log")
    handler = logging.FileHandler(path, mode='w')
    handler.setFormatter(logging.Formatter(config.LOG_FORMAT))
    subset_logger = logging.getLogger('bw.subsets')
    subset_logger.handlers = [handler]
    subset_logger.propagate = False
    subset_logger.setLevel(logging.DEBUG if cfg.verbosity >= 2 else logging.INFO)
    logger.info(f"Subset log: {path}")
    return handler


def cmd_verify_lemma(cfg, mode, timing):
    handler = _attach_subset_log(cfg)
    try:
        vcfg = VerifyConfig(max_depth=cfg.max_depth, max_subsets=cfg.max_subsets,
                            mode=mode, wall_clock=cfg.wall_clock, workers=cfg.workers)
        report = verify(cfg.inequality, vcfg)
    finally:
        handler.close()
        logging.getLogger('bw.subsets').handlers = []

    checks = {
        'basis_containment': check_basis_containment(),
        'critical_line': spot_check_gradient(),
        'lemma_conclusion': check_lemma_conclusion(seed=cfg.seed),
    }
    payload = report.to_json()
    if not timing:
        payload.pop('wall_time')
    payload['checks'] = checks

    status(f"📊 {cfg.inequality}: {report.status} after {report.subsets_processed} subsets, "
           f"max depth {report.max_depth}, {report.wall_time:.1f}s")
    if report.status == 'BUDGET_EXCEEDED':
        status(f"❌ Budget exhausted with {report.frontier_size} open subsets")
        return make_report('verify-lemma', payload), EXIT_BUDGET
    if not report.verified:
        status(f"❌ Verification failed: {report.failed_task}")
        return make_report('verify-lemma', payload), EXIT_FAILED
    failed = [name for name, result in checks.items() if not result['ok']]
    if failed:
        status(f"❌ Supporting checks failed: {', '.join(failed)}")
        return make_report('verify-lemma', payload), EXIT_FAILED
    status(f"✅ {cfg.inequality} form VERIFIED")
    return make_report('verify-lemma', payload), EXIT_OK


def cmd_stability_scan(cfg, samples, tol):
    rows, summary = scan(samples, cfg.seed, tol)
    payload = {'summary': summary, 'rows': rows}
    status(f"📊 {summary['applicable']}/{samples} samples in range, {summary['violations']} violations")
    if summary['violations']:
        status("❌ d_tr <= 400 sqrt(eps) violated")
        return make_report('stability-scan', payload), EXIT_FAILED
    status("✅ No violations of d_tr <= 400 sqrt(eps)")
    return make_report('stability-scan', payload), EXIT_OK


def cmd_deform(cfg):
    P = read_polygon(cfg.inputs[0])
    try:
        move = descent_move(P)
    except NotApplicable as e:
        payload = {'move': None, 'reason': str(e)}
        try:
            E = EquiangularPolygon.from_polygon(P)
            if E.is_regular() and E.k % 2 == 1 and E.k >= 5:
                payload['regular_stats'] = regular_polygon_stats(E.k)
        except DomainError:
            pass
        status(f"📊 No descent move: {e}")
        return make_report('deform', payload), EXIT_OK

    Q = move.pop('polygon')
    payload = {'move': move, 'polygon': Q.to_json()['vertices'], 'area': area(Q)}
    status(f"✅ Case {move['case']} move: L^2/A {move['ratio_before']:.12g} -> {move['ratio_after']:.12g}")
    return make_report('deform', payload), EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog='bwcheck', description='Betke-Weil inequality toolkit')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v INFO, -vv DEBUG')
    parser.add_argument('--out', metavar='PATH', help='also write the JSON report here')
    parser.add_argument('--seed', type=int, default=config.BW_SEED, help='random seed')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('mixed-area', help='mixed area A(P,Q)')
    p.add_argument('polygons', nargs=2, metavar='POLY')
    p.add_argument('--method', choices=METHODS, default='minkowski')

    for name, text in (('deficit', 'L^2 - 6 sqrt(3) A(K,-K)'),
                       ('hexagons', 'triangle / hexagon decomposition and chain check'),
                       ('deform', 'descent move lowering L^2 / A(P,-P)')):
        p = sub.add_parser(name, help=text)
        p.add_argument('polygons', nargs=1, metavar='POLY')

    p = sub.add_parser('dtr', help='distance from the regular triangles (approximate)')
    p.add_argument('polygons', nargs=1, metavar='POLY')
    p.add_argument('--tol', type=float, default=1e-6)

    p = sub.add_parser('verify-lemma', help='certify the Hessian bounds by adaptive bisection')
    p.add_argument('--ineq', choices=INEQUALITIES, default='norm')
    p.add_argument('--mode', choices=MODES, default='enhanced')
    p.add_argument('--max-depth', type=int, default=config.BW_MAX_DEPTH)
    p.add_argument('--max-subsets', type=int, default=config.BW_MAX_SUBSETS)
    p.add_argument('--wall-clock', type=float, default=config.BW_WALL_CLOCK, help='seconds, 0 = unlimited')
    p.add_argument('--workers', type=int, default=config.BW_WORKERS)
    p.add_argument('--timing', action='store_true', help='include wall time in the report')

    p = sub.add_parser('stability-scan', help='check d_tr <= 400 sqrt(eps) on random samples')
    p.add_argument('--samples', type=int, default=200)
    p.add_argument('--tol', type=float, default=1e-6)
    return parser


def run(args):
    cfg = RunConfig(
        subcommand=args.command,
        inputs=tuple(getattr(args, 'polygons', ())),
        inequality=getattr(args, 'ineq', 'norm'),
        max_depth=getattr(args, 'max_depth', config.BW_MAX_DEPTH),
        max_subsets=getattr(args, 'max_subsets', config.BW_MAX_SUBSETS),
        wall_clock=getattr(args, 'wall_clock', config.BW_WALL_CLOCK),
        verbosity=args.verbose,
        output=args.out,
        workers=getattr(args, 'workers', config.BW_WORKERS),
        seed=args.seed,
    ).validate()
    logger.info(f"Starting {cfg.subcommand}: inputs={list(cfg.inputs)}, seed={cfg.seed}, "
                f"rounding={config.BW_ROUNDING}")

    if cfg.subcommand == 'mixed-area':
        return cmd_mixed_area(cfg, args.method)
    if cfg.subcommand == 'deficit':
        return cmd_deficit(cfg)
    if cfg.subcommand == 'hexagons':
        return cmd_hexagons(cfg)
    if cfg.subcommand == 'dtr':
        return cmd_dtr(cfg, args.tol)
    if cfg.subcommand == 'verify-lemma':
        return cmd_verify_lemma(cfg, args.mode, args.timing)
    if cfg.subcommand == 'stability-scan':
        if args.samples <= 0:
            raise InputError(f"--samples must be positive, got {args.samples}")
        return cmd_stability_scan(cfg, args.samples, args.tol)
    return cmd_deform(cfg)


def main(argv=None):
    """Main function; returns the exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=log_level_for(args.verbose), format=config.LOG_FORMAT)
    start = time.monotonic()
    try:
        set_rounding_backend(config.BW_ROUNDING)
        report, code = run(args)
    except (InputError, DomainError) as e:
        logger.error(f"Input error: {e}")
        status(f"❌ {e}")
        return EXIT_INPUT
    except InvariantViolation as e:
        logger.error(f"Check failed: {e}")
        status(f"❌ {e}")
        return EXIT_FAILED
    except BWError as e:
        logger.error(f"{type(e).__name__}: {e}")
        status(f"❌ {e}")
        return EXIT_FAILED

    sys.stdout.write(write_report(report, args.out))
    logger.info(f"{args.command} finished in {time.monotonic() - start:.2f}s with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
