"""
Command line entry point: ``amc-codes <subcommand>``.

Exit codes are 0 on success, 1 when an invariant fails (or ``table1``
finds a mismatch), 2 on usage errors and bad settings.
"""
import argparse
import csv
import logging
import os
import shlex
import sys
import time

import numpy as np

from . import analysis, circuits, decoders, search, simulator
from .complexes import CSSCode, amc_build, amc_power, css_extract
from .dem import DetectorErrorModel, circuit_distance, extract_dem
from .exceptions import AMCError, ImproperlyConfigured, InvariantError
from .group_algebra import AbelianGroup, parse_elements
from .matrixio import read_descriptor, write_descriptor
from .settings import DEFAULTS, Settings
from .version import VERSION

logger = logging.getLogger(__name__)

PROG = 'amc-codes'
THRESHOLD_COLUMNS = ['p', 'code', 'shots', 'fails', 'p_L']
DECODE_COLUMNS = ['p', 'shots', 'fails', 'p_L', 'wall_time']


def provenance(argv, settings):
    return f"{PROG} {VERSION}; {shlex.join([PROG] + list(argv))}; seed={settings.seed}"


def load_code(path):
    """Rebuild an AMC code from its descriptor, or take hx/hz as stored when it has no group."""
    descriptor = read_descriptor(path)
    if 'group' in descriptor:
        group = AbelianGroup.parse(descriptor['group'])
        elements = parse_elements(group, ','.join(descriptor['elements']))
        code = css_extract(amc_build(group, elements), descriptor.get('level') or 2)
    else:
        matrices = descriptor['matrices']
        code = CSSCode(matrices['hx'], matrices['hz'], matrices.get('mx'), matrices.get('mz'),
                       level=descriptor.get('level'))
    if code.n != descriptor['n'] or code.k != descriptor['k']:
        raise InvariantError(f"{path}: rebuilt [[{code.n},{code.k}]] but the descriptor says "
                             f"[[{descriptor['n']},{descriptor['k']}]]")
    return code


def _code_label(path):
    return os.path.splitext(os.path.basename(path))[0]


def _read_text(path):
    with open(path) as handle:
        return handle.read()


def _write_text(path, text, header):
    with open(path, 'w') as handle:
        handle.write(f'# {header}\n')
        handle.write(text)


def _select_detectors(dem, dets, detectors):
    """With ``detectors == 'z'`` only Z-type detector events are kept, in the model and in the samples."""
    if detectors != 'z':
        return dem, dets
    kept = np.flatnonzero(dem.detector_types() == circuits.Z_TYPE)
    return dem.restrict(circuits.Z_TYPE), dets[:, kept]


def _distance_method(args, settings):
    """``--method`` when given, else the stages built from exact_cap and ris_trials."""
    method = getattr(args, 'method', None)
    if method is None:
        return settings.distance_method
    try:
        analysis.parse_method(method)
    except ValueError as exc:
        raise ImproperlyConfigured('method: {}'.format(exc)) from exc
    return method


def _decoder_options(settings):
    return dict(cluster_weight=settings.cluster_weight, max_iter=settings.bp_max_iter)


def _noisy_circuit(code, settings, p):
    circuit = circuits.build_memory_circuit(code, settings.cycle, settings.basis, settings.rounds,
                                            settings.x_check_coupling)
    return circuits.apply_error_model(circuit, p)


def cmd_build(args, settings, header):
    group = AbelianGroup.parse(args.group)
    elements = parse_elements(group, args.elems)
    if args.power:
        if len(elements) != 1:
            raise ImproperlyConfigured('--power takes exactly one element, got {}'.format(len(elements)))
        complex_ = amc_power(group, elements[0], args.power)
    else:
        complex_ = amc_build(group, elements)
    code = css_extract(complex_, args.level)
    stem = _code_label(args.out)
    path = write_descriptor(code, os.path.dirname(args.out) or '.', stem, provenance=header)
    print(f"[[{code.n},{code.k}]] written to {path}")


def cmd_params(args, settings, header):
    code = load_code(args.code)
    params = analysis.code_params(code, _distance_method(args, settings), seed=settings.seed,
                                  confinement_w=args.confine, threads=settings.threads,
                                  max_enumeration=settings.max_enumeration)
    print(f"n={params.n}")
    print(f"k={params.k}")
    print(f"d={params.d}")
    if params.h is not None:
        print(f"h={params.h}")
    if params.d_upper is not None:
        print(f"d_upper={params.d_upper}")
    print(f"d_S={params.d_syndrome}")
    if params.kappa is not None:
        print(f"kappa={params.kappa}")
    if params.confinement:
        print("confinement=" + ','.join('-' if v is None else str(v) for _, v in params.confinement))
    if args.out:
        with open(args.out, 'w', newline='') as handle:
            analysis.write_params_csv([params], handle, header_lines=[header])


def cmd_distance(args, settings, header):
    code = load_code(args.code)
    dz, dx = analysis.min_distance(code, _distance_method(args, settings), seed=settings.seed, threads=settings.threads)
    print(f"d_Z={dz} ({dz.method})")
    print(f"d_X={dx} ({dx.method})")


def cmd_confine(args, settings, header):
    code = load_code(args.code)
    for w, value in analysis.confinement_profile(code, args.max_w, threads=settings.threads,
                                                      max_enumeration=settings.max_enumeration):
        print(f"{w}: {'-' if value is None else value}")


def cmd_search(args, settings, header):
    ells = sorted({ell for group in args.ell for ell in group})
    rows = search.search_best(ells, _distance_method(args, settings), seed=settings.seed, threads=settings.threads,
                              require_h=not args.any_h, element_weight=args.weight)
    handle = open(args.out, 'w', newline='') if args.out else sys.stdout
    try:
        analysis.write_params_csv(rows, handle, header_lines=[header])
    finally:
        if args.out:
            handle.close()


def cmd_circuit(args, settings, header):
    code = load_code(args.code)
    circuit = _noisy_circuit(code, settings, settings.p)
    _write_text(args.out, circuits.to_text(circuit), header)
    print(f"{circuit.num_qubits} qubits, {circuit.num_detectors} detectors, "
          f"{circuit.num_observables} observables written to {args.out}")


def cmd_dem(args, settings, header):
    circuit = circuits.from_text(_read_text(args.circuit))
    dem = extract_dem(circuit, settings.prune_below)
    if args.out:
        _write_text(args.out, dem.to_text(), header)
    print(f"{len(dem)} faults, {dem.num_detectors} detectors, {dem.num_observables} observables")
    if args.distance:
        distance = circuit_distance(dem, _distance_method(args, settings), seed=settings.seed, threads=settings.threads)
        print(f"circuit_distance={distance}")


def cmd_sample(args, settings, header):
    seed = simulator.resolve_seed(settings.seed)
    text = _read_text(args.source)
    if args.from_dem or args.source.endswith('.dem'):
        dem = DetectorErrorModel.from_text(text)
        dets, obs = simulator.sample_from_dem(dem, settings.shots, seed, settings.threads, settings.chunk_shots)
    else:
        circuit = circuits.from_text(text)
        dets, obs = simulator.sample(circuit, settings.shots, seed, settings.threads, settings.chunk_shots)
    simulator.write_packed(args.out, dets, obs, provenance=header, seed=seed, chunk_shots=settings.chunk_shots)
    print(f"{dets.shape[0]} shots written to {args.out}")


def cmd_decode(args, settings, header):
    dem = DetectorErrorModel.from_text(_read_text(args.dem))
    dets, obs, _ = simulator.read_packed(args.samples)
    if dets.shape[1] != dem.num_detectors or obs.shape[1] != dem.num_observables:
        raise ImproperlyConfigured('samples have {} detectors and {} observables, the model {} and {}'.format(
            dets.shape[1], obs.shape[1], dem.num_detectors, dem.num_observables))
    dem, dets = _select_detectors(dem, dets, settings.detectors)
    graph = decoders.DecoderGraph.from_dem(dem)
    started = time.perf_counter()
    fails, shots, rate = decoders.logical_error_rate(graph, dets, obs, window=settings.window,
                                                     threads=settings.threads, **_decoder_options(settings))
    elapsed = time.perf_counter() - started
    logger.info(f"decode: {fails}/{shots} failures in {elapsed:.3f}s")
    _write_rows(args.out, header, DECODE_COLUMNS, [[settings.p, shots, fails, rate, round(elapsed, 6)]])


def cmd_table1(args, settings, header):
    ells = sorted({row.ell for row in search.REFERENCE_TABLE if row.exponents is not None and row.ell <= args.max_ell})
    if not ells:
        raise ImproperlyConfigured('--max-ell {} selects no row of the table'.format(args.max_ell))
    rows = search.search_best(ells, _distance_method(args, settings), seed=settings.seed, threads=settings.threads)
    found = {params.ell for params in rows}
    report = search.compare_table1(rows)
    failures = 0
    for ell, expected, params, ok in report:
        failures += not ok
        print(f"ell={ell} [[{params.n},{params.k},{params.d}]] d_S={params.d_syndrome} "
              f"{'PASS' if ok else 'FAIL'}" + ('' if ok or expected is None else
                                               f" (expected [[{expected.n},{expected.k},{expected.d}]] "
                                               f"d_S={expected.d_s})"))
    for ell in ells:
        if ell not in found:
            failures += 1
            print(f"ell={ell} no candidate FAIL")
    if args.out:
        with open(args.out, 'w', newline='') as handle:
            analysis.write_params_csv(rows, handle, header_lines=[header])
    return 1 if failures else 0


def _write_rows(out, header, columns, records):
    """CSV with a provenance comment line, to ``out`` or stdout."""
    handle = open(out, 'w', newline='') if out else sys.stdout
    try:
        handle.write(f'# {header}\n')
        writer = csv.writer(handle)
        writer.writerow(columns)
        writer.writerows(records)
    finally:
        if out:
            handle.close()


def _point_seed(seed, code_index, p_index):
    return int(np.random.SeedSequence(seed, spawn_key=(code_index, p_index)).generate_state(1, dtype=np.uint64)[0])


def cmd_threshold(args, settings, header):
    seed = simulator.resolve_seed(settings.seed)
    rates = {}
    records = []
    for ci, path in enumerate(args.codes):
        code = load_code(path)
        label = _code_label(path)
        for pi, p in enumerate(args.ps):
            circuit = _noisy_circuit(code, settings, p)
            dem = extract_dem(circuit, settings.prune_below)
            dets, obs = simulator.sample(circuit, settings.shots, _point_seed(seed, ci, pi), settings.threads,
                                         settings.chunk_shots)
            dem, dets = _select_detectors(dem, dets, settings.detectors)
            graph = decoders.DecoderGraph.from_dem(dem)
            fails, shots, rate = decoders.logical_error_rate(graph, dets, obs, window=settings.window,
                                                             threads=settings.threads, **_decoder_options(settings))
            logger.info(f"threshold: {label} p={p} -> {fails}/{shots}")
            records.append([p, label, shots, fails, rate])
            rates.setdefault(label, []).append(rate)
    _write_rows(args.out, header, THRESHOLD_COLUMNS, records)
    if len(rates) == 2:
        first, second = rates.values()
        crossing = decoders.estimate_crossing(args.ps, first, second)
        print(f"crossing p_c={'none' if crossing is None else f'{crossing:.4g}'}", file=sys.stderr)


def _ell_range(text):
    """``7``, ``7,10`` or the inclusive range ``7..30``."""
    try:
        if '..' in text:
            low, high = (int(v) for v in text.split('..'))
            values = list(range(low, high + 1))
        else:
            values = [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected cycle lengths like 7, 7,10 or 7..30, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"empty cycle length range {text!r}")
    return values


def _probabilities(text):
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated probabilities, got {text!r}") from None
    if not values or any(not 0 < v < 1 for v in values):
        raise argparse.ArgumentTypeError(f"probabilities must lie in (0, 1), got {text!r}")
    return values


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='count', default=0, help="more logging, repeatable")
    common.add_argument('--config', help="file of key = value settings")
    common.add_argument('--threads', type=int, help="worker processes (default: available cores)")
    common.add_argument('--seed', type=int, help="seed for every random choice")

    distance = argparse.ArgumentParser(add_help=False)
    distance.add_argument('--exact-cap', dest='exact_cap', type=int, help="largest weight enumerated exactly")
    distance.add_argument('--ris-trials', dest='ris_trials', type=int, help="random information set trials")
    distance.add_argument('--method', help="staged distance method, e.g. exact:6,ris:100000")

    memory = argparse.ArgumentParser(add_help=False)
    memory.add_argument('--cycle', choices=[c.label for c in circuits.Cycle])
    memory.add_argument('--basis', choices=['Z', 'X'])
    memory.add_argument('--rounds', type=int)
    memory.add_argument('--x-check-coupling', dest='x_check_coupling', choices=list(circuits.X_COUPLINGS))

    decoding = argparse.ArgumentParser(add_help=False)
    decoding.add_argument('--window', type=int, help="sliding window size in rounds (default: full block)")
    decoding.add_argument('--detectors', choices=['both', 'z'])
    decoding.add_argument('--cluster-weight', dest='cluster_weight', type=int)
    decoding.add_argument('--bp-max-iter', dest='bp_max_iter', type=int)

    parser = argparse.ArgumentParser(prog=PROG, description="Abelian multi-cycle quantum CSS codes.")
    parser.add_argument('--version', action='version', version=f'{PROG} {VERSION}')
    commands = parser.add_subparsers(dest='command', required=True, metavar='command')

    sub = commands.add_parser('build', parents=[common], help="build a code and write its descriptor")
    sub.add_argument('--group', required=True, help="e.g. C7, C3xC5, C2^4")
    sub.add_argument('--elems', required=True, help="comma separated elements, e.g. '1+x,1+x^2'")
    sub.add_argument('--level', type=int, default=2)
    sub.add_argument('--power', type=int, help="D-fold product of a single element over the group power")
    sub.add_argument('--out', default='code.json')
    sub.set_defaults(func=cmd_build)

    sub = commands.add_parser('params', parents=[common, distance], help="n, k, d, d_upper, d_S, kappa")
    sub.add_argument('code')
    sub.add_argument('--confine', type=int, default=0, help="confinement profile up to this weight")
    sub.add_argument('--max-enumeration', dest='max_enumeration', type=float,
                     help="largest number of errors the confinement scan may tabulate")
    sub.add_argument('--out', help="CSV file")
    sub.set_defaults(func=cmd_params)

    sub = commands.add_parser('distance', parents=[common, distance], help="minimum distances d_Z and d_X")
    sub.add_argument('code')
    sub.set_defaults(func=cmd_distance)

    sub = commands.add_parser('confine', parents=[common], help="confinement profile")
    sub.add_argument('code')
    sub.add_argument('--max-w', dest='max_w', type=int, default=4)
    sub.add_argument('--max-enumeration', dest='max_enumeration', type=float,
                     help="largest number of errors the scan may tabulate")
    sub.set_defaults(func=cmd_confine)

    sub = commands.add_parser('search', parents=[common, distance], help="best weight-2 tuples per ell")
    sub.add_argument('--ell', type=_ell_range, nargs='+', required=True, help="cycle lengths, e.g. 7 10 or 7..30")
    sub.add_argument('--weight', type=int, default=2, choices=[2], help="weight of the searched elements")
    sub.add_argument('--any-h', dest='any_h', action='store_true', help="do not require h(x) = 1+x")
    sub.add_argument('--csv', '--out', dest='out', help="CSV file (default: stdout)")
    sub.set_defaults(func=cmd_search)

    sub = commands.add_parser('circuit', parents=[common, memory], help="memory experiment circuit")
    sub.add_argument('code')
    sub.add_argument('--p', type=float, help="circuit level depolarizing noise (0 for none)")
    sub.add_argument('--out', default='circuit.stim')
    sub.set_defaults(func=cmd_circuit)

    sub = commands.add_parser('dem', parents=[common, distance], help="detector error model of a circuit")
    sub.add_argument('circuit')
    sub.add_argument('--out')
    sub.add_argument('--prune-below', dest='prune_below', type=float)
    sub.add_argument('--distance', action='store_true', help="also compute the circuit distance")
    sub.set_defaults(func=cmd_dem)

    sub = commands.add_parser('sample', parents=[common], help="sample detector and observable bits")
    sub.add_argument('source', help="circuit file, or a .dem file")
    sub.add_argument('--from-dem', dest='from_dem', action='store_true')
    sub.add_argument('--shots', type=int)
    sub.add_argument('--chunk-shots', dest='chunk_shots', type=int)
    sub.add_argument('--out', default='samples.b8')
    sub.set_defaults(func=cmd_sample)

    sub = commands.add_parser('decode', parents=[common, decoding], help="decode samples against a model")
    sub.add_argument('--dem', required=True, help="detector error model file")
    sub.add_argument('--shots', dest='samples', required=True, help="packed samples written by ``sample``")
    sub.add_argument('--p', type=float, help="error rate the samples were drawn at, for the p column")
    sub.add_argument('--out', help="CSV file (default: stdout)")
    sub.set_defaults(func=cmd_decode)

    sub = commands.add_parser('table1', parents=[common, distance], help="rerun the search and diff the table")
    sub.add_argument('--max-ell', dest='max_ell', type=int, default=30)
    sub.add_argument('--out', help="CSV file")
    sub.set_defaults(func=cmd_table1)

    sub = commands.add_parser('threshold', parents=[common, memory, decoding], help="p_L over a grid of p")
    sub.add_argument('codes', nargs='+', help="code descriptors")
    sub.add_argument('--ps', type=_probabilities, default=[0.006, 0.008, 0.010, 0.012, 0.014])
    sub.add_argument('--shots', type=int)
    sub.add_argument('--chunk-shots', dest='chunk_shots', type=int)
    sub.add_argument('--out', help="CSV file (default: stdout)")
    sub.set_defaults(func=cmd_threshold)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=max(logging.DEBUG, logging.WARNING - 10 * args.verbose),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    flags = {key: getattr(args, key) for key in DEFAULTS if hasattr(args, key)}
    try:
        settings = Settings.load(args.config, **flags)
        return args.func(args, settings, provenance(argv, settings)) or 0
    except ImproperlyConfigured as exc:
        print(f"{PROG} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except InvariantError as exc:
        logger.exception(f"invariant violated in {args.command}")
        print(f"{PROG} {args.command}: invariant violated: {exc}", file=sys.stderr)
        return 1
    except (AMCError, ValueError, OSError) as exc:
        print(f"{PROG} {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
