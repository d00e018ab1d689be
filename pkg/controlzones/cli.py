"""
The ``controlzones`` command line: ``synth``, ``ingest``, ``detect``,
``merge`` and ``report``. Every command reads its settings from DEFAULTS, an
optional TOML file and flags (flags win), and writes its artifacts to the
output directory atomically.

Exit codes: 0 success, 1 usage or configuration error, 2 invalid input or
missing artifact, 3 empty network, 4 infeasible zone count.
"""
import argparse
import logging
import sys

from controlzones import conf
from controlzones import contiguity
from controlzones import exceptions
from controlzones import geo
from controlzones import report
from controlzones import workspace
from controlzones import zoning
from controlzones.ingest import FlowMatrix, ingest_files
from controlzones.leiden import detect
from controlzones.network import build_network, network_summary
from controlzones.quality import Partition
from controlzones.serializers import csv as csv_serializer
from controlzones.serializers import geojson
from controlzones.serializers import json as json_serializer
from controlzones.serializers import python as python_serializer
from controlzones.synth import generate_city

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_EMPTY = 3
EXIT_INFEASIBLE = 4

# checked in order; the first matching class wins
EXIT_CODES = (
    (exceptions.ConfigurationError, EXIT_USAGE),
    (exceptions.EmptyNetwork, EXIT_EMPTY),
    (exceptions.Infeasible, EXIT_INFEASIBLE),
    ((exceptions.ValidationError, exceptions.UnreadableFile,
      exceptions.HeaderMismatch, exceptions.ArtifactError,
      exceptions.InvalidGeometry, exceptions.PairError), EXIT_INPUT),
)


def exit_code(error):
    for classes, code in EXIT_CODES:
        if isinstance(error, classes):
            return code
    return EXIT_USAGE


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1 instead of argparse's 2."""
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError('{}: error: {}'.format(self.prog, message))


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError('must be >= 1')
    return value


def _blocks(text):
    try:
        rows, cols = (int(v) for v in text.lower().split('x'))
    except ValueError:
        raise argparse.ArgumentTypeError('expected ROWSxCOLS, e.g. 2x2')
    return (rows, cols)


def _global_flags(parser, default):
    """Flags accepted before or after the command name."""
    add = parser.add_argument
    add('--config', default=default, metavar='PATH',
        help='TOML configuration file')
    add('--seed', dest='SEED', type=int, default=default)
    add('--out', dest='OUT', default=default, metavar='DIR',
        help='output directory')
    add('--quality', dest='QUALITY_KIND', default=default,
        choices=('standard', 'geographic'))
    add('--alpha', dest='QUALITY_ALPHA', type=float, default=default,
        help='distance decay exponent')
    add('--m-convention', dest='QUALITY_M_CONVENTION', default=default,
        choices=('raw', 'deflated'))
    add('--null-model', dest='QUALITY_NULL_MODEL', default=default,
        choices=('strength', 'gravity'),
        help='expected-flow model of geographic quality')
    add('--min-zone-km2', dest='CONTIGUITY_MIN_ZONE_KM2', type=float,
        default=default)
    add('--merge-k', dest='MERGE_K', type=int, default=default)
    add('--lambda-pop', dest='MERGE_LAMBDA_POP', type=float,
        default=default)
    add('--lambda-area', dest='MERGE_LAMBDA_AREA', type=float,
        default=default)
    add('--merge-exact', dest='MERGE_EXACT', action='store_const',
        const=True, default=default)
    add('--drop-self-loops', dest='NETWORK_DROP_SELF_LOOPS',
        action='store_const', const=True, default=default)
    add('--commit-artifacts', dest='COMMIT_ARTIFACTS', action='store_const',
        const=True, default=default,
        help='commit the output directory to git after the command')
    add('-v', '--verbose', action='count', default=default)


def make_parser():
    parser = ArgumentParser(
        prog='controlzones',
        description='Delineate control zones from trip flows.')
    _global_flags(parser, None)
    common = ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)

    commands = parser.add_subparsers(dest='command', metavar='COMMAND',
                                     parser_class=ArgumentParser)
    commands.required = True

    synth = commands.add_parser('synth', parents=[common],
                                help='generate a synthetic city')
    synth.add_argument('--rows', dest='SYNTH_ROWS', type=_positive_int)
    synth.add_argument('--cols', dest='SYNTH_COLS', type=_positive_int)
    synth.add_argument('--cell-km', dest='SYNTH_CELL_KM', type=float)
    synth.add_argument('--blocks', dest='SYNTH_BLOCKS', type=_blocks,
                       metavar='ROWSxCOLS')
    synth.add_argument('--beta', dest='SYNTH_BETA', type=float)
    synth.add_argument('--intra-multiplier', dest='SYNTH_INTRA_MULTIPLIER',
                       type=float)
    synth.add_argument('--trips', dest='SYNTH_TRIPS', type=int)
    synth.add_argument('--metro-links', dest='SYNTH_METRO_LINKS', type=int)
    synth.add_argument('--self-trips', dest='SYNTH_SELF_TRIPS',
                       action='store_const', const=True)

    ingest = commands.add_parser('ingest', parents=[common],
                                 help='clean trips and aggregate flows')
    ingest.add_argument('--tazs', dest='TAZS', metavar='PATH')
    ingest.add_argument('--trips', dest='TRIPS', action='append',
                        type=conf.parse_trip_source, metavar='PATH[:MODE]')

    detect_cmd = commands.add_parser('detect', parents=[common],
                                     help='detect contiguous zones')
    detect_cmd.add_argument('--tazs', dest='TAZS', metavar='PATH')
    detect_cmd.add_argument('--flows', dest='FLOWS', metavar='PATH')
    detect_cmd.add_argument('--distances', dest='DISTANCES', metavar='PATH')
    detect_cmd.add_argument('--reference', dest='REFERENCE', metavar='PATH',
                            help='partition CSV to compare against')
    detect_cmd.add_argument('--theta', dest='LEIDEN_THETA', type=float)

    merge = commands.add_parser('merge', parents=[common],
                                help='merge detected zones into K zones')
    merge.add_argument('--tazs', dest='TAZS', metavar='PATH')
    merge.add_argument('--flows', dest='FLOWS', metavar='PATH')
    merge.add_argument('--distances', dest='DISTANCES', metavar='PATH')
    merge.add_argument('--partition', dest='PARTITION', metavar='PATH')

    report_cmd = commands.add_parser('report', parents=[common],
                                     help='print the zone tables')
    report_cmd.add_argument('--truth', dest='TRUTH', metavar='PATH')
    return parser


def load_config(args):
    if args.config:
        config = conf.Config.from_toml(args.config)
    else:
        config = conf.Config()
    config.update_from_args({k: v for k, v in vars(args).items()
                             if k.isupper()})
    config.validate()
    config.check_paths()
    return config


def _input(config, ws, key, artifact):
    """A configured input path, or the artifact a previous command wrote."""
    if config[key]:
        return config[key]
    return ws.require(artifact)


def _load_network(config, ws):
    """TAZs, adjacency, network and input paths for detect and merge."""
    tazs_path = _input(config, ws, 'TAZS', workspace.TAZS)
    flows_path = _input(config, ws, 'FLOWS', workspace.FLOWS)
    inputs = [tazs_path, flows_path]
    tazs = geo.load_tazs(tazs_path)
    user_matrix = None
    if config.DISTANCES:
        user_matrix = geo.load_distance_csv(config.DISTANCES)
        inputs.append(config.DISTANCES)
    dist = geo.build_distance_matrix(tazs, user_matrix,
                                     config.distance_floor())
    net = build_network(FlowMatrix.from_csv(flows_path), dist,
                        alpha=float(config.QUALITY_ALPHA), tazs=tazs,
                        drop_self_loops=bool(config.NETWORK_DROP_SELF_LOOPS))
    adj = geo.build_adjacency(tazs, snap_tol=config.CONTIGUITY_SNAP_TOL_M)
    return tazs, adj, net, inputs


def _write_plan(staging, tazs, plan, json_name, csv_name, geojson_name):
    staging.write_json(json_name, python_serializer.plan(plan))
    staging.write_csv(csv_name, csv_serializer.PLAN_HEADER,
                      csv_serializer.plan_rows(plan))
    staging.write_json(geojson_name, geojson.plan_collection(tazs, plan))


def cmd_synth(config, ws):
    city = generate_city(config.synth_spec())
    with ws.transaction('synth') as staging:
        staging.write_json(workspace.TAZS, geojson.taz_collection(city.tazs))
        staging.write_csv(workspace.TRIPS, csv_serializer.TRIP_HEADER,
                          city.trips)
        staging.write_json(workspace.TRUTH, city.truth_document())
    print('synth: {} TAZs, {} trips, {} planted zones'.format(
        len(city.tazs), len(city.trips), len(set(city.truth.values()))))


def cmd_ingest(config, ws):
    tazs_path = _input(config, ws, 'TAZS', workspace.TAZS)
    sources = list(config.TRIPS) or [(ws.require(workspace.TRIPS), None)]
    tazs = geo.load_tazs(tazs_path)
    result = ingest_files(sources, tazs, config.cleaning_rules(tazs))
    cleaning = python_serializer.cleaning(result.report, result.malformed,
                                          result.flows.provenance)
    cleaning['rows'] = result.rows
    cleaning['parsed'] = result.parsed
    inputs = [tazs_path] + [path for path, _ in sources]
    with ws.transaction('ingest', inputs) as staging:
        staging.write_csv(workspace.FLOWS, csv_serializer.FLOW_HEADER,
                          csv_serializer.flows_rows(result.flows))
        staging.write_json(workspace.CLEANING_REPORT, cleaning)
        staging.write_json(workspace.RIDERSHIP_GEOJSON,
                           geojson.ridership_collection(tazs, result.flows))
        staging.write_json(workspace.FLOW_LINES_GEOJSON,
                           geojson.flow_lines(tazs, result.flows))
    print('ingest: {} kept of {} received, {} flow cells'.format(
        result.report.kept, result.report.received,
        len(result.flows.flows)))


def cmd_detect(config, ws):
    tazs, adj, net, inputs = _load_network(config, ws)
    cfg = config.quality_config()
    result = detect(net, config.leiden_params())
    repaired = contiguity.repair(result.partition, adj, net, cfg,
                                 config.CONTIGUITY_MIN_ZONE_KM2)
    plan = zoning.make_plan(repaired.partition, net, cfg)
    for _, members in repaired.islands:
        plan.notes.append('zone with TAZs {} has no polygon neighbor'.format(
            list(members)))
    if repaired.fallbacks:
        plan.notes.append('{} fragments merged without a positive quality '
                          'gain'.format(repaired.fallbacks))
    if len(result.partition) == 1 and len(net) > 1:
        plan.notes.append('{} found a single zone; try another null model '
                          'or m convention'.format(cfg.label))

    comparison = None
    if config.REFERENCE:
        reference = Partition.from_membership(
            csv_serializer.read_partition(config.REFERENCE))
        comparison = zoning.compare_to_reference(repaired.partition,
                                                 reference, net, cfg)
        inputs.append(config.REFERENCE)

    detection = python_serializer.detection(result)
    detection['network'] = network_summary(net)
    detection['repair'] = python_serializer.repair(repaired)
    with ws.transaction('detect', inputs) as staging:
        staging.write_csv(workspace.PARTITION, csv_serializer.PARTITION_HEADER,
                          csv_serializer.partition_rows(repaired.partition))
        staging.write_csv(workspace.NETWORK, csv_serializer.NETWORK_HEADER,
                          csv_serializer.network_rows(net))
        staging.write_json(workspace.QUALITY_TRACE,
                           detection['quality_trace'])
        staging.write_json(workspace.DETECTION, detection)
        staging.write_jsonl(workspace.REPAIR_LOG,
                            [python_serializer.repair_entry(e)
                             for e in repaired.log])
        _write_plan(staging, tazs, plan, workspace.ZONE_PLAN,
                    workspace.ZONE_PLAN_CSV, workspace.ZONE_PLAN_GEOJSON)
        if comparison is not None:
            staging.write_json(workspace.REFERENCE_COMPARISON,
                               python_serializer.comparison(comparison))
    print('detect: {} zones, cut-off {:.1f}%, {} repair merges'.format(
        len(plan), plan.cutoff_pct, len(repaired.log)))


def cmd_merge(config, ws):
    obj = config.merge_objective()
    tazs, adj, net, inputs = _load_network(config, ws)
    partition_path = _input(config, ws, 'PARTITION', workspace.PARTITION)
    inputs.append(partition_path)
    partition = Partition.from_membership(
        csv_serializer.read_partition(partition_path))
    cfg = config.quality_config()
    plan = zoning.make_plan(partition, net, cfg)
    if config.MERGE_EXACT:
        merged = zoning.merge_exact(plan, adj, net, obj, cfg)
    else:
        merged = zoning.merge_to_k(plan, adj, net, obj, cfg)
    comparison = zoning.Comparison(plan=merged, reference=plan)
    with ws.transaction('merge', inputs) as staging:
        staging.write_csv(workspace.MERGED_PARTITION,
                          csv_serializer.PARTITION_HEADER,
                          csv_serializer.partition_rows(merged.partition))
        _write_plan(staging, tazs, merged, workspace.MERGED_PLAN,
                    workspace.MERGED_PLAN_CSV, workspace.MERGED_PLAN_GEOJSON)
        staging.write_json(workspace.MERGE_COMPARISON,
                           python_serializer.comparison(comparison))
    print('merge: {} zones into {}, cut-off {:.1f}%'.format(
        len(plan), len(merged), merged.cutoff_pct))


def cmd_report(config, ws):
    truth = None
    inputs = []
    if config.TRUTH:
        with open(config.TRUTH, encoding='utf-8') as f:
            text = f.read()
        try:
            truth = json_serializer.deserialize(text)
        except ValueError as e:
            raise exceptions.ArtifactError('{}: {}'.format(config.TRUTH, e))
        inputs.append(config.TRUTH)
    elif ws.exists(workspace.TRUTH):
        truth = ws.read_json(workspace.TRUTH)
    text = report.build_report(ws, truth)
    with ws.transaction('report', inputs) as staging:
        staging.write_text(workspace.REPORT, text)
    sys.stdout.write(text)


COMMANDS = {
    'synth': cmd_synth,
    'ingest': cmd_ingest,
    'detect': cmd_detect,
    'merge': cmd_merge,
    'report': cmd_report,
}


def configure_logging(verbosity):
    levels = {0: logging.WARNING, 1: logging.INFO}
    level = levels.get(verbosity or 0, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write('{}\n'.format(e))
        return EXIT_USAGE
    configure_logging(args.verbose)
    try:
        config = load_config(args)
        ws = workspace.Workspace(config.OUT, config)
        COMMANDS[args.command](config, ws)
        if config.COMMIT_ARTIFACTS:
            ws.commit('{}: seed {}'.format(args.command, config.SEED))
    except exceptions.ControlZonesError as e:
        log.error('%s', e)
        return exit_code(e)
    except OSError as e:
        log.error('%s', e)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
