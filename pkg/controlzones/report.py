"""
Plain-text reports built from serialized artifacts. Every function takes the
JSON-ready dicts written by ``controlzones.serializers.python`` so a report
can be rebuilt from an output directory without recomputing anything.
"""
import logging

from sklearn.metrics import adjusted_rand_score

from controlzones import exceptions
from controlzones import workspace
from controlzones.quality import Partition
from controlzones.serializers import python as python_serializer
from controlzones.zoning import cutoff_percentage

log = logging.getLogger(__name__)

PLAN_COLUMNS = ('Zone', 'Area (km2)', 'Pop. (10^4)', 'Intra trips',
                'Total trips', 'Cut-off (%)')
DOUBLE_COUNT_NOTE = ('Zone rows count a cross-zone trip in both zones; the '
                     'Sum row counts every trip once.')


def _table(header, rows):
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    lines = ['  '.join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append('  '.join('-' * w for w in widths))
    for row in rows:
        lines.append('  '.join(c.rjust(w) for c, w in zip(row, widths)))
    return lines


def _quality(value):
    return 'n/a' if value is None else '{:.4f}'.format(value)


def _signed(value, fmt='{:+.4f}'):
    return 'n/a' if value is None else fmt.format(value)


def _plan_row(label, area, population, intra, total):
    return [str(label), '{:.2f}'.format(area),
            '{:.2f}'.format(population / 1e4), str(intra), str(total),
            '{:.1f}'.format(cutoff_percentage(intra, total))]


def format_plan(plan, title=None):
    """
    A zone table with one row per zone and a Sum row (sum of intra trips over
    the grand total), followed by both quality values.
    """
    zones = plan.get('zones') or []
    if not zones:
        raise exceptions.ConfigurationError('cannot report an empty plan')
    rows = [_plan_row(z['zone_id'], z['area_km2'], z['population'],
                      z['intra_trips'], z['total_trips']) for z in zones]
    rows.append(_plan_row('Sum', plan['area_km2'], plan['population'],
                          plan['intra_trips'], plan['total_trips']))
    lines = []
    if title:
        lines.extend([title, '=' * len(title)])
    lines.extend(_table(PLAN_COLUMNS, rows))
    lines.append('')
    lines.append('Zones: {}'.format(len(zones)))
    lines.append('Modularity: {}'.format(_quality(plan.get('modularity'))))
    lines.append('Quality [{}]: {}'.format(
        plan.get('quality') or 'n/a', _quality(plan.get('geo_modularity'))))
    lines.append(DOUBLE_COUNT_NOTE)
    for note in plan.get('notes') or ():
        lines.append('Note: {}'.format(note))
    return '\n'.join(lines) + '\n'


def format_comparison(comparison, title='Comparison'):
    """Two plans side by side with their differences."""
    plan, reference = comparison['plan'], comparison['reference']
    header = ('', 'Plan', 'Reference', 'Delta')
    rows = [
        ['Zones', str(len(plan['zones'])), str(len(reference['zones'])),
         '{:+d}'.format(comparison['zone_delta'])],
        ['Cut-off (%)',
         '{:.1f}'.format(cutoff_percentage(plan['intra_trips'],
                                           plan['total_trips'])),
         '{:.1f}'.format(cutoff_percentage(reference['intra_trips'],
                                           reference['total_trips'])),
         '{:+.1f}'.format(-comparison['cutoff_reduction'])],
        ['Modularity', _quality(plan.get('modularity')),
         _quality(reference.get('modularity')),
         _signed(comparison.get('modularity_delta'))],
        ['Quality', _quality(plan.get('geo_modularity')),
         _quality(reference.get('geo_modularity')),
         _signed(comparison.get('geo_modularity_delta'))],
    ]
    lines = [title, '=' * len(title)]
    lines.extend(_table(header, rows))
    lines.append('Cut-off reduction: {:.1f} percentage points'.format(
        comparison['cutoff_reduction']))
    return '\n'.join(lines) + '\n'


def format_network_summary(summary, title='Network'):
    lines = [title, '=' * len(title)]
    labels = [
        ('nodes', 'Nodes'),
        ('edges', 'Edges'),
        ('self_loops', 'Self loops'),
        ('isolated', 'Isolated nodes'),
        ('total_trips', 'Trips'),
        ('total_weight_2m', 'Total weight (2m)'),
        ('alpha', 'Alpha'),
    ]
    for key, label in labels:
        if key in summary:
            value = summary[key]
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            lines.append('{}: {}'.format(label, value))
    return '\n'.join(lines) + '\n'


def format_cleaning_report(report, title='Cleaning'):
    lines = [title, '=' * len(title)]
    reasons = ('duplicate', 'null_field', 'out_of_bounds', 'speed_anomaly',
               'duration_anomaly', 'unmatched_endpoint')
    lines.append('Received: {}'.format(report['received']))
    lines.append('Kept: {}'.format(report['kept']))
    lines.append('Dropped: {}'.format(report['dropped']))
    for reason in reasons:
        lines.append('  {}: {}'.format(reason.replace('_', ' '),
                                       report.get(reason, 0)))
    malformed = report.get('malformed') or []
    if malformed:
        lines.append('Malformed rows: {}'.format(len(malformed)))
    for mode, trips in sorted((report.get('provenance') or {}).items()):
        lines.append('Trips [{}]: {}'.format(mode, trips))
    return '\n'.join(lines) + '\n'


def adjusted_rand(partition, truth):
    """Adjusted Rand index between two partitions of the same TAZs."""
    if set(partition.assignment) != set(truth.assignment):
        msg = 'partition and truth cover different TAZ sets'
        raise exceptions.ValidationError(msg)
    ids = sorted(partition.assignment)
    return float(adjusted_rand_score([truth.assignment[i] for i in ids],
                                     [partition.assignment[i] for i in ids]))


def truth_partition(truth_document):
    """The planted partition stored in a synth truth file."""
    assignment = truth_document.get('assignment')
    if not assignment:
        raise exceptions.ArtifactError('truth file has no assignment')
    return Partition.from_membership(
        {int(t): int(z) for t, z in assignment.items()})


def build_report(ws, truth=None):
    """
    The full report for an output directory: cleaning, network, detected
    plan, reference and merge comparisons, whichever exist. ``truth`` is a
    truth document from ``synth``.
    """
    plan = ws.read_json(workspace.ZONE_PLAN)
    sections = []
    if ws.exists(workspace.CLEANING_REPORT):
        sections.append(format_cleaning_report(
            ws.read_json(workspace.CLEANING_REPORT)))
    detection = None
    if ws.exists(workspace.DETECTION):
        detection = ws.read_json(workspace.DETECTION)
        if 'network' in detection:
            sections.append(format_network_summary(detection['network']))
    text = format_plan(plan, title='Zone plan')
    if detection is not None:
        repair = detection.get('repair') or {}
        text += 'Iterations: {}, seed: {}, repair merges: {}\n'.format(
            detection.get('iterations'), detection.get('seed'),
            repair.get('merges', 0))
    if truth is not None:
        ari = adjusted_rand(python_serializer.plan_partition(plan),
                            truth_partition(truth))
        text += 'Adjusted Rand index vs truth: {:.4f}\n'.format(ari)
    sections.append(text)
    if ws.exists(workspace.REFERENCE_COMPARISON):
        sections.append(format_comparison(
            ws.read_json(workspace.REFERENCE_COMPARISON),
            title='Plan vs reference'))
    if ws.exists(workspace.MERGED_PLAN):
        sections.append(format_plan(ws.read_json(workspace.MERGED_PLAN),
                                    title='Merged plan'))
    if ws.exists(workspace.MERGE_COMPARISON):
        sections.append(format_comparison(
            ws.read_json(workspace.MERGE_COMPARISON),
            title='Merged vs detected'))
    log.debug('report: %d sections', len(sections))
    return '\n'.join(sections)
