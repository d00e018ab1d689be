import contextlib
import io
import os

from controlzones.test import ControlZonesTestCase
from controlzones.test import fixtures

SYNTH_ARGS = ['synth', '--rows', '4', '--cols', '4', '--blocks', '2x2',
              '--trips', '3000']


class CommandLineTest(ControlZonesTestCase):
    def setUp(self):
        super(CommandLineTest, self).setUp()
        from controlzones import workspace
        self.workspace = workspace
        self.out = self.config.OUT

    def run_main(self, *argv):
        from controlzones.cli import main
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), \
                contextlib.redirect_stderr(stderr):
            code = main(list(argv))
        return code, stdout.getvalue()

    def artifact(self, name):
        return os.path.join(self.out, name)

    def test_pipeline(self):
        code, output = self.run_main(*SYNTH_ARGS + ['--out', self.out])
        self.assertEqual(code, 0)
        self.assertIn('16 TAZs', output)
        self.assertTrue(os.path.exists(self.artifact(self.workspace.TRUTH)))

        code, output = self.run_main('--out', self.out, 'ingest')
        self.assertEqual(code, 0)
        self.assertIn('3000 kept of 3000 received', output)

        code, output = self.run_main('detect', '--out', self.out,
                                     '--quality', 'standard')
        self.assertEqual(code, 0)
        for name in (self.workspace.PARTITION, self.workspace.NETWORK,
                     self.workspace.DETECTION, self.workspace.ZONE_PLAN,
                     self.workspace.ZONE_PLAN_CSV,
                     self.workspace.ZONE_PLAN_GEOJSON,
                     self.workspace.QUALITY_TRACE,
                     self.workspace.REPAIR_LOG):
            self.assertTrue(os.path.exists(self.artifact(name)), name)

        code, output = self.run_main('merge', '--out', self.out,
                                     '--merge-k', '1')
        self.assertEqual(code, 0)
        self.assertIn('into 1, cut-off 0.0%', output)

        code, output = self.run_main('report', '--out', self.out)
        self.assertEqual(code, 0)
        self.assertIn('Zone plan', output)
        self.assertIn('Merged plan', output)
        self.assertIn('Adjusted Rand index vs truth', output)
        self.assertTrue(os.path.exists(self.artifact(self.workspace.REPORT)))

        from controlzones.workspace import Workspace
        runs = Workspace(self.out).manifest()['runs']
        self.assertEqual(sorted(runs),
                         ['detect', 'ingest', 'merge', 'report', 'synth'])

    def test_deterministic_detection(self):
        self.run_main(*SYNTH_ARGS + ['--out', self.out])
        self.run_main('ingest', '--out', self.out)
        self.run_main('detect', '--out', self.out)
        with open(self.artifact(self.workspace.PARTITION)) as f:
            first = f.read()
        self.run_main('detect', '--out', self.out)
        with open(self.artifact(self.workspace.PARTITION)) as f:
            self.assertEqual(f.read(), first)

    def test_reference_comparison(self):
        tazs = fixtures.grid_tazs(2, 2)
        tazs_path = fixtures.write_tazs(self.path('tazs.geojson'), tazs)
        flows_path = fixtures.write_flows(self.path('flows.csv'), {
            (0, 1): 20, (2, 3): 20, (0, 2): 1, (1, 3): 1})
        reference = self.write_file('districts.csv',
                                    'taz_id,zone_id\n0,0\n1,1\n2,0\n3,1\n')
        code, output = self.run_main(
            'detect', '--out', self.out, '--tazs', tazs_path, '--flows',
            flows_path, '--reference', reference, '--quality', 'standard')
        self.assertEqual(code, 0)
        from controlzones.workspace import Workspace
        comparison = Workspace(self.out).read_json(
            self.workspace.REFERENCE_COMPARISON)
        self.assertGreater(comparison['cutoff_reduction'], 0)

    def test_commit_artifacts(self):
        code, _ = self.run_main(*SYNTH_ARGS + ['--out', self.out,
                                               '--commit-artifacts'])
        self.assertEqual(code, 0)
        self.assertTrue(os.path.isdir(os.path.join(self.out, '.git')))

    def test_ingest_writes_ridership_layers(self):
        self.run_main(*SYNTH_ARGS + ['--out', self.out])
        self.run_main('ingest', '--out', self.out)
        from controlzones.workspace import Workspace
        ws = Workspace(self.out)
        ridership = ws.read_json(self.workspace.RIDERSHIP_GEOJSON)
        self.assertEqual(len(ridership['features']), 16)
        trips = sum(f['properties']['origin_trips']
                    for f in ridership['features'])
        self.assertEqual(trips, 3000)
        lines = ws.read_json(self.workspace.FLOW_LINES_GEOJSON)
        self.assertTrue(lines['features'])
        self.assertEqual(lines['features'][0]['geometry']['type'],
                         'LineString')

    def test_null_model_flag(self):
        self.run_main(*SYNTH_ARGS + ['--out', self.out])
        self.run_main('ingest', '--out', self.out)
        code, _ = self.run_main('detect', '--out', self.out,
                                '--null-model', 'strength')
        self.assertEqual(code, 0)
        from controlzones.workspace import Workspace
        plan = Workspace(self.out).read_json(self.workspace.ZONE_PLAN)
        self.assertIn('null=strength', plan['quality'])
        self.assertEqual(self.run_main('detect', '--out', self.out,
                                       '--null-model', 'uniform')[0], 1)

    def test_metro_link_is_repaired(self):
        tazs_path = fixtures.write_tazs(self.path('tazs.geojson'),
                                        fixtures.grid_tazs(1, 5))
        # TAZs 0 and 4 share no edge but trade many trips
        flows_path = fixtures.write_flows(self.path('flows.csv'), {
            (0, 1): 10, (0, 4): 10, (2, 3): 10, (3, 4): 1})
        code, output = self.run_main(
            'detect', '--out', self.out, '--tazs', tazs_path, '--flows',
            flows_path, '--quality', 'standard')
        self.assertEqual(code, 0)
        self.assertIn('1 repair merges', output)
        from controlzones.workspace import Workspace
        entries = Workspace(self.out).read_jsonl(self.workspace.REPAIR_LOG)
        self.assertEqual(len(entries), 1)
        self.assertEqual(entries[0]['fragment'], [4])

    def test_single_zone_note(self):
        tazs_path = fixtures.write_tazs(self.path('tazs.geojson'),
                                        fixtures.grid_tazs(1, 3))
        flows_path = fixtures.write_flows(self.path('flows.csv'), {
            (0, 1): 5, (1, 2): 5, (0, 2): 5})
        code, output = self.run_main(
            'detect', '--out', self.out, '--tazs', tazs_path, '--flows',
            flows_path, '--quality', 'standard')
        self.assertEqual(code, 0)
        self.assertIn('detect: 1 zones', output)
        from controlzones.workspace import Workspace
        plan = Workspace(self.out).read_json(self.workspace.ZONE_PLAN)
        self.assertTrue(any('single zone' in note
                            for note in plan['notes']))

    def test_merge_fifteen_zones(self):
        self.run_main('synth', '--out', self.out, '--rows', '3', '--cols',
                      '5', '--blocks', '3x5', '--trips', '5000')
        self.run_main('ingest', '--out', self.out)
        # every TAZ starts as its own zone
        partition = self.write_file('zones.csv', 'taz_id,zone_id\n' + ''.join(
            '{0},{0}\n'.format(i) for i in range(15)))
        code, output = self.run_main('merge', '--out', self.out,
                                     '--partition', partition,
                                     '--merge-k', '3')
        self.assertEqual(code, 0)
        self.assertIn('merge: 15 zones into 3', output)
        from controlzones.workspace import Workspace
        plan = Workspace(self.out).read_json(self.workspace.MERGED_PLAN)
        self.assertEqual(len(plan['zones']), 3)

    def test_config_file(self):
        config = self.write_file('run.toml', '\n'.join([
            'out = "{}"'.format(self.out.replace('\\', '/')),
            '[synth]', 'rows = 2', 'cols = 2', 'blocks = [1, 1]',
            'trips = 100', '']))
        code, output = self.run_main('--config', config, 'synth')
        self.assertEqual(code, 0)
        self.assertIn('4 TAZs, 100 trips', output)


class ExitCodeTest(CommandLineTest):
    def test_usage_errors(self):
        self.assertEqual(self.run_main()[0], 1)
        self.assertEqual(self.run_main('explode')[0], 1)
        self.assertEqual(self.run_main('synth', '--blocks', 'two')[0], 1)
        self.assertEqual(self.run_main('merge', '--out', self.out,
                                       '--merge-k', '0')[0], 1)
        bad = self.write_file('bad.toml', '[quality]\nkind = "spectral"\n')
        self.assertEqual(self.run_main('--config', bad, 'synth')[0], 1)

    def test_missing_inputs(self):
        self.assertEqual(self.run_main('detect', '--out', self.out)[0], 2)
        self.assertEqual(self.run_main('report', '--out', self.out)[0], 2)
        self.assertEqual(self.run_main('detect', '--out', self.out,
                                       '--tazs', self.path('nope'))[0], 2)

    def test_empty_network(self):
        tazs_path = fixtures.write_tazs(self.path('tazs.geojson'),
                                        fixtures.grid_tazs(2, 2))
        flows_path = fixtures.write_flows(self.path('flows.csv'), {})
        code, _ = self.run_main('detect', '--out', self.out, '--tazs',
                                tazs_path, '--flows', flows_path)
        self.assertEqual(code, 3)

    def test_infeasible_merge(self):
        self.run_main(*SYNTH_ARGS + ['--out', self.out])
        self.run_main('ingest', '--out', self.out)
        self.run_main('detect', '--out', self.out)
        code, _ = self.run_main('merge', '--out', self.out, '--merge-k', '99')
        self.assertEqual(code, 4)
        self.assertFalse(os.path.exists(
            self.artifact(self.workspace.MERGED_PLAN)))

    def test_exit_code_mapping(self):
        from controlzones import cli
        self.assertEqual(cli.exit_code(self.exceptions.HeaderMismatch(
            'a.csv', ('x',), ('y',))), cli.EXIT_INPUT)
        self.assertEqual(cli.exit_code(self.exceptions.EmptyNetwork('')),
                         cli.EXIT_EMPTY)
        self.assertEqual(cli.exit_code(self.exceptions.ControlZonesError()),
                         cli.EXIT_USAGE)
