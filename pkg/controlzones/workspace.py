"""
The artifact workspace: an output directory that every command writes into
atomically, with a manifest of content hashes, optionally committed to a git
repository inside the directory.
"""
from contextlib import contextmanager
import logging
import os
import shutil
import tempfile

import pygit2

from controlzones import conf
from controlzones import exceptions
from controlzones import utils
from controlzones.serializers import csv as csv_serializer
from controlzones.serializers import json as json_serializer

TAZS = 'tazs.geojson'
TRIPS = 'trips.csv'
TRUTH = 'truth.json'
FLOWS = 'flows.csv'
CLEANING_REPORT = 'cleaning_report.json'
RIDERSHIP_GEOJSON = 'taz_ridership.geojson'
FLOW_LINES_GEOJSON = 'flow_lines.geojson'
NETWORK = 'network.csv'
PARTITION = 'partition.csv'
QUALITY_TRACE = 'quality_trace.json'
DETECTION = 'detection.json'
REPAIR_LOG = 'repair_log.jsonl'
ZONE_PLAN = 'zone_plan.json'
ZONE_PLAN_CSV = 'zone_plan.csv'
ZONE_PLAN_GEOJSON = 'zone_plan.geojson'
REFERENCE_COMPARISON = 'reference_comparison.json'
MERGED_PARTITION = 'merged_partition.csv'
MERGED_PLAN = 'merged_plan.json'
MERGED_PLAN_CSV = 'merged_plan.csv'
MERGED_PLAN_GEOJSON = 'merged_plan.geojson'
MERGE_COMPARISON = 'merge_comparison.json'
REPORT = 'report.txt'
MANIFEST = 'manifest.json'


def hash_file(path):
    """Git blob id of a file's content."""
    return str(pygit2.hashfile(path))


class Staging(object):
    """
    Files written during a transaction. Nothing is visible in the output
    directory until the transaction succeeds.
    """
    def __init__(self, path):
        self.path = path
        self.names = []

    def filename(self, name):
        if name not in self.names:
            self.names.append(name)
        return os.path.join(self.path, name)

    def write_text(self, name, text):
        with open(self.filename(name), 'w', encoding='utf-8',
                  newline='') as f:
            f.write(text)

    def write_json(self, name, pyobj):
        with open(self.filename(name), 'w', encoding='utf-8') as f:
            json_serializer.serialize(pyobj, f)

    def write_jsonl(self, name, records):
        with open(self.filename(name), 'w', encoding='utf-8') as f:
            json_serializer.serialize_lines(records, f)

    def write_csv(self, name, header, rows):
        with open(self.filename(name), 'w', encoding='utf-8',
                  newline='') as f:
            csv_serializer.dump_rows(header, rows, f)


class Workspace(object):
    """
    An output directory of plain artifact files. Commands stage their
    artifacts with ``transaction()``; on success the files replace any
    previous versions and the manifest records the run.
    """
    def __init__(self, out_dir, config=None):
        self.path = os.path.abspath(out_dir)
        self.config = config or conf.Config()
        self.log = logging.getLogger(__name__)

    def __repr__(self):
        return '<Workspace: {}>'.format(self.path)

    def artifact(self, name):
        return os.path.join(self.path, name)

    def exists(self, name):
        return os.path.isfile(self.artifact(name))

    def require(self, name):
        """Path of an artifact; raises ArtifactError if it is missing."""
        path = self.artifact(name)
        if not os.path.isfile(path):
            msg = 'missing artifact {} in {}'.format(name, self.path)
            raise exceptions.ArtifactError(msg)
        return path

    def read_text(self, name):
        with open(self.require(name), encoding='utf-8') as f:
            return f.read()

    def read_json(self, name):
        try:
            return json_serializer.deserialize(self.read_text(name))
        except ValueError as e:
            msg = '{}: {}'.format(self.artifact(name), e)
            raise exceptions.ArtifactError(msg)

    def read_jsonl(self, name):
        return json_serializer.deserialize_lines(self.read_text(name))

    def read_csv(self, name, header):
        """Rows of a CSV artifact as dicts; the header must match."""
        return csv_serializer.read_table(self.require(name), header)

    def manifest(self):
        if not self.exists(MANIFEST):
            return {'runs': {}}
        return self.read_json(MANIFEST)

    @contextmanager
    def transaction(self, command, inputs=()):
        """
        A context manager that stages artifacts in a temporary directory next
        to the workspace and moves them in only if the block succeeds, then
        records the run in the manifest. On failure nothing is written.
        """
        os.makedirs(self.path, exist_ok=True)
        stage_dir = tempfile.mkdtemp(prefix='.staging-', dir=self.path)
        staging = Staging(stage_dir)
        try:
            yield staging
            staged = sorted(staging.names)
            hashes = {name: hash_file(os.path.join(stage_dir, name))
                      for name in staged}
            manifest = self.manifest()
            manifest['runs'][command] = {
                'config': self.config.as_dict(),
                'seed': self.config.SEED,
                'inputs': {os.path.abspath(p): hash_file(p)
                           for p in sorted(set(inputs))},
                'artifacts': hashes,
            }
            artifacts = dict(manifest.get('artifacts', {}))
            artifacts.update(hashes)
            manifest['artifacts'] = artifacts
            staging.write_json(MANIFEST, manifest)
            for name in staged + [MANIFEST]:
                os.replace(os.path.join(stage_dir, name), self.artifact(name))
            self.log.info('%s: wrote %d artifacts to %s', command,
                          len(staged), self.path)
        finally:
            shutil.rmtree(stage_dir, ignore_errors=True)

    def commit(self, message='', author=None, committer=None):
        """
        Commits the workspace's artifacts to a git repository in the output
        directory, creating it on first use. Returns the commit id, or None
        when nothing changed.
        """
        # never pick up a repository enclosing the output directory
        if os.path.isdir(os.path.join(self.path, '.git')):
            repo = pygit2.Repository(self.path)
        else:
            repo = pygit2.init_repository(self.path, False)

        index = repo.index
        for name in sorted(os.listdir(self.path)):
            if os.path.isfile(self.artifact(name)) and \
                    not name.startswith('.'):
                index.add(name)
        index.write()
        tree = index.write_tree()

        parents = []
        if not repo.head_is_unborn:
            head = repo[repo.head.target]
            if head.tree_id == tree:
                return None
            parents = [head.id]

        if not author:
            author = self.config.DEFAULT_GIT_USER
        if not committer:
            committer = author
        default_offset = self.config.get('DEFAULT_TZ_OFFSET', None)
        author = utils.make_signature(*author, default_offset=default_offset)
        committer = utils.make_signature(*committer,
                                         default_offset=default_offset)
        oid = repo.create_commit('HEAD', author, committer, message, tree,
                                 parents)
        self.log.info('committed artifacts as %s', oid)
        return oid
