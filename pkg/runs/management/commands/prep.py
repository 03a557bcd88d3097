from ingest.recipes import RECIPES, load_manifest, read_raw_table
from ingest.splits import SplitRatios
from runs.artifacts import subsample, write_dataset_bundle
from runs.management.base import RunCommand
from runs.serializers import PrepRunSerializer


class Command(RunCommand):
    help = 'Build a treatment/outcome dataset from a public raw table and split it'
    config_serializer = PrepRunSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--recipe', help=f"One of: {', '.join(sorted(RECIPES))}")
        parser.add_argument('--raw', help='Path of the raw CSV')
        parser.add_argument('--manifest', help='Column manifest overriding the packaged one')
        parser.add_argument('--subsample', type=int, help='Keep a seeded subsample of this many rows')

    def run(self, config, out):
        manifest = load_manifest(config['manifest'] or config['recipe'])
        raw = read_raw_table(config['raw'], manifest)
        ds = RECIPES[config['recipe']](raw, manifest)
        ds = subsample(ds, config['subsample'], config['seed'])
        provenance = {
            'source': str(config['raw']),
            'recipe': config['recipe'],
            'subsample': config['subsample'],
        }
        write_dataset_bundle(ds, out, provenance, SplitRatios(*config['split']), config['seed'])
        self.success(f"Prepared {ds.n} rows (d={ds.d}) with the {config['recipe']} recipe in {out}")
