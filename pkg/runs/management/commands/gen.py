import pandas as pd

from core.validation import validate_with
from ingest.serializers import SyntheticConfigSerializer
from ingest.splits import SplitRatios
from ingest.synthetic import generate_synthetic
from runs.artifacts import GROUND_TRUTH_CSV, write_dataset_bundle, write_frame
from runs.management.base import RunCommand
from runs.serializers import GenRunSerializer

SYNTHETIC_KEYS = (
    'n', 'd', 'noise_sd', 'treat_prob', 'tau_r_spec', 'tau_c_spec', 'mu0_spec', 'mu0_c_spec', 'propensity_coef',
)


class Command(RunCommand):
    help = 'Generate a synthetic dataset with known treatment effects and split it'
    config_serializer = GenRunSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--n', type=int, help='Number of users')
        parser.add_argument('--d', type=int, help='Number of features')
        parser.add_argument('--noise-sd', type=float, help='Outcome noise standard deviation')
        parser.add_argument('--treat-prob', help="Constant treatment probability or 'logistic'")

    def run(self, config, out):
        synthetic = validate_with(
            SyntheticConfigSerializer, {key: config[key] for key in SYNTHETIC_KEYS if key in config}
        )
        seed = config['seed']
        ds, truth = generate_synthetic(synthetic, seed)
        provenance = {
            'source': 'synthetic',
            'recipe': None,
            'synthetic': synthetic.resolve(seed).to_document(),
        }
        write_dataset_bundle(ds, out, provenance, SplitRatios(*config['split']), seed)
        truth_frame = pd.DataFrame(
            {
                'id': ds.ids,
                'tau_r_true': truth.tau_r_true,
                'tau_c_true': truth.tau_c_true,
                'propensity_true': truth.propensity_true,
            }
        )
        write_frame(truth_frame, out / GROUND_TRUTH_CSV)
        self.success(f"Generated {ds.n} synthetic users (d={ds.d}) in {out}")
