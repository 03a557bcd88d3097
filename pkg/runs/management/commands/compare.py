import logging
from concurrent.futures import ThreadPoolExecutor

import pandas as pd

from core.exceptions import ConfigError
from runs.artifacts import COMPARE_CSV, dataset_document, load_split, write_frame, write_summary
from runs.management.base import RunCommand, add_training_arguments, comma_list
from runs.registry import ModelKind, train_model
from runs.reports import evaluate_model, holdout_propensity_weights, improvement_pct
from runs.serializers import CompareRunSerializer
from uplift_rank.conf import get_threads

logger = logging.getLogger(__name__)

BASELINE = ModelKind.DUALITY
COLUMNS = ['algorithm', 'dataset', 'aucc', 'improvement_pct', 'value_at_20pct']


class Command(RunCommand):
    help = 'Train several models on one dataset and tabulate their test AUCC'
    config_serializer = CompareRunSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--data', help='Directory written by gen or prep')
        parser.add_argument(
            '--models', type=comma_list, help=f"Comma-separated subset of {', '.join(ModelKind.VALUES)}"
        )
        add_training_arguments(parser)

    def run(self, config, out):
        data_dir = config['data']
        train = load_split(data_dir, 'train')
        val = load_split(data_dir, 'val', required=False)
        test = load_split(data_dir, 'test')
        doc = dataset_document(data_dir)
        dataset = doc.get('recipe') or doc.get('source') or str(data_dir)
        kinds = list(config['models'])
        if BASELINE not in kinds:
            logger.info(f"Adding '{BASELINE}' as the improvement baseline")
            kinds.append(BASELINE)
        if val is None and BASELINE in kinds and config['lambda_strategy'] == 'grid':
            raise ConfigError("The duality baseline needs DIR/val.csv for its lambda grid")

        def fit(kind):
            return train_model(kind, train, val, config, config['seed'], dataset_doc=doc)

        workers = min(get_threads(), len(kinds))
        logger.info(f"Training {len(kinds)} models with {workers} worker(s)")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fitted = list(pool.map(fit, kinds))

        weights = holdout_propensity_weights(test)
        summaries = {model.kind: evaluate_model(model, test, weights=weights).summary for model in fitted}
        baseline = summaries[BASELINE]['aucc']
        rows = [
            {
                'algorithm': kind,
                'dataset': dataset,
                'aucc': summaries[kind]['aucc'],
                'improvement_pct': improvement_pct(summaries[kind]['aucc'], baseline),
                'value_at_20pct': summaries[kind]['value_at_20pct'],
            }
            for kind in kinds
        ]
        write_frame(pd.DataFrame(rows, columns=COLUMNS), out / COMPARE_CSV)
        write_summary(
            out,
            {'dataset': dataset, 'baseline': BASELINE, 'seed': config['seed'], 'rows': rows, 'models': summaries},
        )
        for row in rows:
            self.stdout.write(f"{row['algorithm']:<22} AUCC {row['aucc']:.4f}")
        self.success(f"Compared {len(rows)} models on {dataset}; table written to {out / COMPARE_CSV}")
