from evaluation.curves import write_curve_csv
from runs.artifacts import (
    CURVE_CSV,
    GENERALIZATION_CSV,
    load_split,
    read_model_document,
    write_frame,
    write_summary,
)
from runs.management.base import RunCommand
from runs.registry import model_from_document
from runs.reports import evaluate_model
from runs.serializers import EvalRunSerializer


class Command(RunCommand):
    help = 'Score DIR/test.csv with a trained model: cost curve, AUCC and generalization grid'
    config_serializer = EvalRunSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--data', help='Directory written by gen or prep')
        parser.add_argument('--model-dir', help='Directory holding model.json (default: --out)')

    def run(self, config, out):
        fitted = model_from_document(read_model_document(config['model_dir']))
        test = load_split(config['data'], 'test')
        report = evaluate_model(fitted, test)
        write_curve_csv(report.curve, out / CURVE_CSV)
        write_frame(report.generalization, out / GENERALIZATION_CSV)
        write_summary(out, {**report.summary, 'seed': config['seed']})
        self.success(f"'{fitted.kind}' AUCC on {test.n} test rows: {report.summary['aucc']:.4f}")
