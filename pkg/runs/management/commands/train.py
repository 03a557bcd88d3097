from core.jsonio import write_json
from runs.artifacts import MODEL_JSON, TRACE_CSV, dataset_document, load_split, write_frame
from runs.management.base import RunCommand, add_training_arguments
from runs.registry import ModelKind, model_to_document, train_model
from runs.serializers import TrainRunSerializer


class Command(RunCommand):
    help = 'Train a ranking model on DIR/train.csv (DIR/val.csv selects the duality lambda)'
    config_serializer = TrainRunSerializer

    def add_run_arguments(self, parser):
        parser.add_argument('--model', help=f"One of: {', '.join(ModelKind.VALUES)}")
        parser.add_argument('--data', help='Directory written by gen or prep')
        add_training_arguments(parser)

    def run(self, config, out):
        train = load_split(config['data'], 'train')
        val = load_split(config['data'], 'val', required=False)
        fitted = train_model(
            config['model'], train, val, config, config['seed'], dataset_doc=dataset_document(config['data'])
        )
        write_json(out / MODEL_JSON, model_to_document(fitted))
        if fitted.trace is not None:
            write_frame(fitted.trace, out / TRACE_CSV)
        self.success(f"Trained '{fitted.kind}' on {train.n} rows; model saved to {out / MODEL_JSON}")
