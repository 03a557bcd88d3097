"""JSON codec for trained scorers, embedded in model checkpoints."""

from core.exceptions import ConfigError
from core.validation import validate_with
from .serializers import FeatureScalerSerializer, ScorerParamsSerializer
from .training import TrainedScorer


def params_to_document(params):
    return {
        'layer_sizes': params.layer_sizes,
        'weights': [w.tolist() for w in params.weights],
        'biases': [b.tolist() for b in params.biases],
    }


def params_from_document(doc):
    return validate_with(ScorerParamsSerializer, doc)


def scorer_to_document(trained):
    doc = {'params': params_to_document(trained.params), 'scaler': trained.scaler.to_document()}
    if trained.config is not None:
        doc['training'] = trained.config
    return doc


def scorer_from_document(doc):
    params = params_from_document(doc.get('params'))
    scaler = validate_with(FeatureScalerSerializer, doc.get('scaler'))
    if scaler.mean.size != params.input_width:
        raise ConfigError(f"Scaler width {scaler.mean.size} does not match scorer input {params.input_width}")
    training = doc.get('training')
    if training is not None and not isinstance(training, dict):
        raise ConfigError("Checkpoint 'training' entry must be a mapping")
    return TrainedScorer(params=params, scaler=scaler, config=training)
