"""Model kinds the commands can train, save, load and score.

Every fitted model exposes `score(X)`; higher means target first.
"""

import logging
from dataclasses import dataclass

import pandas as pd
from rest_framework import serializers

from barrier.constraints import AnnealSchedule, Constraint
from barrier.training import train_constrained
from core.exceptions import ConfigError, SchemaError
from core.validation import validate_with
from drm.objectives import ObjectiveForm, PropensityWeights
from drm.training import RankingObjectiveConfig, train_drm
from evaluation.baselines import OracleScorer, RandomScorer
from ingest.serializers import SyntheticConfigSerializer
from ingest.synthetic import OutcomeModel
from nn.checkpoint import scorer_from_document, scorer_to_document
from nn.training import TrainingConfig
from rlearner.duality import DualityModel, fit_duality
from rlearner.learner import Outcome, rlearner_fit
from rlearner.propensity import PropensityKind, PropensityModel, fit_propensity
from rlearner.ridge import RidgeModel
from uplift_rank.conf import get_defaults

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = "1"


class ModelKind:
    DRM = "drm"
    DRM_PROPENSITY = "drm_propensity"
    CONSTRAINED = "constrained"
    DUALITY = "duality"
    RLEARNER = "rlearner"
    RLEARNER_PROPENSITY = "rlearner_propensity"
    RANDOM = "random"
    ORACLE = "oracle"

    CHOICES = [
        (DRM, "Direct ranking model"),
        (DRM_PROPENSITY, "Direct ranking model with inverse-propensity weights"),
        (CONSTRAINED, "Constrained ranking with an annealed barrier"),
        (DUALITY, "Duality R-learner"),
        (RLEARNER, "R-learner on incremental value only"),
        (RLEARNER_PROPENSITY, "R-learner on value minus cost with a fitted propensity"),
        (RANDOM, "Random ranking"),
        (ORACLE, "Ground-truth cost effectiveness"),
    ]

    VALUES = tuple(value for value, _ in CHOICES)
    NEURAL = (DRM, DRM_PROPENSITY, CONSTRAINED)


@dataclass(frozen=True, eq=False)
class EffectScorer:
    """Ranks by a fitted effect model's predictions."""

    model: RidgeModel

    def score(self, X):
        return self.model.predict(X)


@dataclass(frozen=True, eq=False)
class FittedModel:
    kind: str
    scorer: object
    propensity: PropensityModel = None
    trace: pd.DataFrame = None

    def score(self, X):
        return self.scorer.score(X)


def training_config(options):
    return TrainingConfig.from_defaults(
        iterations=options.get('iterations'),
        lr=options.get('lr'),
        hidden_layers=tuple(options.get('hidden_layers') or ()),
        reg=options.get('reg'),
        batch_size=options.get('batch_size'),
    )


def objective_config(options, form=None):
    return RankingObjectiveConfig.from_defaults(
        form=form or options.get('form'),
        alpha=options.get('alpha'),
        rectifier_eps=options.get('rectifier_eps'),
    )


def constraint_from(options):
    if options.get('budget') is not None:
        return Constraint.budget(options['budget'], options.get('budget_order') or 'probability')
    return Constraint.percentage(options.get('percentage'))


def anneal_schedule(options):
    return AnnealSchedule.from_defaults(**{key: options.get(key) for key in ('T0', 'dT', 'every', 'Tmax')})


def oracle_model(dataset_doc):
    """Outcome model of the synthetic config recorded in a dataset sidecar."""
    synthetic = (dataset_doc or {}).get('synthetic')
    if synthetic is None:
        raise SchemaError("The oracle needs a synthetic dataset with a recorded generator config")
    return OutcomeModel(validate_with(SyntheticConfigSerializer, synthetic))


def _propensity(train, options, default):
    return fit_propensity(train.X, train.t, kind=options.get('propensity') or default)


def train_model(kind, train, val, options, seed, dataset_doc=None):
    """Fit model `kind` on `train`; `val` is only used by the grid lambda search."""
    if kind not in ModelKind.VALUES:
        raise ConfigError(f"Unknown model kind '{kind}'; choose from {list(ModelKind.VALUES)}")
    logger.info(f"Training '{kind}' on {train.n} rows (seed {seed})")

    if kind == ModelKind.DRM:
        trained = train_drm(train, training_config(options), seed, objective=objective_config(options))
        return FittedModel(kind, trained, trace=trained.trace)
    if kind == ModelKind.DRM_PROPENSITY:
        prop = _propensity(train, options, PropensityKind.LOGISTIC)
        weights = PropensityWeights.from_propensity(train.t, prop.predict(train.X), prop.clip)
        form = ObjectiveForm.LINEAR if options.get('propensity_mode', 'linear') == 'linear' else ObjectiveForm.RATIO
        trained = train_drm(
            train, training_config(options), seed, objective=objective_config(options, form), weights=weights
        )
        return FittedModel(kind, trained, propensity=prop, trace=trained.trace)
    if kind == ModelKind.CONSTRAINED:
        trained = train_constrained(
            train,
            training_config(options),
            seed,
            constraint=constraint_from(options),
            schedule=anneal_schedule(options),
            objective=objective_config(options),
        )
        return FittedModel(kind, trained, trace=trained.trace)
    if kind == ModelKind.DUALITY:
        prop = _propensity(train, options, PropensityKind.CONSTANT)
        model = fit_duality(
            train,
            prop,
            val=val,
            strategy=options.get('lambda_strategy') or 'grid',
            reg=options.get('ridge_reg') or 0.0,
            grid=options.get('lambda_grid'),
            budget_fraction=options.get('budget_fraction'),
        )
        return FittedModel(kind, model, propensity=prop)
    if kind == ModelKind.RLEARNER:
        prop = _propensity(train, options, PropensityKind.CONSTANT)
        model = rlearner_fit(train, Outcome.VALUE, prop, reg=options.get('ridge_reg') or 0.0)
        return FittedModel(kind, EffectScorer(model), propensity=prop)
    if kind == ModelKind.RLEARNER_PROPENSITY:
        prop = _propensity(train, options, PropensityKind.LOGISTIC)
        alpha = options.get('alpha_rlearner')
        if alpha is None:
            alpha = get_defaults()['ALPHA_RLEARNER']
        model = rlearner_fit(
            train,
            Outcome.COMBINED,
            prop,
            lam=alpha,
            reg=options.get('ridge_reg') or 0.0,
        )
        return FittedModel(kind, EffectScorer(model), propensity=prop)
    if kind == ModelKind.RANDOM:
        return FittedModel(kind, RandomScorer(seed))
    return FittedModel(kind, OracleScorer(oracle_model(dataset_doc)))


def model_to_document(fitted):
    doc = {'version': MODEL_FORMAT_VERSION, 'kind': fitted.kind}
    if fitted.propensity is not None:
        doc['propensity'] = fitted.propensity.to_document()
    scorer = fitted.scorer
    if fitted.kind in ModelKind.NEURAL:
        doc['scorer'] = scorer_to_document(scorer)
    elif fitted.kind == ModelKind.DUALITY:
        doc.update(
            tau_r=scorer.tau_r_model.to_document(),
            tau_c=scorer.tau_c_model.to_document(),
            strategy=scorer.strategy,
            selection=scorer.selection,
        )
        doc['lambda'] = scorer.lam
    elif fitted.kind in (ModelKind.RLEARNER, ModelKind.RLEARNER_PROPENSITY):
        doc['tau'] = scorer.model.to_document()
    elif fitted.kind == ModelKind.RANDOM:
        doc['seed'] = scorer.seed
    else:
        doc['synthetic'] = scorer.outcome_model.cfg.to_document()
    return doc


class ModelEnvelopeSerializer(serializers.Serializer):
    version = serializers.ChoiceField(choices=(MODEL_FORMAT_VERSION,))
    kind = serializers.ChoiceField(choices=ModelKind.VALUES)

    def create(self, validated_data):
        return validated_data['kind']


def model_from_document(doc):
    kind = validate_with(ModelEnvelopeSerializer, doc)
    try:
        propensity = PropensityModel.from_document(doc['propensity']) if 'propensity' in doc else None
        if kind in ModelKind.NEURAL:
            scorer = scorer_from_document(doc['scorer'])
        elif kind == ModelKind.DUALITY:
            scorer = DualityModel(
                RidgeModel.from_document(doc['tau_r']),
                RidgeModel.from_document(doc['tau_c']),
                float(doc['lambda']),
                strategy=doc.get('strategy', 'grid'),
                selection=doc.get('selection'),
            )
        elif kind in (ModelKind.RLEARNER, ModelKind.RLEARNER_PROPENSITY):
            scorer = EffectScorer(RidgeModel.from_document(doc['tau']))
        elif kind == ModelKind.RANDOM:
            scorer = RandomScorer(int(doc['seed']))
        else:
            scorer = OracleScorer(oracle_model({'synthetic': doc['synthetic']}))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"Malformed '{kind}' model document: {exc!r}")
    return FittedModel(kind, scorer, propensity=propensity)
