"""Run configurations of the management commands.

Every command validates the merge of its config file and flags with one of
these serializers. Omitted hyperparameters are filled from the UPLIFT_RANK
defaults so the resolved snapshot is complete.
"""

from django.conf import settings
from rest_framework import serializers

from barrier.constraints import BudgetOrder
from core.seeding import MAX_SEED
from core.validation import StrictSerializer
from drm.objectives import ObjectiveForm
from ingest.recipes import RECIPES
from ingest.serializers import EffectSpecSerializer, SyntheticConfigSerializer
from rlearner.duality import LambdaStrategy
from rlearner.propensity import PropensityKind
from uplift_rank.conf import get_defaults
from .registry import ModelKind


def default_seed():
    return settings.UPLIFT_RANK_SEED


def default_out():
    return settings.UPLIFT_RANK_OUTPUT_DIR


def default_split():
    return list(get_defaults()['SPLIT'])


def _optional(field_class, **kwargs):
    return field_class(required=False, allow_null=True, default=None, **kwargs)


class RunConfigSerializer(StrictSerializer):
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, default=default_seed)
    out = serializers.CharField(default=default_out)

    def create(self, validated_data):
        return dict(validated_data)


class SplitMixin(serializers.Serializer):
    split = serializers.ListField(
        child=serializers.FloatField(min_value=0.0, max_value=1.0),
        min_length=3,
        max_length=3,
        default=default_split,
    )

    def validate_split(self, value):
        if abs(sum(value) - 1.0) > 1e-9 or min(value) <= 0.0:
            raise serializers.ValidationError("Split ratios must be positive and sum to 1.")
        return value


class TrainingOptionsMixin(serializers.Serializer):
    iterations = _optional(serializers.IntegerField, min_value=0)
    lr = _optional(serializers.FloatField, min_value=0.0)
    hidden_layers = _optional(serializers.ListField, child=serializers.IntegerField(min_value=1))
    reg = _optional(serializers.FloatField, min_value=0.0)
    batch_size = _optional(serializers.IntegerField, min_value=2)
    form = _optional(serializers.ChoiceField, choices=ObjectiveForm.VALUES)
    alpha = _optional(serializers.FloatField)
    rectifier_eps = _optional(serializers.FloatField, min_value=0.0)
    percentage = _optional(serializers.FloatField, min_value=0.0, max_value=1.0)
    budget = _optional(serializers.FloatField, min_value=0.0)
    budget_order = serializers.ChoiceField(choices=BudgetOrder.VALUES, default=BudgetOrder.PROBABILITY)
    T0 = _optional(serializers.FloatField, min_value=0.0)
    dT = _optional(serializers.FloatField, min_value=0.0)
    every = _optional(serializers.IntegerField, min_value=1)
    Tmax = _optional(serializers.FloatField, min_value=0.0)
    lambda_strategy = serializers.ChoiceField(choices=LambdaStrategy.VALUES, default=LambdaStrategy.GRID)
    lambda_grid = _optional(serializers.ListField, child=serializers.FloatField(min_value=0.0), min_length=1)
    budget_fraction = _optional(serializers.FloatField, min_value=0.0, max_value=1.0)
    propensity = _optional(serializers.ChoiceField, choices=PropensityKind.VALUES)
    propensity_mode = serializers.ChoiceField(choices=('linear', 'ratio'), default='linear')
    ridge_reg = _optional(serializers.FloatField, min_value=0.0)
    alpha_rlearner = _optional(serializers.FloatField)

    def fill_training_defaults(self, attrs):
        defaults = get_defaults()
        fallback = {
            'iterations': defaults['ITERATIONS'],
            'lr': defaults['ADAM']['lr'],
            'hidden_layers': list(defaults['HIDDEN_LAYERS']),
            'reg': defaults['L2_REG'],
            'form': defaults['RATIO_FORM'],
            'alpha': defaults['ALPHA_DRM'],
            'rectifier_eps': defaults['RECTIFIER_EPS'],
            'percentage': defaults['PERCENTAGE'],
            'lambda_grid': list(defaults['LAMBDA_GRID']),
            'budget_fraction': defaults['DUALITY']['budget_fraction'],
            'ridge_reg': defaults['RIDGE_REG'],
            'alpha_rlearner': defaults['ALPHA_RLEARNER'],
            **defaults['ANNEAL'],
        }
        for key, value in fallback.items():
            if attrs.get(key) is None:
                attrs[key] = value
        if attrs['lr'] <= 0:
            raise serializers.ValidationError({'lr': "Must be positive."})
        if attrs['rectifier_eps'] <= 0:
            raise serializers.ValidationError({'rectifier_eps': "Must be positive."})
        if attrs['percentage'] <= 0:
            raise serializers.ValidationError({'percentage': "Must be in (0, 1]."})
        if attrs['budget'] is not None and attrs['budget'] <= 0:
            raise serializers.ValidationError({'budget': "Must be positive."})
        if attrs['Tmax'] < attrs['T0']:
            raise serializers.ValidationError({'Tmax': "Must be at least T0."})
        return attrs


class GenRunSerializer(SplitMixin, RunConfigSerializer):
    n = serializers.IntegerField(min_value=10, default=20000)
    d = serializers.IntegerField(min_value=1, default=10)
    noise_sd = serializers.FloatField(min_value=0.0, default=0.1)
    treat_prob = serializers.CharField(default="0.5")
    tau_r_spec = EffectSpecSerializer(required=False)
    tau_c_spec = EffectSpecSerializer(required=False)
    mu0_spec = EffectSpecSerializer(required=False)
    mu0_c_spec = EffectSpecSerializer(required=False)
    propensity_coef = serializers.ListField(child=serializers.FloatField(), allow_null=True, required=False)

    def validate_treat_prob(self, value):
        return SyntheticConfigSerializer().validate_treat_prob(value)


class PrepRunSerializer(SplitMixin, RunConfigSerializer):
    recipe = serializers.ChoiceField(choices=sorted(RECIPES))
    raw = serializers.CharField()
    manifest = serializers.CharField(required=False, allow_null=True, default=None)
    subsample = serializers.IntegerField(min_value=10, required=False, allow_null=True, default=None)


class TrainRunSerializer(TrainingOptionsMixin, RunConfigSerializer):
    model = serializers.ChoiceField(choices=ModelKind.VALUES, default=ModelKind.DRM)
    data = serializers.CharField()

    def validate(self, attrs):
        return self.fill_training_defaults(attrs)


class EvalRunSerializer(RunConfigSerializer):
    data = serializers.CharField()
    model_dir = serializers.CharField(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        if attrs['model_dir'] is None:
            attrs['model_dir'] = attrs['out']
        return attrs


class SimulateRunSerializer(TrainingOptionsMixin, RunConfigSerializer):
    n = serializers.IntegerField(min_value=10, default=10000)
    d = serializers.IntegerField(min_value=1, default=10)
    noise_sd = serializers.FloatField(min_value=0.0, default=0.1)
    cycles = serializers.IntegerField(min_value=1, default=1)
    explore_fraction = serializers.FloatField(default=0.2)
    treat_prob_explore = serializers.FloatField(default=0.5)
    exploit_treat_prob = serializers.FloatField(default=0.5)
    arms = serializers.ListField(
        child=serializers.ChoiceField(choices=(ModelKind.RANDOM, ModelKind.ORACLE)),
        default=lambda: [ModelKind.RANDOM],
    )

    def validate(self, attrs):
        for key in ('explore_fraction', 'treat_prob_explore', 'exploit_treat_prob'):
            if not 0.0 < attrs[key] < 1.0:
                raise serializers.ValidationError({key: "Must be strictly between 0 and 1."})
        if len(set(attrs['arms'])) != len(attrs['arms']):
            raise serializers.ValidationError({'arms': "Arms must be distinct."})
        return self.fill_training_defaults(attrs)


class CompareRunSerializer(TrainingOptionsMixin, RunConfigSerializer):
    data = serializers.CharField()
    models = serializers.ListField(
        child=serializers.ChoiceField(choices=ModelKind.VALUES),
        min_length=1,
        default=lambda: [ModelKind.DRM, ModelKind.CONSTRAINED, ModelKind.DUALITY, ModelKind.RANDOM],
    )

    def validate(self, attrs):
        if len(set(attrs['models'])) != len(attrs['models']):
            raise serializers.ValidationError({'models': "Models must be distinct."})
        return self.fill_training_defaults(attrs)
