from rest_framework import serializers

from core.validation import StrictSerializer
from .csv_io import ColumnSchema
from .splits import SplitRatios
from .synthetic import LOGISTIC, EffectSpec, SyntheticConfig


class EffectSpecSerializer(StrictSerializer):
    coef = serializers.ListField(child=serializers.FloatField(), allow_null=True, required=False)
    intercept = serializers.FloatField(required=False, default=0.0)
    nonlinear = serializers.BooleanField(required=False, default=False)

    def create(self, validated_data):
        coef = validated_data.get('coef')
        return EffectSpec(
            coef=None if coef is None else tuple(coef),
            intercept=validated_data['intercept'],
            nonlinear=validated_data['nonlinear'],
        )


class SyntheticConfigSerializer(StrictSerializer):
    n = serializers.IntegerField(min_value=10, required=False, default=20000)
    d = serializers.IntegerField(min_value=1, required=False, default=10)
    treat_prob = serializers.CharField(required=False, default="0.5")
    noise_sd = serializers.FloatField(min_value=0.0, required=False, default=0.1)
    tau_r_spec = EffectSpecSerializer(required=False)
    tau_c_spec = EffectSpecSerializer(required=False)
    mu0_spec = EffectSpecSerializer(required=False)
    mu0_c_spec = EffectSpecSerializer(required=False)
    propensity_coef = serializers.ListField(
        child=serializers.FloatField(), allow_null=True, required=False
    )

    def validate_treat_prob(self, value):
        if value == LOGISTIC:
            return value
        try:
            prob = float(value)
        except ValueError:
            raise serializers.ValidationError("Use a number in [0.05, 0.95] or 'logistic'.")
        if not 0.05 <= prob <= 0.95:
            raise serializers.ValidationError("Constant treatment probability must be in [0.05, 0.95].")
        return prob

    def validate(self, attrs):
        d = attrs['d']
        for name in ('tau_r_spec', 'tau_c_spec', 'mu0_spec', 'mu0_c_spec'):
            coef = (attrs.get(name) or {}).get('coef')
            if coef is not None and len(coef) != d:
                raise serializers.ValidationError({name: f"coef must have {d} entries."})
        coef = attrs.get('propensity_coef')
        if coef is not None and len(coef) != d:
            raise serializers.ValidationError({'propensity_coef': f"Must have {d} entries."})
        return attrs

    def create(self, validated_data):
        kwargs = dict(validated_data)
        for name in ('tau_r_spec', 'tau_c_spec', 'mu0_spec', 'mu0_c_spec'):
            if name in kwargs:
                kwargs[name] = EffectSpecSerializer().create(kwargs[name])
        if kwargs.get('propensity_coef') is not None:
            kwargs['propensity_coef'] = tuple(kwargs['propensity_coef'])
        return SyntheticConfig(**kwargs)


class SplitRatiosSerializer(StrictSerializer):
    train = serializers.FloatField()
    val = serializers.FloatField()
    test = serializers.FloatField()

    def validate(self, attrs):
        for name, value in attrs.items():
            if not 0.0 < value < 1.0:
                raise serializers.ValidationError({name: "Must be strictly between 0 and 1."})
        if abs(sum(attrs.values()) - 1.0) > 1e-9:
            raise serializers.ValidationError("Split ratios must sum to 1.")
        return attrs

    def create(self, validated_data):
        return SplitRatios(**validated_data)


class ColumnSchemaSerializer(StrictSerializer):
    id = serializers.CharField(required=False, allow_null=True, default=None)
    strategy = serializers.CharField(required=False, allow_null=True, default=None)
    t = serializers.CharField()
    y_r = serializers.CharField()
    y_c = serializers.CharField()
    features = serializers.ListField(
        child=serializers.CharField(), required=False, allow_null=True, default=None
    )

    def validate_features(self, value):
        if value is not None and not value:
            raise serializers.ValidationError("At least one feature column is required.")
        return value

    def create(self, validated_data):
        features = validated_data.get('features')
        return ColumnSchema(
            id=validated_data.get('id'),
            strategy=validated_data.get('strategy'),
            t=validated_data['t'],
            y_r=validated_data['y_r'],
            y_c=validated_data['y_c'],
            features=None if features is None else tuple(features),
        )
