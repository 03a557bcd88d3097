import numpy as np
from rest_framework import serializers

from core.exceptions import InvalidShape
from core.validation import StrictSerializer
from .scaling import FeatureScaler
from .scorer import ScorerParams


class ScorerParamsSerializer(StrictSerializer):
    layer_sizes = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2)
    weights = serializers.ListField(
        child=serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))
    )
    biases = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()))

    def validate(self, attrs):
        try:
            params = ScorerParams(
                tuple(np.asarray(w, dtype=float) for w in attrs['weights']),
                tuple(np.asarray(b, dtype=float) for b in attrs['biases']),
            )
        except (InvalidShape, ValueError) as exc:
            raise serializers.ValidationError(f"Inconsistent parameter arrays: {exc}")
        if params.layer_sizes != attrs['layer_sizes']:
            raise serializers.ValidationError(
                {'layer_sizes': f"Arrays describe {params.layer_sizes}, header says {attrs['layer_sizes']}."}
            )
        if not params.is_finite():
            raise serializers.ValidationError("Parameters must be finite.")
        attrs['params'] = params
        return attrs

    def create(self, validated_data):
        return validated_data['params']


class FeatureScalerSerializer(StrictSerializer):
    mean = serializers.ListField(child=serializers.FloatField())
    scale = serializers.ListField(child=serializers.FloatField())

    def validate(self, attrs):
        if len(attrs['mean']) != len(attrs['scale']):
            raise serializers.ValidationError("mean and scale must have the same length.")
        if any(s <= 0 for s in attrs['scale']):
            raise serializers.ValidationError({'scale': "Scales must be positive."})
        return attrs

    def create(self, validated_data):
        return FeatureScaler.from_document(validated_data)
