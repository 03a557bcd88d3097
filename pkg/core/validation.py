from collections.abc import Mapping

from rest_framework import serializers
from rest_framework.settings import api_settings

from .exceptions import ConfigError


def _flatten(errors, prefix=""):
    if isinstance(errors, dict):
        items = []
        for key, value in errors.items():
            label = key if key != api_settings.NON_FIELD_ERRORS_KEY else ""
            items.extend(_flatten(value, f"{prefix}{label}." if label else prefix))
        return items
    if isinstance(errors, list):
        items = []
        for value in errors:
            items.extend(_flatten(value, prefix))
        return items
    return [f"{prefix.rstrip('.')}: {errors}" if prefix else str(errors)]


def validate_with(serializer_class, data, **kwargs):
    """Validate `data` with a DRF serializer and return `serializer.save()`.

    Validation failures surface as ConfigError with a flat, readable message.
    """
    serializer = serializer_class(data=data, **kwargs)
    if not serializer.is_valid():
        raise ConfigError("; ".join(_flatten(serializer.errors)))
    return serializer.save()


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown key."] for key in unknown})
        return super().to_internal_value(data)
