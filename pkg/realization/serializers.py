"""Serializers for system, coupler and trajectory-input documents."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np
from rest_framework import serializers

from .exceptions import DocumentError, RealizationError
from .systems import PassiveSystem, validate_passive
from .transforms import RedhefferCoupler

FORMAT_VERSION = '1'

# error codes that already name a violated invariant
DOMAIN_CODES = frozenset(cls.code for cls in RealizationError.__subclasses__()) | {RealizationError.code}


def pair(value: complex) -> list[float]:
    value = complex(value)
    return [float(value.real), float(value.imag)]


def render_document(data: dict[str, Any]) -> str:
    """Canonical text: declared key order, two-space indent, shortest round-trip floats."""
    return json.dumps(data, indent=2, allow_nan=False) + '\n'


class ComplexVectorField(serializers.Field):
    default_error_messages = {
        'not_a_list': 'Expected a list of [re, im] pairs.',
        'not_a_pair': 'Entry {index} is not a [re, im] pair of numbers.',
        'not_finite': 'Entry {index} is not finite.',
    }

    def _entry(self, item, index) -> complex:
        if (
            not isinstance(item, (list, tuple))
            or len(item) != 2
            or any(isinstance(part, bool) or not isinstance(part, (int, float)) for part in item)
        ):
            self.fail('not_a_pair', index=index)
        value = complex(float(item[0]), float(item[1]))
        if not (np.isfinite(value.real) and np.isfinite(value.imag)):
            self.fail('not_finite', index=index)
        return value

    def to_internal_value(self, data) -> np.ndarray:
        if not isinstance(data, list):
            self.fail('not_a_list')
        return np.array([self._entry(item, str(i)) for i, item in enumerate(data)], dtype=complex)

    def to_representation(self, value) -> list[list[float]]:
        return [pair(entry) for entry in np.asarray(value).reshape(-1)]


class ComplexMatrixField(ComplexVectorField):
    """Row-major nested arrays of [re, im] pairs."""

    default_error_messages = {
        **ComplexVectorField.default_error_messages,
        'ragged': 'Rows have different lengths.',
    }

    def to_internal_value(self, data) -> np.ndarray:
        if not isinstance(data, list) or any(not isinstance(row, list) for row in data):
            self.fail('not_a_list')
        if len({len(row) for row in data}) > 1:
            self.fail('ragged')
        rows = [
            [self._entry(item, f'[{i}][{j}]') for j, item in enumerate(row)]
            for i, row in enumerate(data)
        ]
        cols = len(rows[0]) if rows else 0
        return np.array(rows, dtype=complex).reshape(len(rows), cols)

    def to_representation(self, value) -> list[list[list[float]]]:
        return [[pair(entry) for entry in row] for row in np.asarray(value)]


class SystemDocumentSerializer(serializers.Serializer):
    format_version = serializers.ChoiceField(choices=[FORMAT_VERSION])
    dim_input = serializers.IntegerField(min_value=0)
    dim_state = serializers.IntegerField(min_value=0)
    selfadjoint = serializers.BooleanField()
    matrix = ComplexMatrixField()

    def validate(self, attrs: dict[str, Any]) -> dict[str, Any]:
        size = attrs['dim_input'] + attrs['dim_state']
        if attrs['matrix'].shape != (size, size):
            raise serializers.ValidationError(
                f'matrix has shape {attrs["matrix"].shape}, expected {(size, size)}', code='dimension_mismatch'
            )
        try:
            attrs['system'] = validate_passive(attrs['matrix'], attrs['dim_input'], attrs['selfadjoint'])
        except RealizationError as exc:
            raise serializers.ValidationError(str(exc), code=exc.code) from exc
        return attrs

    def to_representation(self, instance: PassiveSystem) -> dict[str, Any]:
        return {
            'format_version': FORMAT_VERSION,
            'dim_input': instance.dim_input,
            'dim_state': instance.dim_state,
            'selfadjoint': instance.selfadjoint,
            'matrix': self.fields['matrix'].to_representation(instance.matrix),
        }


class CouplerDocumentSerializer(serializers.Serializer):
    k11 = ComplexMatrixField()
    k12 = ComplexMatrixField()
    k22 = ComplexMatrixField()

    def validate(self, attrs: dict[str, Any]) -> dict[str, Any]:
        try:
            attrs['coupler'] = RedhefferCoupler.build(attrs['k11'], attrs['k12'], attrs['k22'])
        except RealizationError as exc:
            raise serializers.ValidationError(str(exc), code=exc.code) from exc
        return attrs

    def to_representation(self, instance: RedhefferCoupler) -> dict[str, Any]:
        field = self.fields['k11']
        return {name: field.to_representation(getattr(instance, name)) for name in ('k11', 'k12', 'k22')}


class InputDocumentSerializer(serializers.Serializer):
    h0 = ComplexVectorField()
    inputs = serializers.ListField(child=ComplexVectorField())

    def validate_inputs(self, value: list[np.ndarray]) -> list[np.ndarray]:
        if len({len(item) for item in value}) > 1:
            raise serializers.ValidationError('inputs have different lengths', code='dimension_mismatch')
        return value


def _first_error(errors, prefix: str = '') -> tuple[str, serializers.ErrorDetail]:
    if isinstance(errors, dict):
        name, value = next(iter(errors.items()))
        label = '' if name == 'non_field_errors' else f'{prefix}{name}: '
        return _first_error(value, label)
    if isinstance(errors, list):
        return _first_error(errors[0], prefix)
    return prefix, errors


def _as_document_error(serializer: serializers.Serializer, source: str) -> DocumentError:
    prefix, detail = _first_error(serializer.errors)
    code = detail.code if detail.code in DOMAIN_CODES else DocumentError.code
    return DocumentError(f'{source}: {prefix}{detail}', code=code)


def parse_document(text: str, source: str = '<document>') -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            f'{source}: line {exc.lineno} column {exc.colno}: {exc.msg}', code='parse_error'
        ) from exc


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise DocumentError(f'{path}: {exc.strerror or exc}', code='unreadable_document') from exc
    except UnicodeDecodeError as exc:
        raise DocumentError(f'{path}: not UTF-8 text ({exc.reason} at byte {exc.start})', code='unreadable_document') from exc


def validated(serializer_class: type[serializers.Serializer], text: str, source: str) -> dict[str, Any]:
    serializer = serializer_class(data=parse_document(text, source))
    if not serializer.is_valid():
        raise _as_document_error(serializer, source)
    return serializer.validated_data


def system_from_text(text: str, source: str = '<document>') -> PassiveSystem:
    return validated(SystemDocumentSerializer, text, source)['system']


def dump_system(sys: PassiveSystem) -> str:
    return render_document(SystemDocumentSerializer(sys).data)


def load_system(path) -> PassiveSystem:
    return system_from_text(read_text(path), str(path))


def save_system(sys: PassiveSystem, path) -> None:
    Path(path).write_text(dump_system(sys), encoding='utf-8')
