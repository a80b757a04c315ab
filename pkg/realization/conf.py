"""
Numerical tolerances for the realization app.

Values come from the ``PASSIVEKIT`` dict in Django settings, for example::

    PASSIVEKIT = {
        'RTOL': 1e-10,
        'COND_LIMIT': 1e12,
    }

Access them through ``tolerances.RTOL``. Missing keys fall back to DEFAULTS.
"""
from __future__ import annotations

from django.conf import settings
from django.core.signals import setting_changed

DEFAULTS = {
    # rank cutoff for range embeddings and Krylov spans
    'RTOL': 1e-10,
    # opnorm(T) <= 1 + CONTRACTION_TOL counts as passive
    'CONTRACTION_TOL': 1e-10,
    # ||T - T*|| <= SYMMETRY_TOL * max(1, ||T||) counts as selfadjoint
    'SYMMETRY_TOL': 1e-12,
    # condition numbers above this reject a linear solve
    'COND_LIMIT': 1e12,
    # certificate eigenvalues must stay above -PSD_TOL * scale
    'PSD_TOL': 1e-8,
    'NORM_TOL': 1e-9,
    # transfer-function agreement on sample grids
    'MATCH_TOL': 1e-9,
    # inner fit and limit identities
    'INNER_TOL': 1e-8,
    # eigenvalues closer than this form one spectral atom
    'MERGE_TOL': 1e-10,
}


class ToleranceSettings:
    def __init__(self, user_settings: dict | None = None, defaults: dict | None = None):
        if user_settings is not None:
            self._user_settings = user_settings
        self.defaults = defaults or DEFAULTS
        self._cached_attrs: set[str] = set()

    @property
    def user_settings(self) -> dict:
        if not hasattr(self, '_user_settings'):
            self._user_settings = getattr(settings, 'PASSIVEKIT', {})
        return self._user_settings

    def __getattr__(self, attr: str) -> float:
        if attr not in self.defaults:
            raise AttributeError(f"Invalid tolerance setting: '{attr}'")
        value = float(self.user_settings.get(attr, self.defaults[attr]))
        if value <= 0:
            raise ValueError(f'Tolerance {attr} must be positive, got {value}')
        self._cached_attrs.add(attr)
        setattr(self, attr, value)
        return value

    def as_dict(self) -> dict[str, float]:
        return {key.lower(): getattr(self, key) for key in self.defaults}

    def reload(self) -> None:
        for attr in self._cached_attrs:
            delattr(self, attr)
        self._cached_attrs.clear()
        if hasattr(self, '_user_settings'):
            delattr(self, '_user_settings')


tolerances = ToleranceSettings(None, DEFAULTS)


def reload_tolerances(*args, **kwargs) -> None:
    if kwargs['setting'] == 'PASSIVEKIT':
        tolerances.reload()


setting_changed.connect(reload_tolerances)


def pick(value: float | None, name: str) -> float:
    """Return ``value`` or, when it is None, the configured tolerance ``name``."""
    return getattr(tolerances, name) if value is None else float(value)
