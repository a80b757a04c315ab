"""Errors raised by the realization toolkit.

Every error carries a stable ``code`` that command reports echo next to the
message. All of them are ``ValueError``s: they describe inputs the math
rejects, never internal failures.
"""
from __future__ import annotations


class RealizationError(ValueError):
    code = 'realization_error'

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def as_dict(self) -> dict[str, str]:
        return {'code': self.code, 'message': str(self)}


class InvalidMatrix(RealizationError):
    code = 'invalid_matrix'


class InvalidParameter(RealizationError):
    code = 'invalid_parameter'


class DimensionMismatch(RealizationError):
    code = 'dimension_mismatch'


class NotPSD(RealizationError):
    code = 'not_psd'


class NotContraction(RealizationError):
    code = 'not_contraction'


class NotSelfadjoint(RealizationError):
    code = 'not_selfadjoint'


class OutsideCutPlane(RealizationError):
    code = 'outside_cut_plane'


class NearSingular(RealizationError):
    code = 'near_singular'


class IllConditioned(RealizationError):
    code = 'ill_conditioned'


class MinimalityRequired(RealizationError):
    code = 'minimality_required'


class InfeasibleCoupler(RealizationError):
    code = 'infeasible_coupler'


class PolePoint(RealizationError):
    code = 'pole_point'


class NoConvergence(RealizationError):
    code = 'no_convergence'


class DocumentError(RealizationError):
    code = 'invalid_document'
