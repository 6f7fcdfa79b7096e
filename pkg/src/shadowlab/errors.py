"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the CLI copies
into its JSON error document.
"""

from __future__ import annotations


class ShadowlabError(Exception):
    code = "error"

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return out


def _jsonable(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return repr(v)


class InvalidArgument(ShadowlabError, ValueError):
    code = "invalid-argument"


class DomainError(ShadowlabError, ValueError):
    code = "domain-error"


class ConfigError(ShadowlabError, ValueError):
    code = "config-error"


class ResolutionError(ShadowlabError, ValueError):
    code = "resolution-too-coarse"


class NotChainConnected(ShadowlabError):
    code = "not-chain-connected"


class ShadowingUnsupported(ShadowlabError):
    code = "shadowing-unsupported"


class Infeasible(ShadowlabError):
    code = "infeasible"


class NotClosable(ShadowlabError):
    code = "not-closable"


class BudgetExceeded(ShadowlabError):
    code = "budget-exceeded"

    def __init__(self, message: str = "", best=None, **details):
        super().__init__(message, **details)
        self.best = best


class GeneratorMismatch(ShadowlabError):
    code = "generator-mismatch"


class RegionIncompatibility(ShadowlabError):
    code = "region-incompatibility"


class ConstantsInfeasible(ShadowlabError):
    code = "constants-infeasible"


class AssemblyError(ShadowlabError):
    code = "assembly-error"


class InvalidChoices(ShadowlabError, ValueError):
    code = "invalid-choices"


class FamilyIncomplete(ShadowlabError):
    code = "family-incomplete"


class HorizonTooShort(ShadowlabError, ValueError):
    code = "horizon-too-short"


class AuditRefused(ShadowlabError):
    code = "audit-refused"
