"""Exception hierarchy shared across the package."""

from __future__ import annotations


class VsaError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_json(self) -> dict:
        payload = {"code": self.code, "message": self.message}
        payload.update(self.details)
        return payload


class MalformedDocument(VsaError):
    """Input text is not parseable JSON."""

    code = "malformed_document"


class SchemaViolation(VsaError):
    """A JSON document does not match the expected schema.

    ``path`` names the offending location, e.g. ``sub_tasks[1].status``.
    """

    code = "schema_violation"

    def __init__(self, message: str, path: str):
        super().__init__(message, path=path)
        self.path = path


class PathNotFound(VsaError):
    """A dotted path could not be fully resolved.

    ``prefix`` is the longest prefix that did resolve (may be empty).
    """

    code = "path_not_found"

    def __init__(self, message: str, prefix: str):
        super().__init__(message, prefix=prefix)
        self.prefix = prefix


class UnboundReference(VsaError):
    """A mapping source names a binding that was never provided."""

    code = "unbound_reference"


class InvalidMappingTarget(VsaError):
    """A mapping target path does not address a writable task field."""

    code = "invalid_mapping_target"


class TypeMismatch(VsaError):
    """An operation met a value of the wrong type (e.g. ordering on text)."""

    code = "type_mismatch"


class StorageFailure(VsaError):
    code = "storage_failure"


class ParseError(VsaError):
    """Remedy operation phrase rejected; ``position`` is the 0-based token index."""

    code = "parse_error"

    def __init__(self, message: str, position: int):
        super().__init__(message, position=position)
        self.position = position


class UnresolvableReference(VsaError):
    """A remedy reference selector matched zero or several runtime objects."""

    code = "unresolvable_reference"

    def __init__(self, message: str, alias: str):
        super().__init__(message, alias=alias)
        self.alias = alias


class TargetExecuted(VsaError):
    """A plan edit was aimed at a task that already executed."""

    code = "target_executed"


class RemedyStructureError(VsaError):
    """A remedy edit would corrupt the plan tree (e.g. inserting at the root)."""

    code = "remedy_structure_error"


class ActorUnknown(VsaError):
    code = "actor_unknown"


class UnknownReference(VsaError):
    """No agent function registered under the requested reference."""

    code = "unknown_reference"


class DuplicateReference(VsaError):
    code = "duplicate_reference"


class ActorFailure(VsaError):
    """An agent reported that it could not perform the requested action.

    ``detail`` is a value tree merged into the dispatching task's context.
    """

    code = "actor_failure"

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


class SimulationUnsupported(VsaError):
    """An actor has no simulation handler for the requested function."""

    code = "simulation_unsupported"


class NoTemplateFound(VsaError):
    code = "no_template_found"


class EscalationTimeout(VsaError):
    code = "escalation_timeout"


class ScriptError(VsaError):
    code = "script_error"
