"""Exception types shared across the pipeline stages."""

from __future__ import annotations


class AsmError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------- geometry

class InvalidMesh(AsmError):
    """Mesh is empty, non-manifold, inconsistently wound or inside-out."""


# ---------------------------------------------------------------- design i/o

class SchemaError(AsmError):
    """Document does not match the expected structure.

    ``path`` points at the offending field, e.g. ``parts[2].mesh.triangles``.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class GeometryError(AsmError):
    """A mesh embedded in a design document failed validation."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class DanglingReferenceError(AsmError):
    """An id points at an entity that does not exist in the document."""

    def __init__(self, ref: str, context: str):
        super().__init__(f"{context} references unknown id {ref!r}")
        self.ref = ref
        self.context = context


# ---------------------------------------------------------------- sequencing

class DisconnectedGraph(AsmError):
    """Liaison graph has more than one component; no single product."""


class CycleDetected(AsmError):
    """Operation precedence graph contains a cycle."""


# ---------------------------------------------------------------- tooling

class DuplicateToolId(AsmError):
    def __init__(self, tool_id: str):
        super().__init__(f"tool id {tool_id!r} already registered")
        self.tool_id = tool_id


class ToolingValidationError(AsmError):
    """Tooling record is internally inconsistent (e.g. jig without seat pose)."""


class MissingTooling(AsmError):
    """No tooling model in the database can serve an operation role."""

    def __init__(self, op_id: str, role: str, model: str):
        super().__init__(f"op {op_id}: no {role} for model {model!r}")
        self.op_id = op_id
        self.role = role
        self.model = model


# ---------------------------------------------------------------- cell match

class NoCellsError(AsmError):
    """select_cell was handed an empty cell list."""


# ---------------------------------------------------------------- codegen

class MissingParam(AsmError):
    def __init__(self, name: str):
        super().__init__(f"template parameter {name!r} not bound")
        self.name = name


class MissingTemplate(AsmError):
    def __init__(self, kind: str):
        super().__init__(f"no template for operation kind {kind!r}")
        self.kind = kind


# ---------------------------------------------------------------- process language

class LexError(AsmError):
    def __init__(self, line: int, col: int, char: str):
        super().__init__(f"line {line}, col {col}: unexpected character {char!r}")
        self.line = line
        self.col = col
        self.char = char


class ParseError(AsmError):
    def __init__(self, position: tuple[int, int], expected: str, found: str = ""):
        msg = f"line {position[0]}, col {position[1]}: expected {expected}"
        if found:
            msg += f", found {found}"
        super().__init__(msg)
        self.position = position
        self.expected = expected
        self.found = found


class UnboundVariable(AsmError):
    def __init__(self, name: str, position: tuple[int, int] | None = None):
        super().__init__(f"variable {name!r} used before definition")
        self.name = name
        self.position = position


class UnknownAbility(AsmError):
    def __init__(self, name: str):
        super().__init__(f"no registered ability {name!r}")
        self.name = name


class ArgTypeMismatch(AsmError):
    def __init__(self, ability: str, arg: str, expected: str, got: str):
        super().__init__(f"{ability}({arg}=...): expected {expected}, got {got}")
        self.ability = ability
        self.arg = arg
        self.expected = expected
        self.got = got


class AbilityError(AsmError):
    """Runtime failure inside an ability; ``reason`` is a stable code.

    Reasons used by the twin: unreachable, in_collision, not_found,
    model_not_held, already_present, nothing_to_grasp, no_gripper,
    no_screwdriver, not_aligned, parts_not_placed, not_a_fastener,
    limit_violation.
    """

    def __init__(self, reason: str, detail: str = "", objects: list[str] | None = None):
        msg = reason if not detail else f"{reason}: {detail}"
        super().__init__(msg)
        self.reason = reason
        self.detail = detail
        self.objects = objects or []


# ---------------------------------------------------------------- twin

class UnknownTool(AsmError):
    def __init__(self, tool_id: str, context: str):
        super().__init__(f"{context} references unknown tool {tool_id!r}")
        self.tool_id = tool_id
        self.context = context


class DimensionMismatch(AsmError):
    """Joint vector length does not match the kinematic chain."""
