"""Control-code generation: one script template per operation type,
instantiated with the operation's bound resources.

The generated program is straight-line; the BOP is already fully ordered.
Templates are editable text files shipped with the package, so a new
operation kind only needs a new template. A fasten op instantiates the
fasten template once per fastener joint (one screw pick and drive each).
"""

from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass

from .cellmatch import BOP, BoundOp
from .errors import MissingParam, MissingTemplate
from .pl import Ast, parse_text
from .sequencing import FASTEN, PLACE, UNLOAD
from .tooling import ROLE_ASSEMBLY_JIG, ROLE_CARRIER, ROLE_FEEDER, ROLE_INPUT_JIG, ROLE_SCREWDRIVER

_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


@dataclass(frozen=True)
class PLTemplate:
    op_kind: str
    body: str

    @property
    def required_params(self) -> tuple[str, ...]:
        seen = []
        for m in _PLACEHOLDER.finditer(self.body):
            if m.group(1) not in seen:
                seen.append(m.group(1))
        return tuple(seen)

    def instantiate(self, params: dict[str, str]) -> str:
        for name in self.required_params:
            if name not in params:
                raise MissingParam(name)
        return _PLACEHOLDER.sub(lambda m: params[m.group(1)], self.body)


def load_templates() -> dict[str, PLTemplate]:
    root = importlib.resources.files("asmcell").joinpath("templates")
    out = {}
    for kind in (UNLOAD, PLACE, FASTEN):
        entry = root.joinpath(f"{kind}.pl")
        out[kind] = PLTemplate(kind, entry.read_text(encoding="utf-8"))
    return out


def _require(op: BoundOp, role: str, short: str) -> str:
    value = op.resources.get(role)
    if value is None:
        raise MissingParam(short)
    return value


def render_op(template: PLTemplate, op: BoundOp) -> str:
    """Placeholder-free fragment for one bound operation."""
    kind = op.op.kind
    if template.op_kind != kind:
        raise MissingTemplate(kind)
    v = "v" + re.sub(r"\W", "_", op.op.op_id)
    if kind == UNLOAD:
        return template.instantiate(
            {"part": op.op.subject, "input_jig": _require(op, ROLE_INPUT_JIG, "input_jig")}
        )
    if kind == PLACE:
        return template.instantiate(
            {
                "v": v,
                "part": op.op.subject,
                "robot": _require(op, ROLE_CARRIER, "gripper"),
                "assembly_jig": _require(op, ROLE_ASSEMBLY_JIG, "assembly_jig"),
            }
        )
    if kind == FASTEN:
        fastener_joints = [j["joint_id"] for j in op.targets.get("joints", [])]
        fragments = []
        for k, joint_id in enumerate(fastener_joints):
            fragments.append(
                template.instantiate(
                    {
                        "v": f"{v}_{k}",
                        "joint": joint_id,
                        "robot": _require(op, ROLE_SCREWDRIVER, "screwdriver"),
                        "feeder": _require(op, ROLE_FEEDER, "screw_feeder"),
                        "assembly_jig": _require(op, ROLE_ASSEMBLY_JIG, "assembly_jig"),
                    }
                )
            )
        return "".join(fragments)
    raise MissingTemplate(kind)


@dataclass(frozen=True)
class PLProgram:
    source: str
    provenance: tuple[tuple[int, int, str], ...]  # (first line, last line, op_id)
    statement_spans: tuple[tuple[int, int, str], ...]  # (first stmt, last stmt, op_id)

    def op_for_statement(self, index: int) -> str | None:
        for start, end, op_id in self.statement_spans:
            if start <= index <= end:
                return op_id
        return None

    def provenance_json(self) -> list[dict]:
        return [
            {"start_line": a, "end_line": b, "op_id": op_id, "start_statement": sa, "end_statement": sb}
            for (a, b, op_id), (sa, sb, _) in zip(self.provenance, self.statement_spans)
        ]


def generate_program(bop: BOP, templates: dict[str, PLTemplate]) -> PLProgram:
    """Concatenate per-op fragments, with op-id comments, and verify the
    whole program parses."""
    pieces: list[str] = []
    provenance: list[tuple[int, int, str]] = []
    spans: list[tuple[int, int, str]] = []
    line = 1
    stmt = 0
    for op in bop.ops:
        template = templates.get(op.op.kind)
        if template is None:
            raise MissingTemplate(op.op.kind)
        fragment = render_op(template, op)
        block = f"# op: {op.op.op_id}\n{fragment}"
        n_lines = block.count("\n") + (0 if block.endswith("\n") else 1)
        n_stmts = len(parse_text(fragment).statements)
        provenance.append((line, line + n_lines - 1, op.op.op_id))
        spans.append((stmt, stmt + n_stmts - 1, op.op.op_id))
        pieces.append(block)
        line += n_lines
        stmt += n_stmts
    source = "".join(pieces)
    parse_text(source)  # must parse as a whole
    return PLProgram(source, tuple(provenance), tuple(spans))


def program_ast(program: PLProgram) -> Ast:
    return parse_text(program.source)
